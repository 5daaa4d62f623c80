#ifndef COAGFRAG_IO_HPP
#define COAGFRAG_IO_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "coagfrag/dislocation.hpp"
#include "coagfrag/kernels.hpp"
#include "coagfrag/sectional.hpp"
#include "coagfrag/stochastic.hpp"

namespace coagfrag {

using Json = nlohmann::ordered_json;

/// 17 significant digits; round-trips 64-bit floats exactly.
std::string fmt_g17(double v);

/// FNV-1a 64-bit content digest, 16 hex characters.
std::string fnv1a_hex(const std::string& bytes);
std::string digest_file(const std::filesystem::path& p);

// ---- kernel / measure (de)serialization ------------------------------------

Json coag_kernel_to_json(const CoagKernel& k);
CoagKernel coag_kernel_from_json(const Json& j);
Json frag_kernel_to_json(const FragKernel& f);
FragKernel frag_kernel_from_json(const Json& j);
Json beta_to_json(const DislocationMeasure& beta);
DislocationMeasure beta_from_json(const Json& j);
Json state_to_json(const ParticleState& m);  // descending array of numbers

// ---- run configuration ------------------------------------------------------

struct RunConfig {
  Json raw;  // full document echo
  CoagKernel coag;
  FragKernel frag;
  DislocationMeasure beta;

  // initial data: particle list and/or measure, depending on the mode
  std::optional<ParticleState> initial_state;
  std::optional<ParticleState> initial_state_b;  // second process (couple)
  std::optional<AtomicMeasure> initial_measure;

  SimConfig sim;
  uint64_t replicas = 1;

  SolveConfig solver;
  GridPolicy grid;

  uint64_t audit_cases = 10000;
  double verify_eps = 1e-3;
  int verify_points = 64;
  std::vector<std::size_t> levels = {4, 8, 16, 32};
};

/// Parses and validates a config document; throws Error(InvalidConfig) with a
/// message naming the offending field. `seed_override` (from --seed) wins over
/// the config value; the COAGFRAG_SEED environment variable is the fallback
/// when neither is present.
RunConfig parse_config(const Json& doc, const std::string& mode,
                       std::optional<uint64_t> seed_override);

// ---- output writers ----------------------------------------------------------

void write_text_file(const std::filesystem::path& p, const std::string& content);

std::string trajectory_csv(const Trajectory& t);
std::string snapshots_csv(const Trajectory& t);
std::string distance_csv(const CoupledTrajectory& t);
std::string moments_csv(const std::vector<MomentSnapshot>& snaps);
std::string measure_csv(const AtomicMeasure& m);

struct Manifest {
  std::string tool_version;
  std::string command;
  uint64_t master_seed = 0;
  std::string config_digest;
  Json config_echo;
  std::vector<std::pair<std::string, std::string>> inputs;   // (path, digest)
  std::vector<std::pair<std::string, std::string>> outputs;  // (path, digest)
  int64_t wall_clock_ms = 0;
  uint64_t event_count = 0;
  Json to_json() const;
};

extern const char* kToolVersion;

}  // namespace coagfrag

#endif
