#ifndef COAGFRAG_STOCHASTIC_HPP
#define COAGFRAG_STOCHASTIC_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "coagfrag/dislocation.hpp"
#include "coagfrag/kernels.hpp"
#include "coagfrag/particle_state.hpp"
#include "coagfrag/rng.hpp"

namespace coagfrag {

enum class RecordMode { Events, Snapshots };

struct SimConfig {
  double t_max = 1.0;
  uint64_t seed = 0;
  double lambda = 1.0;                 // exponent for the ||.||_lambda observable
  std::optional<double> tau_cap;       // stop when ||M||_lambda >= cap
  uint64_t max_events = 1'000'000;
  RecordMode record = RecordMode::Events;
  double snapshot_dt = 0.1;
  void validate() const;
};

enum class EventKind { Coalesce, Fragment };

struct Event {
  double time;
  EventKind kind;
  uint32_t i;          // first rank
  uint32_t j_or_atom;  // partner rank (coalesce) or atom index (fragment)
  uint32_t n_particles;
  double mass_total;
  double norm_lambda;
};

struct Snapshot {
  double time;
  double mass;
  double norm_lambda;
  uint32_t n_particles;
};

enum class StopReason { Horizon, TauCap, EventBudget, Absorbed };

struct Trajectory {
  std::vector<Event> events;
  std::vector<Snapshot> snapshots;
  ParticleState final_state;
  double t_end = 0.0;
  uint64_t n_events = 0;
  double sup_norm_lambda = 0.0;
  StopReason stop = StopReason::Horizon;
  uint64_t seed = 0;
};

struct CoupledTrajectory {
  Trajectory a, b;
  std::vector<std::pair<double, double>> distance_series;  // (time, d_lambda)
  double sup_distance = 0.0;
  double final_distance = 0.0;
  uint64_t joint_events = 0, solo_a_events = 0, solo_b_events = 0;
};

/// Total jump rates: rho_c = sum_{i<j} K(m_i, m_j), rho_f = beta(Theta) sum_i F(m_i).
std::pair<double, double> total_rates(const ParticleState& m, const CoagKernel& K,
                                      const FragKernel& F, const DislocationMeasure& beta);

struct StepResult {
  double waiting_time;  // infinity on absorption
  std::optional<Event> event;
  ParticleState state;
};

/// One jump of the embedded chain: exponential waiting time at the total rate,
/// categorical event selection, jump map applied. Absorbing when the total
/// rate is zero; throws RateOverflow when it is not finite.
StepResult step(const ParticleState& m, const CoagKernel& K, const FragKernel& F,
                const DislocationMeasure& beta, Philox& rng);

Trajectory simulate(const ParticleState& m0, const CoagKernel& K, const FragKernel& F,
                    const DislocationMeasure& beta, const SimConfig& cfg);

/// Two processes driven by shared randomness: per ranked channel, a joint jump
/// at the minimum of the two rates and solo jumps at the positive excesses.
/// Processes started equal stay equal, event for event.
CoupledTrajectory simulate_coupled(const ParticleState& m0, const ParticleState& mt0,
                                   const CoagKernel& K, const FragKernel& F,
                                   const DislocationMeasure& beta, const SimConfig& cfg);

struct Summary {
  double mean = 0, variance = 0, stderr_mean = 0, min = 0, max = 0;
};

struct EnsembleStats {
  uint64_t replicas = 0;
  Summary sup_norm_lambda;
  Summary final_n_particles;
  Summary final_mass;
  Summary n_events;
  std::vector<double> per_replica_sup_norm;  // replica-ordered
};

struct CoupledEnsembleStats {
  uint64_t replicas = 0;
  Summary sup_distance;
  Summary final_distance;
};

/// Replica k runs on the stream derived from (master seed, k); aggregation is
/// a replica-ordered reduction, so results do not depend on scheduling.
EnsembleStats ensemble(const ParticleState& m0, const CoagKernel& K, const FragKernel& F,
                       const DislocationMeasure& beta, const SimConfig& cfg, uint64_t replicas,
                       bool parallel = true);

CoupledEnsembleStats ensemble_coupled(const ParticleState& m0, const ParticleState& mt0,
                                      const CoagKernel& K, const FragKernel& F,
                                      const DislocationMeasure& beta, const SimConfig& cfg,
                                      uint64_t replicas, bool parallel = true);

/// Coefficient of the coupled-distance growth bound
/// E[sup d_lambda] <= d_lambda(0) exp(coef * t): 8 kappa_a x
/// + 8 mu_a C_beta^lambda C_{alpha,lambda} (||m||_1^alpha v ||mt||_1^alpha)
/// + Fbar C_beta^lambda, with C_{a,b} = 2(a+b)/b. Requires Hoelder constants.
std::optional<double> coupled_contraction_coefficient(const ParticleState& m0,
                                                      const ParticleState& mt0,
                                                      const CoagKernel& K, const FragKernel& F,
                                                      const DislocationMeasure& beta,
                                                      double lambda, double tau_cap);

}  // namespace coagfrag

#endif
