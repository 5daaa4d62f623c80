#ifndef COAGFRAG_SECTIONAL_HPP
#define COAGFRAG_SECTIONAL_HPP

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "coagfrag/dislocation.hpp"
#include "coagfrag/kernels.hpp"

namespace coagfrag {

// Deterministic solver state: support points with nonnegative concentrations.
// "Weight" is a particle count density; the mass carried at x_g is w_g * x_g.
struct AtomicMeasure {
  std::vector<double> x;  // strictly increasing, > 0
  std::vector<double> w;  // >= 0

  AtomicMeasure() = default;
  AtomicMeasure(std::vector<double> support, std::vector<double> weights);

  std::size_t size() const { return x.size(); }
  double moment(double lambda) const;           // sum w_g x_g^lambda, any real lambda
  double total_number() const { return moment(0.0); }
  double total_mass() const { return moment(1.0); }
  /// Tail count on the open interval (x, inf): sum of weights with x_g > x.
  double primitive(double at) const;
  /// Pairing <phi, c> = sum phi(x_g) w_g.
  double pairing(const std::function<double(double)>& phi) const;
  /// Restriction to the closed interval [lo, hi].
  AtomicMeasure restricted(double lo, double hi) const;
  /// Drops zero-weight sites.
  AtomicMeasure compacted() const;
};

/// Exact value of the weighted tail-difference integral
/// int_0^inf x^(lambda-1) |F^c(x) - F^d(x)| dx over the merged breakpoint
/// partition; the integrand vanishes beyond the largest support point.
double uniqueness_distance(const AtomicMeasure& c, const AtomicMeasure& d, double lambda);

struct GridPolicy {
  enum class Kind { FixedSupport, Geometric };
  enum class Overflow { Bucket, Error };
  Kind kind = Kind::Geometric;
  double ratio = 2.0;        // geometric spacing
  double x_min = 0x1p-40;
  double x_max = 0x1p16;
  std::size_t max_points = 4096;  // closure cap for fixed-support grids
  Overflow overflow = Overflow::Bucket;
  void validate() const;
};

// Discretization support shared by a run. Off-grid masses rebin by two-point
// allocation between the bracketing neighbors (number and mass preserved);
// below-range masses collapse onto the smallest point mass-conservingly;
// above-range mass goes to the overflow bucket (or raises GridOverflow).
class Grid {
 public:
  static Grid build(const GridPolicy& policy, const AtomicMeasure& c0);

  const std::vector<double>& points() const { return x_; }
  std::size_t size() const { return x_.size(); }
  const GridPolicy& policy() const { return policy_; }

  struct Deposit {
    std::ptrdiff_t lo = -1, hi = -1;  // indices; -1 when unused
    double w_lo = 0, w_hi = 0;        // number allocations
    double overflow_mass = 0;         // mass leaving the grid above x_max
  };
  /// Split a number amount sitting at mass `mass` onto the grid.
  Deposit place(double mass, double number) const;

  /// Rebins an arbitrary measure onto the grid (used for initial data).
  std::vector<double> rebin(const AtomicMeasure& c, double* overflow_mass) const;
  AtomicMeasure measure(const std::vector<double>& w) const;

 private:
  GridPolicy policy_;
  std::vector<double> x_;
};

struct SolveConfig {
  double dt = 1e-3;
  double t_max = 1.0;
  double lambda = 1.0;
  enum class Scheme { Euler, Picard };
  Scheme scheme = Scheme::Euler;
  double picard_tol = 1e-10;
  int picard_max_iters = 64;
  double snapshot_dt = 0.05;
  bool parallel = true;
  void validate() const;
};

struct MomentSnapshot {
  double t;
  double m0, m_lambda, m1;
  double overflow_mass;
};

struct SolveResult {
  std::vector<MomentSnapshot> snapshots;
  std::vector<std::pair<double, std::vector<double>>> checkpoints;  // (t, weights)
  AtomicMeasure final_measure;  // compacted
  std::vector<double> final_weights;  // full grid vector
  double overflow_mass = 0.0;
  int picard_iterations = 0;
  double picard_last_gap = 0.0;
};

/// Instantaneous rate of change of the weights: coagulation gain at rebinned
/// pair sums, per-site coagulation loss, fragmentation gain at rebinned
/// theta_k x_g, fragmentation loss. Also reports each site's per-unit removal
/// rate (for the explicit stability guard) and the overflow mass rate.
struct GeneratorRates {
  std::vector<double> dw;
  std::vector<double> removal_per_unit;
  double overflow_mass_rate = 0.0;
};
GeneratorRates apply_generator(const Grid& grid, const std::vector<double>& w,
                               const CoagKernel& K, const FragKernel& F,
                               const DislocationMeasure& beta, bool parallel = true);

/// Convenience wrapper evaluating the generator on the measure's own grid.
GeneratorRates apply_generator(const AtomicMeasure& c, const CoagKernel& K, const FragKernel& F,
                               const DislocationMeasure& beta, const GridPolicy& policy,
                               Grid* grid_out = nullptr);

/// Forward Euler with the positivity guard dt * max removal rate <= 0.5;
/// throws StabilityError (with a suggested dt) when the guard fails.
SolveResult solve_euler(const AtomicMeasure& c0, const CoagKernel& K, const FragKernel& F,
                        const DislocationMeasure& beta, const SolveConfig& cfg,
                        const GridPolicy& policy);

/// Bounded-case fixed point: outer iteration freezing the previous iterate,
/// inner linear solves through the integrating-factor transform (positivity is
/// exact). Throws NoConvergence after picard_max_iters.
SolveResult solve_picard(const AtomicMeasure& c0, const CoagKernel& K, const FragKernel& F,
                         const DislocationMeasure& beta, const SolveConfig& cfg,
                         const GridPolicy& policy);

SolveResult solve(const AtomicMeasure& c0, const CoagKernel& K, const FragKernel& F,
                  const DislocationMeasure& beta, const SolveConfig& cfg,
                  const GridPolicy& policy);

/// Total-variation distance between weight vectors on a shared grid.
double tv_distance(const std::vector<double>& a, const std::vector<double>& b);

struct TruncationRow {
  std::size_t level_lo, level_hi;
  double distance;  // uniqueness_distance of the two final measures
};

/// Solves per level with (K ∧ n, beta truncated at n, c0 restricted to
/// [1/n, n]) and tabulates distances between consecutive levels at t_max.
std::vector<TruncationRow> truncation_cauchy_check(const AtomicMeasure& c0, const CoagKernel& K,
                                                   const FragKernel& F,
                                                   const DislocationMeasure& beta,
                                                   const SolveConfig& cfg,
                                                   const GridPolicy& policy,
                                                   const std::vector<std::size_t>& levels);

struct MomentBoundReport {
  bool ok = true;
  double worst_excess = 0.0;  // max of (M_lambda - bound)/bound
  std::vector<MomentSnapshot> violations;
};

/// Checks M_lambda(c_t) <= M_lambda(c_0) exp(kappa2 C_beta^lambda t) at every
/// snapshot, 1e-6 relative tolerance.
MomentBoundReport moment_bound_check(const std::vector<MomentSnapshot>& snaps, double kappa2,
                                     double c_beta_lambda);

}  // namespace coagfrag

#endif
