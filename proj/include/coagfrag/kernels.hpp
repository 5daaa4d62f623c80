#ifndef COAGFRAG_KERNELS_HPP
#define COAGFRAG_KERNELS_HPP

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "coagfrag/expr.hpp"

namespace coagfrag {

// Sample grid for the numeric hypothesis checks: a log-spaced sweep of
// (eps, 1/eps), squared for two-variable checks.
struct GridSpec {
  double eps = 1e-3;
  int points = 64;
  std::vector<double> points_1d() const;
};

struct HypothesisViolation {
  std::string check;
  double x = 0, y = 0;
  double lhs = 0, rhs = 0;
};

// Violations are data, not errors; an empty list means "consistent at this
// resolution", never a proof.
struct HypothesisReport {
  std::string kernel;
  long samples = 0;
  double worst_margin = -1.0;  // max of (lhs - rhs)/max(1,rhs) over samples
  std::vector<HypothesisViolation> violations;
  bool consistent() const { return violations.empty(); }
};

enum class CoagFamily {
  Constant,   // c
  SumPow,     // (x^a + y^a)^b,   lambda = a*b
  SymProd,    // x^a y^b + x^b y^a, 0 <= a <= b <= 1, lambda = a+b
  ProdFrac,   // (xy)^(a/2) (x+y)^-b, lambda = a-b
  DiffPow,    // (x^a + y^a)^b |x^g - y^g|, lambda = a*b+g
  ExpDamped,  // (x+y)^lambda exp(-b (x+y)^-a)
  Custom,     // parsed expression in x, y
};

// Rate of merging masses x and y. Symmetry is structural: evaluation
// canonicalizes x <= y, so K(x,y) and K(y,x) run the identical float
// expression. K(x,0) = K(0,y) = 0 by convention.
struct CoagKernel {
  CoagFamily family = CoagFamily::Constant;
  double c = 1.0, a = 0.0, b = 0.0, g = 0.0;  // family parameters
  double lambda = 1.0;                        // homogeneity exponent
  double kappa0 = 1.0;                        // growth constant, K <= kappa0 (x+y)^lambda
  double kappa1 = 1.0;                        // derivative constant
  std::optional<double> declared_holder_kappa;  // user-declared kappa_a when no analytic value
  std::optional<double> truncation;             // pointwise cap, K ∧ n
  bool deterministic_track = false;
  Expr custom;

  double eval(double x, double y) const;
  /// kappa_a of the local Hoelder condition |K(x,y)-K(x',y')| <= kappa_a(|x^l-x'^l|+|y^l-y'^l|)
  /// on (0,a]^2; analytic for the families where it is proven, else the declared value.
  std::optional<double> holder_kappa(double a_box) const;
  /// sup of K over [0,hi]^2 (exact per family).
  double sup_on_box(double hi) const;
  void validate() const;  // throws DomainError on parameter violations
  std::string describe() const;
};

/// Pointwise cap K ∧ cap; inherits symmetry, conventions and growth bounds.
CoagKernel truncate_kernel(const CoagKernel& k, double cap);

enum class FragFamily {
  Constant,    // c
  BoundedInv,  // c / (1 + x)
  Power,       // c x^a   (unbounded; stochastic track only when a > 0)
  Custom,
};

// Rate of dislocation of a particle of mass x. F(0) = 0 by convention.
struct FragKernel {
  FragFamily family = FragFamily::Constant;
  double c = 1.0, a = 0.0;
  double kappa2 = 1.0;  // uniform bound, F <= kappa2
  double kappa3 = 1.0;  // derivative constant, |F'| <= kappa3/x
  double alpha = 0.0;   // Hoelder exponent of |F(x)-F(x')| <= mu_a |x^alpha - x'^alpha|
  std::optional<double> declared_holder_mu;
  bool deterministic_track = false;
  Expr custom;

  double eval(double x) const;
  std::optional<double> holder_mu(double a_box) const;
  /// sup of F over (0, hi] (exact per family; the F(0)=0 convention is a point exception).
  double sup_on(double hi) const;
  void validate() const;
  std::string describe() const;
};

/// Sweeps (Hyp growth) K <= kappa0 (x+y)^lambda and the central-finite-difference
/// proxy of (x^l ∧ y^l)|dK/dx| <= kappa1 x^(l-1) y^l over grid x grid; when a
/// Hoelder constant is available, spot-checks it on pseudo-random pairs.
HypothesisReport verify_coag_hypothesis(const CoagKernel& k, const GridSpec& grid);

/// Sweeps F <= kappa2 and the finite-difference proxy of |F'| <= kappa3/x.
HypothesisReport verify_frag_hypothesis(const FragKernel& f, const GridSpec& grid);

/// x^lambda with the cheap exact branches for lambda = 1 and 1/2.
inline double pow_lambda(double x, double lambda) {
  if (lambda == 1.0) return x;
  if (lambda == 0.5) return std::sqrt(x);
  return std::pow(x, lambda);
}

}  // namespace coagfrag

#endif
