#include "coagfrag/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "coagfrag/errors.hpp"
#include "coagfrag/rng.hpp"

namespace coagfrag {

std::vector<double> GridSpec::points_1d() const {
  std::vector<double> xs;
  xs.reserve(points);
  double lo = std::log(eps), hi = std::log(1.0 / eps);
  for (int i = 0; i < points; ++i) {
    double t = points == 1 ? 0.5 : static_cast<double>(i) / (points - 1);
    xs.push_back(std::exp(lo + t * (hi - lo)));
  }
  return xs;
}

namespace {

double eval_coag_raw(const CoagKernel& k, double x, double y) {
  switch (k.family) {
    case CoagFamily::Constant:
      return k.c;
    case CoagFamily::SumPow:
      return k.c * std::pow(std::pow(x, k.a) + std::pow(y, k.a), k.b);
    case CoagFamily::SymProd:
      return k.c * (std::pow(x, k.a) * std::pow(y, k.b) + std::pow(x, k.b) * std::pow(y, k.a));
    case CoagFamily::ProdFrac:
      return k.c * std::pow(x * y, k.a / 2.0) * std::pow(x + y, -k.b);
    case CoagFamily::DiffPow:
      return k.c * std::pow(std::pow(x, k.a) + std::pow(y, k.a), k.b) *
             std::abs(std::pow(x, k.g) - std::pow(y, k.g));
    case CoagFamily::ExpDamped:
      return k.c * std::pow(x + y, k.lambda) * std::exp(-k.b * std::pow(x + y, -k.a));
    case CoagFamily::Custom:
      return k.c * k.custom.eval(x, y);
  }
  return 0.0;
}

}  // namespace

double CoagKernel::eval(double x, double y) const {
  if (!(x > 0.0) || !(y > 0.0)) return 0.0;  // K(x,0) = K(0,y) = 0
  if (x > y) std::swap(x, y);                // structural symmetry
  double v = eval_coag_raw(*this, x, y);
  if (truncation) v = std::min(v, *truncation);
  return v;
}

std::optional<double> CoagKernel::holder_kappa(double /*a_box*/) const {
  // Analytic values where proven: constants contract to 0; (x+y)^l and
  // x^l + y^l are 1-Lipschitz in (x^l, y^l).
  switch (family) {
    case CoagFamily::Constant:
      return 0.0;
    case CoagFamily::SumPow:
      if (a == 1.0) return c;  // |(x+y)^l - (x'+y')^l| <= |x^l-x'^l|+|y^l-y'^l|
      break;
    case CoagFamily::SymProd:
      if (a == 0.0) return c;  // K = c(x^b + y^b), 1-Lipschitz in (x^b, y^b) up to c
      break;
    default:
      break;
  }
  return declared_holder_kappa;
}

double CoagKernel::sup_on_box(double hi) const {
  switch (family) {
    case CoagFamily::Constant:
      return c;
    case CoagFamily::SumPow:
    case CoagFamily::SymProd:
    case CoagFamily::DiffPow:
    case CoagFamily::ExpDamped:
    case CoagFamily::ProdFrac: {
      // All catalogue families are non-decreasing in each argument on the
      // diagonal closure; sample the boundary to stay family-agnostic.
      double best = 0.0;
      const int n = 256;
      for (int i = 1; i <= n; ++i) {
        double t = hi * static_cast<double>(i) / n;
        best = std::max(best, eval(t, hi));
        best = std::max(best, eval(t, t));
      }
      return best;
    }
    case CoagFamily::Custom: {
      double best = 0.0;
      const int n = 128;
      for (int i = 1; i <= n; ++i)
        for (int j = i; j <= n; ++j)
          best = std::max(best, eval(hi * i / n, hi * j / n));
      return best;
    }
  }
  return 0.0;
}

void CoagKernel::validate() const {
  if (deterministic_track && !(lambda > 0.0 && lambda <= 1.0))
    throw Error(ErrorCode::DomainError, "coagulation kernel: lambda must be in (0,1]");
  switch (family) {
    case CoagFamily::SumPow:
      if (!(a > 0.0) || !(b > 0.0))
        throw Error(ErrorCode::DomainError, "sum_pow kernel: requires a > 0 and b > 0");
      break;
    case CoagFamily::SymProd:
      if (!(0.0 <= a && a <= b && b <= 1.0))
        throw Error(ErrorCode::DomainError, "sym_prod kernel: requires 0 <= a <= b <= 1");
      break;
    case CoagFamily::ProdFrac:
      if (!(a > 0.0 && a <= 1.0) || !(b >= 0.0))
        throw Error(ErrorCode::DomainError, "prod_frac kernel: requires a in (0,1], b >= 0");
      break;
    case CoagFamily::DiffPow:
      if (!(a > 0.0) || !(b > 0.0) || !(g > 0.0 && g <= 1.0))
        throw Error(ErrorCode::DomainError, "diff_pow kernel: requires a,b > 0 and g in (0,1]");
      break;
    case CoagFamily::ExpDamped:
      if (!(a > 0.0) || !(b > 0.0))
        throw Error(ErrorCode::DomainError, "exp_damped kernel: requires a > 0 and b > 0");
      break;
    case CoagFamily::Constant:
      if (!(c >= 0.0)) throw Error(ErrorCode::DomainError, "constant kernel: c must be >= 0");
      break;
    case CoagFamily::Custom:
      if (custom.empty()) throw Error(ErrorCode::DomainError, "custom kernel: empty expression");
      break;
  }
}

std::string CoagKernel::describe() const {
  switch (family) {
    case CoagFamily::Constant: return "constant";
    case CoagFamily::SumPow: return "sum_pow";
    case CoagFamily::SymProd: return "sym_prod";
    case CoagFamily::ProdFrac: return "prod_frac";
    case CoagFamily::DiffPow: return "diff_pow";
    case CoagFamily::ExpDamped: return "exp_damped";
    case CoagFamily::Custom: return "custom";
  }
  return "?";
}

CoagKernel truncate_kernel(const CoagKernel& k, double cap) {
  if (!(cap > 0.0)) throw Error(ErrorCode::DomainError, "truncate_kernel: cap must be > 0");
  CoagKernel out = k;
  out.truncation = out.truncation ? std::min(*out.truncation, cap) : cap;
  return out;
}

double FragKernel::eval(double x) const {
  if (!(x > 0.0)) return 0.0;  // F(0) = 0
  switch (family) {
    case FragFamily::Constant: return c;
    case FragFamily::BoundedInv: return c / (1.0 + x);
    case FragFamily::Power: return a == 0.0 ? c : c * std::pow(x, a);
    case FragFamily::Custom: return custom.eval(x);
  }
  return 0.0;
}

std::optional<double> FragKernel::holder_mu(double /*a_box*/) const {
  switch (family) {
    case FragFamily::Constant: return 0.0;   // alpha arbitrary
    case FragFamily::BoundedInv: return c;   // |F(x)-F(x')| <= c|x-x'|, alpha = 1
    case FragFamily::Power: return c;        // exactly c|x^a - x'^a|
    case FragFamily::Custom: return declared_holder_mu;
  }
  return declared_holder_mu;
}

double FragKernel::sup_on(double hi) const {
  switch (family) {
    case FragFamily::Constant: return c;
    case FragFamily::BoundedInv: return c;  // sup at x -> 0+
    case FragFamily::Power: return a == 0.0 ? c : c * std::pow(hi, a);
    case FragFamily::Custom: {
      double best = 0.0;
      const int n = 1024;
      for (int i = 1; i <= n; ++i) best = std::max(best, eval(hi * i / n));
      return best;
    }
  }
  return 0.0;
}

void FragKernel::validate() const {
  if (!(c >= 0.0)) throw Error(ErrorCode::DomainError, "fragmentation kernel: c must be >= 0");
  if (family == FragFamily::Power) {
    if (!(a >= 0.0)) throw Error(ErrorCode::DomainError, "power fragmentation kernel: a must be >= 0");
    if (deterministic_track && a > 0.0)
      throw Error(ErrorCode::DomainError,
                  "power fragmentation kernel: unbounded, not admissible on the deterministic track");
  }
  if (family == FragFamily::Custom && custom.empty())
    throw Error(ErrorCode::DomainError, "custom fragmentation kernel: empty expression");
  if (!(alpha >= 0.0)) throw Error(ErrorCode::DomainError, "fragmentation kernel: alpha must be >= 0");
}

std::string FragKernel::describe() const {
  switch (family) {
    case FragFamily::Constant: return "constant";
    case FragFamily::BoundedInv: return "bounded_inv";
    case FragFamily::Power: return "power";
    case FragFamily::Custom: return "custom";
  }
  return "?";
}

namespace {

void note(HypothesisReport& rep, const std::string& check, double x, double y, double lhs,
          double rhs, double tol) {
  double margin = (lhs - rhs) / std::max(1.0, std::abs(rhs));
  rep.worst_margin = std::max(rep.worst_margin, margin);
  ++rep.samples;
  if (lhs > rhs + tol * std::max(1.0, std::max(std::abs(lhs), std::abs(rhs))))
    rep.violations.push_back({check, x, y, lhs, rhs});
}

}  // namespace

HypothesisReport verify_coag_hypothesis(const CoagKernel& k, const GridSpec& grid) {
  HypothesisReport rep;
  rep.kernel = k.describe();
  auto xs = grid.points_1d();
  for (double x : xs) {
    for (double y : xs) {
      double v = k.eval(x, y);
      note(rep, "growth", x, y, v, k.kappa0 * std::pow(x + y, k.lambda), 1e-12);
      // central finite difference, step 1e-6 x
      double h = 1e-6 * x;
      double dk = (k.eval(x + h, y) - k.eval(x - h, y)) / (2.0 * h);
      double lhs = std::min(pow_lambda(x, k.lambda), pow_lambda(y, k.lambda)) * std::abs(dk);
      double rhs = k.kappa1 * std::pow(x, k.lambda - 1.0) * pow_lambda(y, k.lambda);
      note(rep, "derivative", x, y, lhs, rhs, 1e-6);
    }
  }
  if (auto kap = k.holder_kappa(1.0 / grid.eps)) {
    Philox rng(0x9E3779B97F4A7C15ull, 7);
    double a_box = 1.0 / grid.eps;
    for (int i = 0; i < 4096; ++i) {
      double x = a_box * rng.uniform(), y = a_box * rng.uniform();
      double xt = a_box * rng.uniform(), yt = a_box * rng.uniform();
      double lhs = std::abs(k.eval(x, y) - k.eval(xt, yt));
      double rhs = *kap * (std::abs(pow_lambda(x, k.lambda) - pow_lambda(xt, k.lambda)) +
                           std::abs(pow_lambda(y, k.lambda) - pow_lambda(yt, k.lambda)));
      note(rep, "holder", x, y, lhs, rhs, 1e-9);
    }
  }
  return rep;
}

HypothesisReport verify_frag_hypothesis(const FragKernel& f, const GridSpec& grid) {
  HypothesisReport rep;
  rep.kernel = f.describe();
  auto xs = grid.points_1d();
  for (double x : xs) {
    note(rep, "bound", x, 0.0, f.eval(x), f.kappa2, 1e-12);
    double h = 1e-6 * x;
    double df = (f.eval(x + h) - f.eval(x - h)) / (2.0 * h);
    note(rep, "derivative", x, 0.0, std::abs(df), f.kappa3 / x, 1e-6);
  }
  if (auto mu = f.holder_mu(1.0 / grid.eps)) {
    Philox rng(0x9E3779B97F4A7C15ull, 11);
    double a_box = 1.0 / grid.eps;
    for (int i = 0; i < 4096; ++i) {
      double x = a_box * rng.uniform(), xt = a_box * rng.uniform();
      double lhs = std::abs(f.eval(x) - f.eval(xt));
      double rhs =
          f.alpha == 0.0 ? 0.0 : *mu * std::abs(std::pow(x, f.alpha) - std::pow(xt, f.alpha));
      note(rep, "holder", x, xt, lhs, rhs, 1e-9);
    }
  }
  return rep;
}

}  // namespace coagfrag
