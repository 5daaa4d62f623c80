#include "coagfrag/dislocation.hpp"

#include <algorithm>
#include <cmath>

#include "coagfrag/errors.hpp"
#include "coagfrag/kernels.hpp"

namespace coagfrag {

RatioSequence RatioSequence::validate(std::vector<double> raw) {
  for (std::size_t k = 0; k + 1 < raw.size(); ++k)
    if (raw[k] < raw[k + 1])
      throw Error(ErrorCode::NotSorted, "ratio sequence: theta_" + std::to_string(k + 1) +
                                            " < theta_" + std::to_string(k + 2));
  double total = 0.0;
  for (double t : raw) {
    if (t < 0.0) throw Error(ErrorCode::NotSorted, "ratio sequence: negative ratio");
    total += t;
  }
  if (total > 1.0 + 1e-12)
    throw Error(ErrorCode::MassGain, "ratio sequence: sum of ratios exceeds 1");
  if (!raw.empty() && raw.front() >= 1.0)
    throw Error(ErrorCode::UnitFirstRatio, "ratio sequence: theta_1 must be < 1");
  while (!raw.empty() && raw.back() == 0.0) raw.pop_back();
  RatioSequence r;
  r.ratios_ = std::move(raw);
  return r;
}

double RatioSequence::sum() const {
  double s = 0.0;
  for (double t : ratios_) s += t;
  return s;
}

double RatioSequence::sum_pow(double lambda) const {
  double s = 0.0;
  for (double t : ratios_) s += pow_lambda(t, lambda);
  return s;
}

double RatioSequence::tail_sum_pow(double lambda) const {
  double s = 0.0;
  for (std::size_t k = 1; k < ratios_.size(); ++k) s += pow_lambda(ratios_[k], lambda);
  return s;
}

bool RatioSequence::mass_conserving(double tol) const { return std::abs(sum() - 1.0) <= tol; }

RatioSequence RatioSequence::truncated(std::size_t n) const {
  RatioSequence r;
  r.ratios_.assign(ratios_.begin(), ratios_.begin() + std::min(n, ratios_.size()));
  return r;
}

DislocationMeasure::DislocationMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  for (const auto& a : atoms_)
    if (!(a.weight > 0.0))
      throw Error(ErrorCode::DomainError, "dislocation measure: atom weights must be > 0");
}

DislocationMeasure DislocationMeasure::single(double weight, std::vector<double> theta) {
  return DislocationMeasure({{weight, RatioSequence::validate(std::move(theta))}});
}

double DislocationMeasure::total_weight() const {
  double s = 0.0;
  for (const auto& a : atoms_) s += a.weight;
  return s;
}

std::size_t DislocationMeasure::max_fragments() const {
  std::size_t n = 0;
  for (const auto& a : atoms_) n = std::max(n, a.theta.size());
  return n;
}

bool DislocationMeasure::mass_conserving(double tol) const {
  return std::all_of(atoms_.begin(), atoms_.end(),
                     [tol](const Atom& a) { return a.theta.mass_conserving(tol); });
}

double DislocationMeasure::c_beta_lambda(double lambda) const {
  if (!(lambda > 0.0 && lambda <= 1.0))
    throw Error(ErrorCode::DomainError, "c_beta_lambda: lambda must be in (0,1]");
  double s = 0.0;
  for (const auto& a : atoms_) s += a.weight * a.theta.tail_sum_pow(lambda);
  return s;
}

DislocationMeasure DislocationMeasure::truncated(std::size_t n) const {
  if (n < 2) throw Error(ErrorCode::DomainError, "truncate_beta: n must be >= 2");
  std::vector<Atom> kept;
  double cutoff = 1.0 - 1.0 / static_cast<double>(n);
  for (const auto& a : atoms_) {
    if (a.theta.empty() || a.theta[0] <= cutoff) kept.push_back({a.weight, a.theta.truncated(n)});
  }
  DislocationMeasure out;
  out.atoms_ = std::move(kept);
  return out;
}

}  // namespace coagfrag
