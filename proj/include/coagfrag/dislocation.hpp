#ifndef COAGFRAG_DISLOCATION_HPP
#define COAGFRAG_DISLOCATION_HPP

#include <cstddef>
#include <vector>

namespace coagfrag {

// A fragment-ratio configuration: finite non-increasing tuple
// 1 > theta_1 >= theta_2 >= ... > 0 with sum <= 1 (sub-stochastic; the deficit
// is mass lost to dust). Zero ratios are stripped on validation.
class RatioSequence {
 public:
  RatioSequence() = default;

  /// Validates and normalizes a raw tuple. Throws NotSorted, MassGain
  /// (sum > 1 + 1e-12) or UnitFirstRatio (theta_1 >= 1).
  static RatioSequence validate(std::vector<double> raw);

  const std::vector<double>& ratios() const { return ratios_; }
  std::size_t size() const { return ratios_.size(); }
  bool empty() const { return ratios_.empty(); }
  double operator[](std::size_t k) const { return ratios_[k]; }  // 0-based
  double sum() const;
  double sum_pow(double lambda) const;        // sum theta_k^lambda
  double tail_sum_pow(double lambda) const;   // sum_{k>=2} theta_k^lambda
  bool mass_conserving(double tol = 1e-12) const;

  /// Projector onto the first n ratios; invariants are preserved.
  RatioSequence truncated(std::size_t n) const;

 private:
  std::vector<double> ratios_;
};

// Finite atomic measure on the ratio space: atoms (weight, theta).
class DislocationMeasure {
 public:
  struct Atom {
    double weight;
    RatioSequence theta;
  };

  DislocationMeasure() = default;
  explicit DislocationMeasure(std::vector<Atom> atoms);

  static DislocationMeasure single(double weight, std::vector<double> theta);

  const std::vector<Atom>& atoms() const { return atoms_; }
  double total_weight() const;  // beta(Theta)
  std::size_t max_fragments() const;
  bool mass_conserving(double tol = 1e-12) const;

  /// C_beta^lambda = sum_atoms weight * sum_{k>=2} theta_k^lambda.
  double c_beta_lambda(double lambda) const;

  /// Keeps atoms with theta_1 <= 1 - 1/n, each projected onto its first n
  /// ratios. May return the empty measure. Requires n >= 2.
  DislocationMeasure truncated(std::size_t n) const;

 private:
  std::vector<Atom> atoms_;
};

}  // namespace coagfrag

#endif
