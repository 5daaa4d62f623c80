#ifndef COAGFRAG_PARTICLE_STATE_HPP
#define COAGFRAG_PARTICLE_STATE_HPP

#include <cstddef>
#include <vector>

#include "coagfrag/dislocation.hpp"

namespace coagfrag {

// Ranked mass configuration: finite non-increasing tuple of strictly positive
// masses, conceptually padded with infinitely many zeros. Immutable value;
// jump maps return new states. Indices in the public API are 1-based ranks.
class ParticleState {
 public:
  ParticleState() = default;
  explicit ParticleState(std::vector<double> sorted_desc);  // must already be sorted
  static ParticleState from_unsorted(std::vector<double> masses);
  static ParticleState monodisperse(std::size_t count, double mass);

  const std::vector<double>& masses() const { return m_; }
  std::size_t size() const { return m_.size(); }
  bool empty() const { return m_.empty(); }
  /// 1-based rank access; ranks beyond the size read as 0.
  double at(std::size_t rank) const { return rank >= 1 && rank <= m_.size() ? m_[rank - 1] : 0.0; }

  double mass() const;                      // ||.||_1
  double norm_lambda(double lambda) const;  // ||.||_lambda = sum m_k^lambda
  std::size_t count() const { return m_.size(); }

  /// Merge ranks i < j into one particle of mass m_i + m_j (stable re-sort).
  ParticleState coalesce(std::size_t i, std::size_t j) const;
  /// Same, also reporting the post-merge rank of the merged particle.
  ParticleState coalesce_tracked(std::size_t i, std::size_t j, std::size_t* merged_rank) const;

  /// Replace rank i by the fragments theta_k * m_i (stable merge; zero ratios
  /// never enter). Total mass changes by m_i (sum theta - 1) <= 0.
  ParticleState fragment(std::size_t i, const RatioSequence& theta) const;

  bool operator==(const ParticleState& o) const { return m_ == o.m_; }

 private:
  void check_rank(std::size_t i) const;
  std::vector<double> m_;
};

/// d(m, mt) = sum_k 2^-k |m_k - mt_k|, zero-padding the shorter state.
double dist_weighted(const ParticleState& m, const ParticleState& mt);

/// d_lambda(m, mt) = sum_k |m_k^lambda - mt_k^lambda|.
double dist_lambda(const ParticleState& m, const ParticleState& mt, double lambda);

}  // namespace coagfrag

#endif
