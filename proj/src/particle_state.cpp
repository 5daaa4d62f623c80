#include "coagfrag/particle_state.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "coagfrag/errors.hpp"
#include "coagfrag/kernels.hpp"

namespace coagfrag {

ParticleState::ParticleState(std::vector<double> sorted_desc) : m_(std::move(sorted_desc)) {
  for (std::size_t k = 0; k < m_.size(); ++k) {
    if (!(m_[k] > 0.0)) throw Error(ErrorCode::DomainError, "particle state: masses must be > 0");
    if (k > 0 && m_[k - 1] < m_[k])
      throw Error(ErrorCode::NotSorted, "particle state: masses must be non-increasing");
  }
}

ParticleState ParticleState::from_unsorted(std::vector<double> masses) {
  std::erase_if(masses, [](double x) { return x == 0.0; });
  std::sort(masses.begin(), masses.end(), std::greater<>());
  return ParticleState(std::move(masses));
}

ParticleState ParticleState::monodisperse(std::size_t count, double mass) {
  return ParticleState(std::vector<double>(count, mass));
}

double ParticleState::mass() const {
  double s = 0.0;
  for (double x : m_) s += x;
  return s;
}

double ParticleState::norm_lambda(double lambda) const {
  if (!(lambda > 0.0 && lambda <= 1.0))
    throw Error(ErrorCode::DomainError, "norm_lambda: lambda must be in (0,1]");
  double s = 0.0;
  for (double x : m_) s += pow_lambda(x, lambda);
  return s;
}

void ParticleState::check_rank(std::size_t i) const {
  if (i < 1 || i > m_.size())
    throw Error(ErrorCode::IndexOutOfRange, "particle state: rank " + std::to_string(i) +
                                                " out of range 1.." + std::to_string(m_.size()));
}

ParticleState ParticleState::coalesce(std::size_t i, std::size_t j) const {
  std::size_t rank;
  return coalesce_tracked(i, j, &rank);
}

ParticleState ParticleState::coalesce_tracked(std::size_t i, std::size_t j,
                                              std::size_t* merged_rank) const {
  check_rank(i);
  check_rank(j);
  if (i >= j) throw Error(ErrorCode::IndexOrder, "coalesce: requires i < j");
  double w = m_[i - 1] + m_[j - 1];
  std::vector<double> out;
  out.reserve(m_.size() - 1);
  // delete two, insert one; ties keep existing particles ahead of the newcomer
  std::size_t pos = 0;
  bool placed = false;
  for (std::size_t k = 0; k < m_.size(); ++k) {
    if (k == i - 1 || k == j - 1) continue;
    if (!placed && m_[k] < w) {
      pos = out.size();
      out.push_back(w);
      placed = true;
    }
    out.push_back(m_[k]);
  }
  if (!placed) {
    pos = out.size();
    out.push_back(w);
  }
  *merged_rank = pos + 1;
  ParticleState s;
  s.m_ = std::move(out);
  return s;
}

ParticleState ParticleState::fragment(std::size_t i, const RatioSequence& theta) const {
  check_rank(i);
  double mi = m_[i - 1];
  std::vector<double> out;
  out.reserve(m_.size() - 1 + theta.size());
  // delete one, merge K fragments; fragments are already descending since
  // theta is. Ties keep existing particles ahead of fragments.
  std::size_t k = 0, f = 0;
  while (k < m_.size() || f < theta.size()) {
    if (k == i - 1) {
      ++k;
      continue;
    }
    double frag = f < theta.size() ? theta[f] * mi : -1.0;
    if (k < m_.size() && m_[k] >= frag) {
      out.push_back(m_[k]);
      ++k;
    } else {
      out.push_back(frag);
      ++f;
    }
  }
  ParticleState s;
  s.m_ = std::move(out);
  return s;
}

double dist_weighted(const ParticleState& m, const ParticleState& mt) {
  const auto& a = m.masses();
  const auto& b = mt.masses();
  std::size_t n = std::max(a.size(), b.size());
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double x = k < a.size() ? a[k] : 0.0;
    double y = k < b.size() ? b[k] : 0.0;
    s += std::ldexp(std::abs(x - y), -static_cast<int>(k + 1));
  }
  return s;
}

double dist_lambda(const ParticleState& m, const ParticleState& mt, double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0))
    throw Error(ErrorCode::DomainError, "dist_lambda: lambda must be in (0,1]");
  const auto& a = m.masses();
  const auto& b = mt.masses();
  std::size_t n = std::max(a.size(), b.size());
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double x = k < a.size() ? pow_lambda(a[k], lambda) : 0.0;
    double y = k < b.size() ? pow_lambda(b[k], lambda) : 0.0;
    s += std::abs(x - y);
  }
  return s;
}

}  // namespace coagfrag
