#ifndef COAGFRAG_AUDIT_HPP
#define COAGFRAG_AUDIT_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "coagfrag/particle_state.hpp"

namespace coagfrag {

// The thirteen jump-map estimates checked by the randomized audit. They hold
// universally for ranked states, so any violation flags an implementation bug.
// Names describe the estimate; lhs/rhs are both evaluated per case and
// compared at 1e-12 relative tolerance.
enum class Inequality {
  LambdaNormCoalesceIdentity,  // ||c_ij m||_l = ||m||_l + (m_i+m_j)^l - m_i^l - m_j^l <= ||m||_l
  LambdaNormFragmentIdentity,  // ||f_it m||_l = ||m||_l + m_i^l (sum t_k^l - 1), exact
  DlCoalesceToState,           // d_l(c_ij m, m) <= 2 m_j^l
  DlFragmentToState,           // d_l(f_it m, m) <= m_i^l (1 - t_1^l) + m_i^l sum_{k>=2} t_k^l
  DlCoalescePair,              // d_l(c_ij m, c_ij mt) <= d_l(m, mt)
  DlFragmentPair,              // d_l(f_it m, f_it mt) <= d_l(m,mt) + |m_i^l - mt_i^l|(sum t_k^l - 1)
  DlProjectorGap,              // d_l(f_i psi_u, f_i psi_v) <= sum_{u<k<=v} t_k^l m_i^l
  DCoalesceToState,            // d(c_ij m, m) <= m_j ((3/2) 2^-p + 2^-j), p = merged rank
  DCoalescePair,               // d(c_ij m, c_ij mt) <= (2^i + 2^j) d(m, mt)
  DFragmentToState,            // d(f_it m, m) <= 2 (1 - t_1) 2^-i m_i
  DFragmentPair,               // d(f_it m, f_it mt) <= (1/2)[d_1(m,mt) + |m_i - mt_i|(sum t_k - 1)]
  DProjectorGap,               // d(f_it m, f_i psi_n(t) m) <= 2^-i m_i sum_{k>n} t_k
  DVersusDlambda,              // d(m,mt) <= (1/l)(||m||_1^(1-l) v ||mt||_1^(1-l)) d_l(m,mt)
};

constexpr int kInequalityCount = 13;
const char* inequality_name(Inequality q);

struct InequalityStat {
  std::string name;
  long cases = 0;
  long violations = 0;
  double worst_slack = 1e300;  // min over cases of (rhs-lhs)/max(1,|rhs|)
};

struct AuditViolation {
  std::string name;
  double lhs = 0, rhs = 0;
  uint64_t case_index = 0;
};

struct AuditReport {
  long cases = 0;
  long violations = 0;
  std::vector<InequalityStat> stats;          // one entry per inequality
  std::vector<AuditViolation> first_violations;  // up to 32, in case order
  bool clean() const { return violations == 0; }
};

// Distance/norm operations the audit exercises. Tests inject mutated tables
// to prove the audit actually detects defects; production always uses real().
struct AuditOps {
  std::function<double(const ParticleState&, const ParticleState&)> dist_weighted;
  std::function<double(const ParticleState&, const ParticleState&, double)> dist_lambda;
  std::function<double(const ParticleState&, double)> norm_lambda;
  static AuditOps real();
};

struct AuditConfig {
  uint64_t seed = 0;
  uint64_t cases = 10000;
  std::size_t max_length = 20;
  double mass_lo = 1e-3, mass_hi = 1e3;
  std::vector<double> lambdas = {0.3, 0.5, 1.0};
  bool parallel = true;
};

AuditReport run_audit(const AuditConfig& cfg, const AuditOps& ops = AuditOps::real());

/// One fully specified case, usable for single-instance reports.
struct AuditInstance {
  ParticleState m, mt;
  std::size_t i = 1, j = 2, fi = 1;  // coalesce ranks and fragment rank
  RatioSequence theta;
  double lambda = 1.0;
  std::size_t trunc_u = 1, trunc_v = 2;
};

struct InstanceResult {
  std::string name;
  double lhs, rhs;
  bool holds;
};

std::vector<InstanceResult> audit_instance(const AuditInstance& in,
                                           const AuditOps& ops = AuditOps::real());

}  // namespace coagfrag

#endif
