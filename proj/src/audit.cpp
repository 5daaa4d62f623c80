#include "coagfrag/audit.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "coagfrag/errors.hpp"
#include "coagfrag/kernels.hpp"
#include "coagfrag/rng.hpp"

namespace coagfrag {

const char* inequality_name(Inequality q) {
  switch (q) {
    case Inequality::LambdaNormCoalesceIdentity: return "lambda_norm_coalesce_identity";
    case Inequality::LambdaNormFragmentIdentity: return "lambda_norm_fragment_identity";
    case Inequality::DlCoalesceToState: return "dlambda_coalesce_to_state";
    case Inequality::DlFragmentToState: return "dlambda_fragment_to_state";
    case Inequality::DlCoalescePair: return "dlambda_coalesce_pair";
    case Inequality::DlFragmentPair: return "dlambda_fragment_pair";
    case Inequality::DlProjectorGap: return "dlambda_projector_gap";
    case Inequality::DCoalesceToState: return "d_coalesce_to_state";
    case Inequality::DCoalescePair: return "d_coalesce_pair";
    case Inequality::DFragmentToState: return "d_fragment_to_state";
    case Inequality::DFragmentPair: return "d_fragment_pair";
    case Inequality::DProjectorGap: return "d_projector_gap";
    case Inequality::DVersusDlambda: return "d_versus_dlambda";
  }
  return "?";
}

AuditOps AuditOps::real() {
  AuditOps ops;
  ops.dist_weighted = [](const ParticleState& a, const ParticleState& b) {
    return coagfrag::dist_weighted(a, b);
  };
  ops.dist_lambda = [](const ParticleState& a, const ParticleState& b, double l) {
    return coagfrag::dist_lambda(a, b, l);
  };
  ops.norm_lambda = [](const ParticleState& a, double l) { return a.norm_lambda(l); };
  return ops;
}

namespace {

constexpr double kRelTol = 1e-12;

bool holds_leq(double lhs, double rhs) {
  return lhs <= rhs + kRelTol * std::max({1.0, std::abs(lhs), std::abs(rhs)});
}

bool holds_eq(double lhs, double rhs) { return holds_leq(lhs, rhs) && holds_leq(rhs, lhs); }

struct Check {
  Inequality q;
  double lhs, rhs;
  bool holds;
};

// Evaluates every applicable inequality for one instance.
void run_checks(const AuditInstance& in, const AuditOps& ops, std::vector<Check>& out) {
  out.clear();
  const ParticleState& m = in.m;
  const ParticleState& mt = in.mt;
  const double l = in.lambda;
  const double nl_m = ops.norm_lambda(m, l);

  if (m.size() >= 2) {
    std::size_t i = in.i, j = in.j;
    std::size_t p = 0;
    ParticleState c = m.coalesce_tracked(i, j, &p);
    double mi = m.at(i), mj = m.at(j);
    {
      double lhs = ops.norm_lambda(c, l);
      double rhs = nl_m + pow_lambda(mi + mj, l) - pow_lambda(mi, l) - pow_lambda(mj, l);
      bool ok = holds_eq(lhs, rhs) && holds_leq(lhs, nl_m);
      out.push_back({Inequality::LambdaNormCoalesceIdentity, lhs, rhs, ok});
    }
    {
      double lhs = ops.dist_lambda(c, m, l), rhs = 2.0 * pow_lambda(mj, l);
      out.push_back({Inequality::DlCoalesceToState, lhs, rhs, holds_leq(lhs, rhs)});
    }
    {
      double lhs = ops.dist_weighted(c, m);
      double rhs = mj * (1.5 * std::ldexp(1.0, -static_cast<int>(p)) +
                         std::ldexp(1.0, -static_cast<int>(j)));
      out.push_back({Inequality::DCoalesceToState, lhs, rhs, holds_leq(lhs, rhs)});
    }
    if (mt.size() >= j) {
      ParticleState ct = mt.coalesce(i, j);
      {
        double lhs = ops.dist_lambda(c, ct, l), rhs = ops.dist_lambda(m, mt, l);
        out.push_back({Inequality::DlCoalescePair, lhs, rhs, holds_leq(lhs, rhs)});
      }
      {
        double lhs = ops.dist_weighted(c, ct);
        double rhs = (std::ldexp(1.0, static_cast<int>(i)) + std::ldexp(1.0, static_cast<int>(j))) *
                     ops.dist_weighted(m, mt);
        out.push_back({Inequality::DCoalescePair, lhs, rhs, holds_leq(lhs, rhs)});
      }
    }
  }

  if (!m.empty() && !in.theta.empty()) {
    std::size_t i = in.fi;
    double mi = m.at(i);
    ParticleState f = m.fragment(i, in.theta);
    double sum_tl = in.theta.sum_pow(l);
    double t1 = in.theta[0];
    {
      double lhs = ops.norm_lambda(f, l);
      double rhs = nl_m + pow_lambda(mi, l) * (sum_tl - 1.0);
      out.push_back({Inequality::LambdaNormFragmentIdentity, lhs, rhs, holds_eq(lhs, rhs)});
    }
    {
      double lhs = ops.dist_lambda(f, m, l);
      double rhs = pow_lambda(mi, l) * (1.0 - pow_lambda(t1, l)) +
                   pow_lambda(mi, l) * in.theta.tail_sum_pow(l);
      out.push_back({Inequality::DlFragmentToState, lhs, rhs, holds_leq(lhs, rhs)});
    }
    {
      double lhs = ops.dist_weighted(f, m);
      double rhs = 2.0 * (1.0 - t1) * std::ldexp(mi, -static_cast<int>(i));
      out.push_back({Inequality::DFragmentToState, lhs, rhs, holds_leq(lhs, rhs)});
    }
    if (mt.size() >= i) {
      ParticleState ft = mt.fragment(i, in.theta);
      double mti = mt.at(i);
      {
        double lhs = ops.dist_lambda(f, ft, l);
        double rhs = ops.dist_lambda(m, mt, l) +
                     std::abs(pow_lambda(mi, l) - pow_lambda(mti, l)) * (sum_tl - 1.0);
        out.push_back({Inequality::DlFragmentPair, lhs, rhs, holds_leq(lhs, rhs)});
      }
      {
        double lhs = ops.dist_weighted(f, ft);
        double rhs = 0.5 * (ops.dist_lambda(m, mt, 1.0) +
                            std::abs(mi - mti) * (in.theta.sum() - 1.0));
        out.push_back({Inequality::DFragmentPair, lhs, rhs, holds_leq(lhs, rhs)});
      }
    }
    if (in.theta.size() >= 2 && in.trunc_u < in.trunc_v) {
      ParticleState fu = m.fragment(i, in.theta.truncated(in.trunc_u));
      ParticleState fv = m.fragment(i, in.theta.truncated(in.trunc_v));
      double gap = 0.0;
      for (std::size_t k = in.trunc_u; k < std::min(in.trunc_v, in.theta.size()); ++k)
        gap += pow_lambda(in.theta[k], l);
      {
        double lhs = ops.dist_lambda(fu, fv, l);
        double rhs = gap * pow_lambda(mi, l);
        out.push_back({Inequality::DlProjectorGap, lhs, rhs, holds_leq(lhs, rhs)});
      }
      {
        ParticleState fn = m.fragment(i, in.theta.truncated(in.trunc_u));
        double tail = 0.0;
        for (std::size_t k = in.trunc_u; k < in.theta.size(); ++k) tail += in.theta[k];
        double lhs = ops.dist_weighted(f, fn);
        double rhs = std::ldexp(mi, -static_cast<int>(i)) * tail;
        out.push_back({Inequality::DProjectorGap, lhs, rhs, holds_leq(lhs, rhs)});
      }
    }
  }

  {
    double cl = 1.0 / l;  // equals 1 at lambda = 1
    double lhs = ops.dist_weighted(m, mt);
    double rhs = cl * std::max(std::pow(m.mass(), 1.0 - l), std::pow(mt.mass(), 1.0 - l)) *
                 ops.dist_lambda(m, mt, l);
    out.push_back({Inequality::DVersusDlambda, lhs, rhs, holds_leq(lhs, rhs)});
  }
}

ParticleState random_state(Philox& rng, const AuditConfig& cfg) {
  std::size_t n = 1 + rng.uniform_below(cfg.max_length);
  std::vector<double> masses(n);
  double log_lo = std::log(cfg.mass_lo), log_hi = std::log(cfg.mass_hi);
  for (auto& x : masses) x = std::exp(log_lo + (log_hi - log_lo) * rng.uniform());
  return ParticleState::from_unsorted(std::move(masses));
}

ParticleState perturbed_state(Philox& rng, const ParticleState& m, double scale) {
  std::vector<double> masses(m.masses());
  for (auto& x : masses) x = std::max(1e-12, x * std::exp(scale * (rng.uniform() - 0.5)));
  return ParticleState::from_unsorted(std::move(masses));
}

RatioSequence random_theta(Philox& rng) {
  std::size_t k = 1 + rng.uniform_below(6);
  std::vector<double> raw(k);
  double total = 0.0;
  for (auto& t : raw) {
    t = rng.uniform();
    total += t;
  }
  double target = 0.2 + 0.8 * rng.uniform();  // sub-stochastic (or conserving-ish) total
  for (auto& t : raw) t *= target / total;
  std::sort(raw.begin(), raw.end(), std::greater<>());
  if (raw[0] >= 1.0) {
    for (auto& t : raw) t *= 0.99 / raw[0];
  }
  return RatioSequence::validate(std::move(raw));
}

AuditInstance random_instance(uint64_t seed, uint64_t index, const AuditConfig& cfg) {
  Philox rng(seed, index);
  AuditInstance in;
  in.m = random_state(rng, cfg);
  switch (rng.uniform_below(3)) {
    case 0: in.mt = in.m; break;
    case 1: in.mt = random_state(rng, cfg); break;
    default: {
      double scale = std::exp(-static_cast<double>(rng.uniform_below(16)));
      in.mt = perturbed_state(rng, in.m, scale);
    }
  }
  in.lambda = cfg.lambdas[rng.uniform_below(cfg.lambdas.size())];
  if (in.m.size() >= 2) {
    in.i = 1 + rng.uniform_below(in.m.size() - 1);
    in.j = in.i + 1 + rng.uniform_below(in.m.size() - in.i);
  }
  in.fi = 1 + rng.uniform_below(in.m.size());
  in.theta = random_theta(rng);
  if (in.theta.size() >= 2) {
    in.trunc_u = 1 + rng.uniform_below(in.theta.size() - 1);
    in.trunc_v = in.trunc_u + 1 + rng.uniform_below(in.theta.size() - in.trunc_u);
  }
  return in;
}

struct ChunkAccum {
  std::array<long, kInequalityCount> cases{};
  std::array<long, kInequalityCount> violations{};
  std::array<double, kInequalityCount> worst{};
  std::vector<AuditViolation> firsts;
  ChunkAccum() { worst.fill(1e300); }
};

}  // namespace

std::vector<InstanceResult> audit_instance(const AuditInstance& in, const AuditOps& ops) {
  std::vector<Check> checks;
  run_checks(in, ops, checks);
  std::vector<InstanceResult> out;
  out.reserve(checks.size());
  for (const auto& c : checks) out.push_back({inequality_name(c.q), c.lhs, c.rhs, c.holds});
  return out;
}

AuditReport run_audit(const AuditConfig& cfg, const AuditOps& ops) {
  if (cfg.lambdas.empty())
    throw Error(ErrorCode::InvalidConfig, "audit: lambdas must be nonempty");
  if (cfg.max_length < 1 || !(cfg.mass_lo > 0.0) || !(cfg.mass_hi > cfg.mass_lo))
    throw Error(ErrorCode::InvalidConfig, "audit: invalid state generator bounds");
  // Fixed 64-way chunking; chunk results are merged in chunk order, so the
  // report is identical for any thread count.
  constexpr int kChunks = 64;
  std::vector<ChunkAccum> acc(kChunks);
  const uint64_t cases = cfg.cases;

#pragma omp parallel for schedule(dynamic, 1) if (cfg.parallel)
  for (int chunk = 0; chunk < kChunks; ++chunk) {
    std::vector<Check> checks;
    ChunkAccum& a = acc[chunk];
    for (uint64_t idx = chunk; idx < cases; idx += kChunks) {
      AuditInstance in = random_instance(cfg.seed, idx, cfg);
      run_checks(in, ops, checks);
      for (const auto& c : checks) {
        int qi = static_cast<int>(c.q);
        ++a.cases[qi];
        double slack = (c.rhs - c.lhs) / std::max(1.0, std::abs(c.rhs));
        a.worst[qi] = std::min(a.worst[qi], slack);
        if (!c.holds) {
          ++a.violations[qi];
          if (a.firsts.size() < 32)
            a.firsts.push_back({inequality_name(c.q), c.lhs, c.rhs, idx});
        }
      }
    }
  }

  AuditReport rep;
  rep.cases = static_cast<long>(cases);
  rep.stats.resize(kInequalityCount);
  for (int qi = 0; qi < kInequalityCount; ++qi) {
    auto& st = rep.stats[qi];
    st.name = inequality_name(static_cast<Inequality>(qi));
    for (const auto& a : acc) {
      st.cases += a.cases[qi];
      st.violations += a.violations[qi];
      st.worst_slack = std::min(st.worst_slack, a.worst[qi]);
    }
    rep.violations += st.violations;
  }
  for (const auto& a : acc)
    for (const auto& v : a.firsts)
      if (rep.first_violations.size() < 32) rep.first_violations.push_back(v);
  std::sort(rep.first_violations.begin(), rep.first_violations.end(),
            [](const AuditViolation& x, const AuditViolation& y) {
              return x.case_index < y.case_index;
            });
  return rep;
}

}  // namespace coagfrag
