#include "coagfrag/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "coagfrag/errors.hpp"

namespace coagfrag {

void SimConfig::validate() const {
  if (!(t_max > 0.0)) throw Error(ErrorCode::InvalidConfig, "run.t_max must be > 0");
  if (max_events < 1) throw Error(ErrorCode::InvalidConfig, "run.max_events must be >= 1");
  if (!(lambda > 0.0 && lambda <= 1.0))
    throw Error(ErrorCode::InvalidConfig, "run.lambda must be in (0,1]");
  if (tau_cap && !(*tau_cap > 0.0))
    throw Error(ErrorCode::InvalidConfig, "run.tau_cap must be > 0");
  if (record == RecordMode::Snapshots) {
    if (!(snapshot_dt > 0.0))
      throw Error(ErrorCode::InvalidConfig, "run.snapshot_dt must be > 0");
    if (t_max / snapshot_dt > 1e8)
      throw Error(ErrorCode::InvalidConfig,
                  "run.snapshot_dt: more than 1e8 snapshot rows over t_max");
  }
}

std::pair<double, double> total_rates(const ParticleState& m, const CoagKernel& K,
                                      const FragKernel& F, const DislocationMeasure& beta) {
  const auto& v = m.masses();
  double rho_c = 0.0;
  for (std::size_t i = 0; i + 1 < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j) rho_c += K.eval(v[i], v[j]);
  double sum_f = 0.0;
  for (double x : v) sum_f += F.eval(x);
  return {rho_c, beta.total_weight() * sum_f};
}

namespace {

constexpr uint64_t kRebuildEvery = 4096;

std::vector<double> atom_weights(const DislocationMeasure& beta) {
  std::vector<double> w;
  w.reserve(beta.atoms().size());
  for (const auto& a : beta.atoms()) w.push_back(a.weight);
  return w;
}

/// Index selection proportional to non-negative weights; total recomputed on
/// the fly so the draw is exact for the current weights.
std::size_t pick_weighted(const std::vector<double>& w, double u01) {
  double total = 0.0;
  for (double x : w) total += x;
  double target = u01 * total;
  double acc = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    acc += w[k];
    if (target < acc) return k;
  }
  return w.empty() ? 0 : w.size() - 1;
}

// Mutable simulation state with per-particle coagulation row sums
// S[p] = sum_{q != p} K(m_p, m_q) kept incrementally; only rows touching the
// ranks changed by a jump are re-evaluated. Rebuilt in full periodically.
struct Engine {
  const CoagKernel& K;
  const FragKernel& F;
  const DislocationMeasure& beta;
  double beta_total;
  std::vector<double> atom_w;

  std::vector<double> m;   // masses, non-increasing
  std::vector<double> S;   // coagulation row sums
  std::vector<double> Fv;  // F(m_p)
  double mass_incr = 0.0;  // exact running total: coalescence leaves it
                           // untouched, fragmentation subtracts the computed
                           // dust loss, so the column never rounds upward

  Engine(const ParticleState& m0, const CoagKernel& k, const FragKernel& f,
         const DislocationMeasure& b)
      : K(k), F(f), beta(b), beta_total(b.total_weight()), atom_w(atom_weights(b)),
        m(m0.masses()) {
    mass_incr = m0.mass();
    rebuild();
  }

  void rebuild() {
    std::size_t n = m.size();
    S.assign(n, 0.0);
    Fv.resize(n);
    for (std::size_t p = 0; p < n; ++p) {
      Fv[p] = F.eval(m[p]);
      for (std::size_t q = p + 1; q < n; ++q) {
        double k = K.eval(m[p], m[q]);
        S[p] += k;
        S[q] += k;
      }
    }
  }

  double rho_c() const {
    double s = 0.0;
    for (double x : S) s += x;
    return 0.5 * s;
  }
  double rho_f() const {
    double s = 0.0;
    for (double x : Fv) s += x;
    return beta_total * s;
  }
  double mass() const { return mass_incr; }
  double norm_lambda(double l) const {
    double s = 0.0;
    for (double x : m) s += pow_lambda(x, l);
    return s;
  }

  // stable descending insert: new mass goes after existing equals
  std::size_t insert_pos(double w) const {
    return std::upper_bound(m.begin(), m.end(), w, std::greater<>()) - m.begin();
  }

  void erase_at(std::size_t idx) {
    m.erase(m.begin() + idx);
    S.erase(S.begin() + idx);
    Fv.erase(Fv.begin() + idx);
  }

  void insert_particle(double w) {
    double sw = 0.0;
    for (std::size_t q = 0; q < m.size(); ++q) {
      double k = K.eval(w, m[q]);
      S[q] += k;
      sw += k;
    }
    std::size_t pos = insert_pos(w);
    m.insert(m.begin() + pos, w);
    S.insert(S.begin() + pos, sw);
    Fv.insert(Fv.begin() + pos, F.eval(w));
  }

  /// ranks are 1-based, i < j
  void apply_coalesce(std::size_t i, std::size_t j) {
    double mi = m[i - 1], mj = m[j - 1];
    for (std::size_t q = 0; q < m.size(); ++q) {
      if (q == i - 1 || q == j - 1) continue;
      S[q] -= K.eval(m[q], mi) + K.eval(m[q], mj);
    }
    erase_at(j - 1);
    erase_at(i - 1);
    insert_particle(mi + mj);
  }

  void apply_fragment(std::size_t i, const RatioSequence& theta) {
    double mi = m[i - 1];
    for (std::size_t q = 0; q < m.size(); ++q) {
      if (q == i - 1) continue;
      S[q] -= K.eval(m[q], mi);
    }
    erase_at(i - 1);
    double fragment_sum = 0.0;
    for (std::size_t k = 0; k < theta.size(); ++k) {
      double frag = theta[k] * mi;
      fragment_sum += frag;
      insert_particle(frag);
    }
    // dust loss; negative values are pure rounding on conserving atoms and
    // would violate the no-mass-gain invariant
    double loss = mi - fragment_sum;
    if (loss > 0.0) mass_incr -= loss;
  }

  /// Draws waiting time and event choice without applying; false on absorption.
  bool choose(Philox& rng, double* waiting, Event* ev) {
    double rc = rho_c(), rf = rho_f();
    double total = rc + rf;
    if (!std::isfinite(total))
      throw Error(ErrorCode::RateOverflow, "total jump rate is not finite");
    if (total <= 0.0) return false;
    *waiting = rng.exponential(total);
    if (rng.uniform() * total < rc) {
      std::size_t p = pick_weighted(S, rng.uniform());
      std::vector<double> row(m.size(), 0.0);
      for (std::size_t q = 0; q < m.size(); ++q)
        if (q != p) row[q] = K.eval(m[p], m[q]);
      std::size_t q = pick_weighted(row, rng.uniform());
      ev->kind = EventKind::Coalesce;
      ev->i = static_cast<uint32_t>(std::min(p, q) + 1);
      ev->j_or_atom = static_cast<uint32_t>(std::max(p, q) + 1);
    } else {
      std::size_t p = pick_weighted(Fv, rng.uniform());
      std::size_t a = pick_weighted(atom_w, rng.uniform());
      ev->kind = EventKind::Fragment;
      ev->i = static_cast<uint32_t>(p + 1);
      ev->j_or_atom = static_cast<uint32_t>(a + 1);
    }
    return true;
  }

  void apply(const Event& ev) {
    if (ev.kind == EventKind::Coalesce)
      apply_coalesce(ev.i, ev.j_or_atom);
    else
      apply_fragment(ev.i, beta.atoms()[ev.j_or_atom - 1].theta);
  }
};

}  // namespace

StepResult step(const ParticleState& m, const CoagKernel& K, const FragKernel& F,
                const DislocationMeasure& beta, Philox& rng) {
  Engine eng(m, K, F, beta);
  double waiting = 0.0;
  Event ev{};
  if (!eng.choose(rng, &waiting, &ev))
    return {std::numeric_limits<double>::infinity(), std::nullopt, m};
  eng.apply(ev);
  ev.time = waiting;
  ev.n_particles = static_cast<uint32_t>(eng.m.size());
  ev.mass_total = eng.mass();
  ev.norm_lambda = eng.norm_lambda(1.0);
  return {waiting, ev, ParticleState(eng.m)};
}

namespace {

Trajectory simulate_stream(const ParticleState& m0, const CoagKernel& K, const FragKernel& F,
                           const DislocationMeasure& beta, const SimConfig& cfg,
                           uint64_t stream) {
  cfg.validate();
  Philox rng(cfg.seed, stream);
  Engine eng(m0, K, F, beta);
  Trajectory traj;
  traj.seed = cfg.seed;

  double t = 0.0;
  double nl = eng.norm_lambda(cfg.lambda);
  traj.sup_norm_lambda = nl;
  double next_snap = 0.0;
  auto snap_state = [&](double at) {
    traj.snapshots.push_back({at, eng.mass(), eng.norm_lambda(cfg.lambda),
                              static_cast<uint32_t>(eng.m.size())});
  };
  if (cfg.record == RecordMode::Snapshots) {
    snap_state(0.0);
    next_snap = cfg.snapshot_dt;
  }
  if (cfg.tau_cap && nl >= *cfg.tau_cap) {
    traj.stop = StopReason::TauCap;
    traj.t_end = 0.0;
    traj.final_state = ParticleState(eng.m);
    return traj;
  }

  traj.stop = StopReason::Horizon;
  bool extend_to_horizon = false;
  for (;;) {
    if (traj.n_events >= cfg.max_events) {
      traj.stop = StopReason::EventBudget;
      traj.t_end = t;
      break;
    }
    double waiting = 0.0;
    Event ev{};
    bool active = eng.choose(rng, &waiting, &ev);
    if (!active) {
      traj.stop = StopReason::Absorbed;
      traj.t_end = cfg.t_max;
      extend_to_horizon = true;
      break;
    }
    double t_new = t + waiting;
    if (t_new > cfg.t_max) {
      traj.t_end = cfg.t_max;
      extend_to_horizon = true;
      break;
    }
    // the pre-jump state holds on [t, t_new): emit crossed snapshot times first
    while (cfg.record == RecordMode::Snapshots && next_snap < t_new &&
           next_snap <= cfg.t_max) {
      snap_state(next_snap);
      next_snap += cfg.snapshot_dt;
    }
    eng.apply(ev);
    t = t_new;
    ev.time = t;
    ev.n_particles = static_cast<uint32_t>(eng.m.size());
    ev.mass_total = eng.mass();
    nl = eng.norm_lambda(cfg.lambda);
    ev.norm_lambda = nl;
    traj.sup_norm_lambda = std::max(traj.sup_norm_lambda, nl);
    ++traj.n_events;
    if (cfg.record == RecordMode::Events) traj.events.push_back(ev);
    if ((traj.n_events % kRebuildEvery) == 0) eng.rebuild();
    if (cfg.tau_cap && nl >= *cfg.tau_cap) {
      traj.stop = StopReason::TauCap;
      traj.t_end = t;
      break;
    }
  }
  if (extend_to_horizon && cfg.record == RecordMode::Snapshots) {
    while (next_snap <= cfg.t_max + 1e-12 * cfg.t_max) {
      snap_state(std::min(next_snap, cfg.t_max));
      next_snap += cfg.snapshot_dt;
    }
  }
  traj.final_state = ParticleState(eng.m);
  return traj;
}

}  // namespace

Trajectory simulate(const ParticleState& m0, const CoagKernel& K, const FragKernel& F,
                    const DislocationMeasure& beta, const SimConfig& cfg) {
  return simulate_stream(m0, K, F, beta, cfg, 0);
}

namespace {

CoupledTrajectory simulate_coupled_stream(const ParticleState& m0, const ParticleState& mt0,
                                          const CoagKernel& K, const FragKernel& F,
                                          const DislocationMeasure& beta, const SimConfig& cfg,
                                          uint64_t stream) {
  cfg.validate();
  Philox rng(cfg.seed, stream);
  ParticleState a = m0, b = mt0;
  CoupledTrajectory out;
  out.a.seed = out.b.seed = cfg.seed;
  double t = 0.0;
  double d0 = dist_lambda(a, b, cfg.lambda);
  out.distance_series.emplace_back(0.0, d0);
  out.sup_distance = d0;

  struct Channel {
    double rate;
    EventKind kind;
    uint32_t i, j_or_atom;
    int branch;  // 0 joint, 1 solo A, 2 solo B
  };
  std::vector<Channel> channels;

  auto record_event = [&](Trajectory& tr, const ParticleState& s, EventKind kind, uint32_t i,
                          uint32_t ja) {
    Event ev{t,
             kind,
             i,
             ja,
             static_cast<uint32_t>(s.size()),
             s.mass(),
             s.norm_lambda(cfg.lambda)};
    tr.events.push_back(ev);
    tr.sup_norm_lambda = std::max(tr.sup_norm_lambda, ev.norm_lambda);
    ++tr.n_events;
  };

  out.a.stop = out.b.stop = StopReason::Horizon;
  uint64_t n_events = 0;
  for (;;) {
    if (n_events >= cfg.max_events) {
      out.a.stop = out.b.stop = StopReason::EventBudget;
      break;
    }
    channels.clear();
    std::size_t n = std::max(a.size(), b.size());
    double total = 0.0;
    auto add = [&](double ra, double rb, EventKind kind, uint32_t i, uint32_t ja) {
      double joint = std::min(ra, rb);
      if (joint > 0.0) channels.push_back({joint, kind, i, ja, 0});
      if (ra > joint) channels.push_back({ra - joint, kind, i, ja, 1});
      if (rb > joint) channels.push_back({rb - joint, kind, i, ja, 2});
      total += std::max(ra, rb);
    };
    for (std::size_t i = 1; i < n; ++i) {
      for (std::size_t j = i + 1; j <= n; ++j) {
        double ra = K.eval(a.at(i), a.at(j));
        double rb = K.eval(b.at(i), b.at(j));
        add(ra, rb, EventKind::Coalesce, static_cast<uint32_t>(i), static_cast<uint32_t>(j));
      }
    }
    const auto& atoms = beta.atoms();
    for (std::size_t i = 1; i <= n; ++i) {
      double fa = F.eval(a.at(i));
      double fb = F.eval(b.at(i));
      for (std::size_t at = 0; at < atoms.size(); ++at)
        add(fa * atoms[at].weight, fb * atoms[at].weight, EventKind::Fragment,
            static_cast<uint32_t>(i), static_cast<uint32_t>(at + 1));
    }
    if (!std::isfinite(total))
      throw Error(ErrorCode::RateOverflow, "coupled total jump rate is not finite");
    if (total <= 0.0) {
      out.a.stop = out.b.stop = StopReason::Absorbed;
      break;
    }
    double waiting = rng.exponential(total);
    double t_new = t + waiting;
    if (t_new > cfg.t_max) break;
    t = t_new;
    double target = rng.uniform() * total;
    double acc = 0.0;
    const Channel* chosen = &channels.back();
    for (const auto& ch : channels) {
      acc += ch.rate;
      if (target < acc) {
        chosen = &ch;
        break;
      }
    }
    bool hit_a = chosen->branch != 2;
    bool hit_b = chosen->branch != 1;
    if (chosen->kind == EventKind::Coalesce) {
      if (hit_a) a = a.coalesce(chosen->i, chosen->j_or_atom);
      if (hit_b) b = b.coalesce(chosen->i, chosen->j_or_atom);
    } else {
      const RatioSequence& theta = atoms[chosen->j_or_atom - 1].theta;
      if (hit_a) a = a.fragment(chosen->i, theta);
      if (hit_b) b = b.fragment(chosen->i, theta);
    }
    ++n_events;
    if (hit_a) record_event(out.a, a, chosen->kind, chosen->i, chosen->j_or_atom);
    if (hit_b) record_event(out.b, b, chosen->kind, chosen->i, chosen->j_or_atom);
    if (chosen->branch == 0) ++out.joint_events;
    if (chosen->branch == 1) ++out.solo_a_events;
    if (chosen->branch == 2) ++out.solo_b_events;
    double d = dist_lambda(a, b, cfg.lambda);
    out.distance_series.emplace_back(t, d);
    out.sup_distance = std::max(out.sup_distance, d);
    if (cfg.tau_cap &&
        (a.norm_lambda(cfg.lambda) >= *cfg.tau_cap || b.norm_lambda(cfg.lambda) >= *cfg.tau_cap)) {
      out.a.stop = out.b.stop = StopReason::TauCap;
      break;
    }
  }
  out.a.t_end = out.b.t_end = t;
  out.a.final_state = a;
  out.b.final_state = b;
  out.final_distance = out.distance_series.back().second;
  return out;
}

}  // namespace

CoupledTrajectory simulate_coupled(const ParticleState& m0, const ParticleState& mt0,
                                   const CoagKernel& K, const FragKernel& F,
                                   const DislocationMeasure& beta, const SimConfig& cfg) {
  return simulate_coupled_stream(m0, mt0, K, F, beta, cfg, 0);
}

namespace {

Summary summarize(const std::vector<double>& xs) {
  Summary s;
  if (xs.empty()) return s;
  double sum = 0.0;
  s.min = s.max = xs[0];
  for (double x : xs) {
    sum += x;
    s.min = std::min(s.min, x);
    s.max = std::max(s.max, x);
  }
  s.mean = sum / xs.size();
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.variance = xs.size() > 1 ? ss / (xs.size() - 1) : 0.0;
  s.stderr_mean = std::sqrt(s.variance / xs.size());
  return s;
}

}  // namespace

EnsembleStats ensemble(const ParticleState& m0, const CoagKernel& K, const FragKernel& F,
                       const DislocationMeasure& beta, const SimConfig& cfg, uint64_t replicas,
                       bool parallel) {
  if (replicas < 1) throw Error(ErrorCode::InvalidConfig, "replicas must be >= 1");
  std::vector<double> sup_nl(replicas), n_final(replicas), mass_final(replicas),
      n_events(replicas);

#pragma omp parallel for schedule(dynamic, 8) if (parallel)
  for (long long r = 0; r < static_cast<long long>(replicas); ++r) {
    SimConfig local = cfg;
    local.record = RecordMode::Snapshots;
    local.snapshot_dt = cfg.t_max;  // aggregate statistics only
    Trajectory tr = simulate_stream(m0, K, F, beta, local, static_cast<uint64_t>(r));
    sup_nl[r] = tr.sup_norm_lambda;
    n_final[r] = static_cast<double>(tr.final_state.size());
    mass_final[r] = tr.final_state.mass();
    n_events[r] = static_cast<double>(tr.n_events);
  }

  EnsembleStats st;
  st.replicas = replicas;
  st.sup_norm_lambda = summarize(sup_nl);
  st.final_n_particles = summarize(n_final);
  st.final_mass = summarize(mass_final);
  st.n_events = summarize(n_events);
  st.per_replica_sup_norm = std::move(sup_nl);
  return st;
}

CoupledEnsembleStats ensemble_coupled(const ParticleState& m0, const ParticleState& mt0,
                                      const CoagKernel& K, const FragKernel& F,
                                      const DislocationMeasure& beta, const SimConfig& cfg,
                                      uint64_t replicas, bool parallel) {
  if (replicas < 1) throw Error(ErrorCode::InvalidConfig, "replicas must be >= 1");
  std::vector<double> sup_d(replicas), final_d(replicas);

#pragma omp parallel for schedule(dynamic, 8) if (parallel)
  for (long long r = 0; r < static_cast<long long>(replicas); ++r) {
    CoupledTrajectory tr =
        simulate_coupled_stream(m0, mt0, K, F, beta, cfg, static_cast<uint64_t>(r));
    sup_d[r] = tr.sup_distance;
    final_d[r] = tr.final_distance;
  }

  CoupledEnsembleStats st;
  st.replicas = replicas;
  st.sup_distance = summarize(sup_d);
  st.final_distance = summarize(final_d);
  return st;
}

std::optional<double> coupled_contraction_coefficient(const ParticleState& m0,
                                                      const ParticleState& mt0,
                                                      const CoagKernel& K, const FragKernel& F,
                                                      const DislocationMeasure& beta,
                                                      double lambda, double tau_cap) {
  double a_box = std::max(m0.mass(), mt0.mass());
  auto kappa_a = K.holder_kappa(a_box);
  auto mu_a = F.holder_mu(a_box);
  if (!kappa_a || !mu_a) return std::nullopt;
  double cbl = beta.c_beta_lambda(lambda);
  double fbar = F.sup_on(a_box);
  double frag_term = 0.0;
  if (*mu_a > 0.0) {
    double c_al = 2.0 * (F.alpha + lambda) / lambda;
    frag_term = 8.0 * *mu_a * cbl * c_al *
                std::max(std::pow(m0.mass(), F.alpha), std::pow(mt0.mass(), F.alpha));
  }
  return 8.0 * *kappa_a * tau_cap + frag_term + fbar * cbl;
}

}  // namespace coagfrag
