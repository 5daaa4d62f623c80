#include "coagfrag/reference.hpp"

#include <algorithm>
#include <cmath>

#include "coagfrag/errors.hpp"

namespace coagfrag::reference {

GeneratorRates apply_generator(const Grid& grid, const std::vector<double>& w,
                               const CoagKernel& K, const FragKernel& F,
                               const DislocationMeasure& beta) {
  const std::size_t n = grid.size();
  const auto& xs = grid.points();
  const double beta_total = beta.total_weight();
  GeneratorRates out;
  out.dw.assign(n, 0.0);
  out.removal_per_unit.assign(n, 0.0);

  auto deposit = [&](double mass, double number) {
    Grid::Deposit d = grid.place(mass, number);
    if (d.lo >= 0) out.dw[d.lo] += d.w_lo;
    if (d.hi >= 0) out.dw[d.hi] += d.w_hi;
    out.overflow_mass_rate += d.overflow_mass;
  };

  for (std::size_t g = 0; g < n; ++g) {
    for (std::size_t h = 0; h < n; ++h) {
      double k = K.eval(xs[g], xs[h]);
      out.removal_per_unit[g] += k * w[h];
      double r = k * w[g] * w[h];
      if (r != 0.0) {
        out.dw[g] -= r;
        if (h >= g) deposit(xs[g] + xs[h], h == g ? 0.5 * r : r);
      }
    }
    double fg = F.eval(xs[g]);
    if (fg != 0.0) {
      out.removal_per_unit[g] += fg * beta_total;
      double base = fg * w[g];
      if (base != 0.0) {
        out.dw[g] -= base * beta_total;
        for (const auto& atom : beta.atoms())
          for (std::size_t k = 0; k < atom.theta.size(); ++k)
            deposit(atom.theta[k] * xs[g], atom.weight * base);
      }
    }
  }
  return out;
}

namespace {

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

}  // namespace

Trajectory simulate(const ParticleState& m0, const CoagKernel& K, const FragKernel& F,
                    const DislocationMeasure& beta, const SimConfig& cfg) {
  cfg.validate();
  Philox rng(cfg.seed, 0);
  ParticleState state = m0;
  const double beta_total = beta.total_weight();
  std::vector<double> atom_w;
  for (const auto& a : beta.atoms()) atom_w.push_back(a.weight);

  Trajectory traj;
  traj.seed = cfg.seed;
  double t = 0.0;
  traj.sup_norm_lambda = state.norm_lambda(cfg.lambda);
  traj.stop = StopReason::Horizon;
  if (cfg.tau_cap && traj.sup_norm_lambda >= *cfg.tau_cap) {
    traj.stop = StopReason::TauCap;
    traj.final_state = state;
    return traj;
  }

  for (;;) {
    if (traj.n_events >= cfg.max_events) {
      traj.stop = StopReason::EventBudget;
      traj.t_end = t;
      break;
    }
    const auto& m = state.masses();
    std::vector<double> S(m.size(), 0.0), Fv(m.size(), 0.0);
    for (std::size_t p = 0; p < m.size(); ++p) {
      Fv[p] = F.eval(m[p]);
      for (std::size_t q = p + 1; q < m.size(); ++q) {
        double k = K.eval(m[p], m[q]);
        S[p] += k;
        S[q] += k;
      }
    }
    double rc = 0.0, sf = 0.0;
    for (double x : S) rc += x;
    rc *= 0.5;
    for (double x : Fv) sf += x;
    double total = rc + beta_total * sf;
    if (!std::isfinite(total)) throw Error(ErrorCode::RateOverflow, "total rate not finite");
    if (total <= 0.0) {
      traj.stop = StopReason::Absorbed;
      traj.t_end = cfg.t_max;
      break;
    }
    double waiting = rng.exponential(total);
    Event ev{};
    if (rng.uniform() * total < rc) {
      std::size_t p = pick_weighted(S, rng.uniform());
      std::vector<double> row(m.size(), 0.0);
      for (std::size_t q = 0; q < m.size(); ++q)
        if (q != p) row[q] = K.eval(m[p], m[q]);
      std::size_t q = pick_weighted(row, rng.uniform());
      ev.kind = EventKind::Coalesce;
      ev.i = static_cast<uint32_t>(std::min(p, q) + 1);
      ev.j_or_atom = static_cast<uint32_t>(std::max(p, q) + 1);
    } else {
      std::size_t p = pick_weighted(Fv, rng.uniform());
      std::size_t a = pick_weighted(atom_w, rng.uniform());
      ev.kind = EventKind::Fragment;
      ev.i = static_cast<uint32_t>(p + 1);
      ev.j_or_atom = static_cast<uint32_t>(a + 1);
    }
    double t_new = t + waiting;
    if (t_new > cfg.t_max) {
      traj.t_end = cfg.t_max;
      break;
    }
    state = ev.kind == EventKind::Coalesce
                ? state.coalesce(ev.i, ev.j_or_atom)
                : state.fragment(ev.i, beta.atoms()[ev.j_or_atom - 1].theta);
    t = t_new;
    ev.time = t;
    ev.n_particles = static_cast<uint32_t>(state.size());
    ev.mass_total = state.mass();
    ev.norm_lambda = state.norm_lambda(cfg.lambda);
    traj.sup_norm_lambda = std::max(traj.sup_norm_lambda, ev.norm_lambda);
    ++traj.n_events;
    if (cfg.record == RecordMode::Events) traj.events.push_back(ev);
    if (cfg.tau_cap && ev.norm_lambda >= *cfg.tau_cap) {
      traj.stop = StopReason::TauCap;
      traj.t_end = t;
      break;
    }
  }
  traj.final_state = state;
  return traj;
}

}  // namespace coagfrag::reference
