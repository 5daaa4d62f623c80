#include <doctest.h>

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "coagfrag/audit.hpp"
#include "coagfrag/reference.hpp"
#include "coagfrag/rng.hpp"

using namespace coagfrag;

namespace {

CoagKernel root_sum() {
  CoagKernel k;
  k.family = CoagFamily::SumPow;
  k.a = 1.0;
  k.b = 0.5;
  k.lambda = 0.5;
  return k;
}

FragKernel unit_frag() { return FragKernel{}; }

DislocationMeasure mixed_beta() {
  return DislocationMeasure({{1.0, RatioSequence::validate({0.5, 0.5})},
                             {0.5, RatioSequence::validate({0.6, 0.2, 0.1})}});
}

}  // namespace

TEST_CASE("chunked generator agrees with the serial reference") {
  GridPolicy p;
  p.ratio = 1.3;
  p.x_min = 1e-4;
  p.x_max = 1e4;
  AtomicMeasure c0({1.0}, {1.0});
  Grid grid = Grid::build(p, c0);
  Philox rng(2025, 1);
  std::vector<double> w(grid.size());
  for (auto& v : w) v = rng.uniform();

  GeneratorRates serial = reference::apply_generator(grid, w, root_sum(), unit_frag(),
                                                     mixed_beta());
  GeneratorRates parallel = apply_generator(grid, w, root_sum(), unit_frag(), mixed_beta(), true);
  REQUIRE(serial.dw.size() == parallel.dw.size());
  for (std::size_t g = 0; g < serial.dw.size(); ++g) {
    double scale = std::max({1.0, std::abs(serial.dw[g])});
    CHECK(std::abs(serial.dw[g] - parallel.dw[g]) <= 1e-11 * scale);
    CHECK(std::abs(serial.removal_per_unit[g] - parallel.removal_per_unit[g]) <=
          1e-11 * std::max(1.0, serial.removal_per_unit[g]));
  }
  CHECK(std::abs(serial.overflow_mass_rate - parallel.overflow_mass_rate) <=
        1e-11 * std::max(1.0, serial.overflow_mass_rate));
}

TEST_CASE("generator output is independent of the thread count") {
  GridPolicy p;
  p.ratio = 1.5;
  p.x_min = 1e-3;
  p.x_max = 1e3;
  AtomicMeasure c0({1.0}, {1.0});
  Grid grid = Grid::build(p, c0);
  std::vector<double> w(grid.size(), 0.5);

#ifdef _OPENMP
  int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  GeneratorRates one = apply_generator(grid, w, root_sum(), unit_frag(), mixed_beta(), true);
  omp_set_num_threads(std::max(2, saved));
  GeneratorRates many = apply_generator(grid, w, root_sum(), unit_frag(), mixed_beta(), true);
  omp_set_num_threads(saved);
  CHECK(one.dw == many.dw);  // bit-identical by the fixed-chunk merge order
  CHECK(one.removal_per_unit == many.removal_per_unit);
  CHECK(one.overflow_mass_rate == many.overflow_mass_rate);
#else
  GeneratorRates one = apply_generator(grid, w, root_sum(), unit_frag(), mixed_beta(), false);
  GeneratorRates many = apply_generator(grid, w, root_sum(), unit_frag(), mixed_beta(), true);
  CHECK(one.dw == many.dw);
#endif
}

TEST_CASE("incremental simulation replays the from-scratch reference") {
  SimConfig cfg;
  cfg.t_max = 20.0;
  cfg.seed = 424242;
  cfg.max_events = 2000;
  ParticleState m0 = ParticleState::monodisperse(15, 1.0);
  Trajectory fast = simulate(m0, root_sum(), unit_frag(), mixed_beta(), cfg);
  Trajectory ref = reference::simulate(m0, root_sum(), unit_frag(), mixed_beta(), cfg);
  REQUIRE(fast.n_events == ref.n_events);
  REQUIRE(fast.events.size() == ref.events.size());
  for (std::size_t e = 0; e < fast.events.size(); ++e) {
    CHECK(fast.events[e].kind == ref.events[e].kind);
    CHECK(fast.events[e].i == ref.events[e].i);
    CHECK(fast.events[e].j_or_atom == ref.events[e].j_or_atom);
    CHECK(fast.events[e].time == doctest::Approx(ref.events[e].time).epsilon(1e-12));
  }
  CHECK(fast.final_state.masses() == ref.final_state.masses());
}

TEST_CASE("parallel ensembles equal serial ensembles bit for bit") {
  SimConfig cfg;
  cfg.t_max = 1.5;
  cfg.seed = 31415;
  cfg.max_events = 50000;
  ParticleState m0 = ParticleState::monodisperse(10, 1.0);
  EnsembleStats serial = ensemble(m0, root_sum(), unit_frag(), mixed_beta(), cfg, 200, false);
  EnsembleStats parallel = ensemble(m0, root_sum(), unit_frag(), mixed_beta(), cfg, 200, true);
  CHECK(serial.per_replica_sup_norm == parallel.per_replica_sup_norm);
  CHECK(serial.sup_norm_lambda.mean == parallel.sup_norm_lambda.mean);
  CHECK(serial.final_mass.mean == parallel.final_mass.mean);
  CHECK(serial.n_events.mean == parallel.n_events.mean);
}

TEST_CASE("parallel audit equals serial audit") {
  AuditConfig cfg;
  cfg.seed = 2718;
  cfg.cases = 3000;
  cfg.parallel = false;
  AuditReport serial = run_audit(cfg);
  cfg.parallel = true;
  AuditReport parallel = run_audit(cfg);
  REQUIRE(serial.stats.size() == parallel.stats.size());
  for (std::size_t q = 0; q < serial.stats.size(); ++q) {
    CHECK(serial.stats[q].cases == parallel.stats[q].cases);
    CHECK(serial.stats[q].violations == parallel.stats[q].violations);
    CHECK(serial.stats[q].worst_slack == parallel.stats[q].worst_slack);
  }
}
