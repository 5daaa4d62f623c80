// Serial-vs-OpenMP benchmark for the parallel surfaces: sectional generator
// rows, ensemble replicas, audit case batches.

#include <chrono>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "coagfrag/audit.hpp"
#include "coagfrag/reference.hpp"

using namespace coagfrag;

namespace {

double seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <typename F>
double timed(F&& f) {
  auto t0 = std::chrono::steady_clock::now();
  f();
  return seconds(t0);
}

void row(const char* name, double serial, double parallel) {
  std::printf("%-28s %10.3fs %10.3fs %8.2fx\n", name, serial, parallel,
              parallel > 0 ? serial / parallel : 0.0);
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("openmp: %d threads\n", omp_get_max_threads());
#else
  std::printf("openmp: disabled at build time\n");
#endif
  std::printf("%-28s %11s %11s %9s\n", "benchmark", "serial", "parallel", "speedup");

  // sectional generator on a large geometric grid
  {
    CoagKernel K{.family = CoagFamily::SumPow, .a = 1.0, .b = 0.5, .lambda = 0.5};
    FragKernel F{.family = FragFamily::Constant};
    DislocationMeasure beta = DislocationMeasure::single(1.0, {0.5, 0.5});
    GridPolicy policy;
    policy.ratio = 1.02;
    policy.x_min = 1e-6;
    policy.x_max = 1e6;
    AtomicMeasure c0({1.0}, {1.0});
    Grid grid = Grid::build(policy, c0);
    std::vector<double> w(grid.size(), 0.0);
    for (std::size_t g = 0; g < grid.size(); ++g)
      w[g] = 1.0 / (1.0 + static_cast<double>(g));
    std::printf("# generator grid points: %zu\n", grid.size());
    double ts = timed([&] { reference::apply_generator(grid, w, K, F, beta); });
    double tp = timed([&] { apply_generator(grid, w, K, F, beta, true); });
    row("sectional generator", ts, tp);
  }

  // ensemble of stochastic trajectories
  {
    CoagKernel K{.family = CoagFamily::SymProd, .a = 0.0, .b = 1.0, .lambda = 1.0};
    FragKernel F{.family = FragFamily::Constant};
    DislocationMeasure beta = DislocationMeasure::single(1.0, {0.5, 0.5});
    ParticleState m0 = ParticleState::monodisperse(20, 1.0);
    SimConfig cfg;
    cfg.t_max = 2.0;
    cfg.seed = 42;
    cfg.max_events = 200000;
    cfg.record = RecordMode::Snapshots;
    cfg.snapshot_dt = 2.0;
    const uint64_t replicas = 2000;
    double ts = timed([&] { ensemble(m0, K, F, beta, cfg, replicas, false); });
    double tp = timed([&] { ensemble(m0, K, F, beta, cfg, replicas, true); });
    row("ensemble (2000 replicas)", ts, tp);
  }

  // randomized inequality audit
  {
    AuditConfig acfg;
    acfg.cases = 40000;
    acfg.seed = 7;
    acfg.parallel = false;
    double ts = timed([&] { run_audit(acfg); });
    acfg.parallel = true;
    double tp = timed([&] { run_audit(acfg); });
    row("audit (40000 cases)", ts, tp);
  }
  return 0;
}
