// coagfrag: stochastic coalescence-fragmentation simulation and sectional
// solver for the coagulation multi-fragmentation equation.
//
// Subcommands: simulate, couple, solve, audit, verify-kernels,
// truncation-study. All outputs are deterministic given (config, seed).

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "coagfrag/audit.hpp"
#include "coagfrag/errors.hpp"
#include "coagfrag/io.hpp"
#include "coagfrag/reference.hpp"

namespace fs = std::filesystem;
using namespace coagfrag;

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<uint64_t> seed;
  std::optional<uint64_t> replicas;
  std::optional<uint64_t> cases;
  std::optional<uint64_t> mean_field_n;  // experimental: scale K by 1/N
  bool quiet = false;
  bool mutant = false;  // test hook: corrupts d_lambda inside the audit
};

struct OutputSink {
  fs::path dir;
  Manifest manifest;
  std::vector<std::string> written;

  explicit OutputSink(const std::string& out_dir) : dir(out_dir) {
    fs::create_directories(dir);
  }
  void write(const std::string& name, const std::string& content) {
    fs::path p = dir / name;
    write_text_file(p, content);
    manifest.outputs.emplace_back(name, fnv1a_hex(content));
    written.push_back(name);
  }
  void finish(int64_t wall_ms, uint64_t events) {
    manifest.tool_version = kToolVersion;
    manifest.wall_clock_ms = wall_ms;
    manifest.event_count = events;
    write_text_file(dir / "manifest.json", manifest.to_json().dump(2) + "\n");
  }
};

Json load_config(const std::string& path, OutputSink& sink) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open config: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string bytes = ss.str();
  sink.manifest.config_digest = fnv1a_hex(bytes);
  sink.manifest.inputs.emplace_back(path, sink.manifest.config_digest);
  Json doc = Json::parse(bytes, nullptr, false);
  if (doc.is_discarded())
    throw Error(ErrorCode::InvalidConfig, "config is not valid JSON: " + path);
  sink.manifest.config_echo = doc;
  return doc;
}

std::vector<Snapshot> synth_snapshots(const Trajectory& t, const ParticleState& m0,
                                      double lambda, double dt) {
  std::vector<Snapshot> snaps;
  Snapshot cur{0.0, m0.mass(), m0.norm_lambda(lambda), static_cast<uint32_t>(m0.size())};
  double at = 0.0;
  std::size_t e = 0;
  while (at <= t.t_end + 1e-12 * std::max(1.0, t.t_end)) {
    while (e < t.events.size() && t.events[e].time <= at) {
      cur = {0.0, t.events[e].mass_total, t.events[e].norm_lambda, t.events[e].n_particles};
      ++e;
    }
    snaps.push_back({at, cur.mass, cur.norm_lambda, cur.n_particles});
    at += dt;
  }
  return snaps;
}

std::string snapshots_csv_rows(const std::vector<Snapshot>& snaps) {
  std::string out = "time,n_particles,mass_total,norm_lambda\n";
  for (const auto& s : snaps)
    out += fmt_g17(s.time) + "," + std::to_string(s.n_particles) + "," + fmt_g17(s.mass) + "," +
           fmt_g17(s.norm_lambda) + "\n";
  return out;
}

Json plotspec(std::initializer_list<std::pair<std::string, std::vector<std::string>>> specs) {
  Json plots = Json::array();
  for (const auto& [file, ys] : specs) {
    Json p;
    p["file"] = file;
    p["x"] = file == "final_measure.csv" ? "x" : (file == "moments.csv" ? "t" : "time");
    p["y"] = ys;
    plots.push_back(p);
  }
  return Json{{"plots", plots}};
}

Json summary_base(const std::string& mode, const RunConfig& cfg) {
  Json s;
  s["tool_version"] = kToolVersion;
  s["mode"] = mode;
  s["seed"] = cfg.sim.seed;
  s["config"] = cfg.raw;
  return s;
}

const char* stop_name(StopReason r) {
  switch (r) {
    case StopReason::Horizon: return "horizon";
    case StopReason::TauCap: return "tau_cap";
    case StopReason::EventBudget: return "event_budget";
    case StopReason::Absorbed: return "absorbed";
  }
  return "?";
}

Json summary_stats(const Summary& s) {
  return Json{{"mean", s.mean},
              {"variance", s.variance},
              {"stderr", s.stderr_mean},
              {"min", s.min},
              {"max", s.max}};
}

int cmd_simulate(const CliOptions& opt) {
  auto start = std::chrono::steady_clock::now();
  OutputSink sink(opt.out_dir);
  RunConfig cfg = parse_config(load_config(opt.config_path, sink), "simulate", opt.seed);
  uint64_t replicas = opt.replicas.value_or(cfg.replicas);
  if (opt.mean_field_n) {
    // experimental: coagulation rates scaled by 1/N; no convergence claims
    if (*opt.mean_field_n < 1)
      throw Error(ErrorCode::InvalidConfig, "--mean-field-n must be >= 1");
    cfg.coag.c /= static_cast<double>(*opt.mean_field_n);
  }

  Trajectory traj = simulate(*cfg.initial_state, cfg.coag, cfg.frag, cfg.beta, cfg.sim);
  sink.write("trajectory.csv", trajectory_csv(traj));
  if (cfg.sim.record == RecordMode::Snapshots)
    sink.write("snapshots.csv", snapshots_csv(traj));
  else
    sink.write("snapshots.csv",
               snapshots_csv_rows(synth_snapshots(traj, *cfg.initial_state, cfg.sim.lambda,
                                                  cfg.sim.snapshot_dt)));

  Json summary = summary_base("simulate", cfg);
  summary["stop_reason"] = stop_name(traj.stop);
  summary["t_end"] = traj.t_end;
  summary["n_events"] = traj.n_events;
  summary["sup_norm_lambda"] = traj.sup_norm_lambda;
  summary["final_state"] = state_to_json(traj.final_state);
  if (opt.mean_field_n) summary["mean_field_n"] = *opt.mean_field_n;
  bool budget_hit = traj.stop == StopReason::EventBudget;
  if (replicas > 1) {
    EnsembleStats st = ensemble(*cfg.initial_state, cfg.coag, cfg.frag, cfg.beta, cfg.sim,
                                replicas);
    summary["ensemble"] = Json{{"replicas", st.replicas},
                               {"sup_norm_lambda", summary_stats(st.sup_norm_lambda)},
                               {"final_n_particles", summary_stats(st.final_n_particles)},
                               {"final_mass", summary_stats(st.final_mass)},
                               {"n_events", summary_stats(st.n_events)}};
  }
  sink.write("summary.json", summary.dump(2) + "\n");
  sink.write("plotspec.json",
             plotspec({{"trajectory.csv", {"mass_total", "norm_lambda", "n_particles"}},
                       {"snapshots.csv", {"mass_total", "norm_lambda", "n_particles"}}})
                     .dump(2) +
                 "\n");
  sink.manifest.command = "simulate";
  sink.manifest.master_seed = cfg.sim.seed;
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - start)
                .count();
  sink.finish(ms, traj.n_events);
  if (!opt.quiet)
    std::printf("simulate: %llu events, stop=%s, out=%s\n",
                static_cast<unsigned long long>(traj.n_events), stop_name(traj.stop),
                opt.out_dir.c_str());
  return budget_hit ? 2 : 0;
}

int cmd_couple(const CliOptions& opt) {
  auto start = std::chrono::steady_clock::now();
  OutputSink sink(opt.out_dir);
  RunConfig cfg = parse_config(load_config(opt.config_path, sink), "couple", opt.seed);
  uint64_t replicas = opt.replicas.value_or(cfg.replicas);

  CoupledTrajectory tr =
      simulate_coupled(*cfg.initial_state, *cfg.initial_state_b, cfg.coag, cfg.frag, cfg.beta,
                       cfg.sim);
  sink.write("trajectory_a.csv", trajectory_csv(tr.a));
  sink.write("trajectory_b.csv", trajectory_csv(tr.b));
  sink.write("distance.csv", distance_csv(tr));

  Json summary = summary_base("couple", cfg);
  summary["stop_reason"] = stop_name(tr.a.stop);
  summary["t_end"] = tr.a.t_end;
  summary["joint_events"] = tr.joint_events;
  summary["solo_a_events"] = tr.solo_a_events;
  summary["solo_b_events"] = tr.solo_b_events;
  summary["sup_distance"] = tr.sup_distance;
  summary["final_distance"] = tr.final_distance;
  summary["final_state_a"] = state_to_json(tr.a.final_state);
  summary["final_state_b"] = state_to_json(tr.b.final_state);
  if (auto coef = coupled_contraction_coefficient(
          *cfg.initial_state, *cfg.initial_state_b, cfg.coag, cfg.frag, cfg.beta, cfg.sim.lambda,
          cfg.sim.tau_cap.value_or(
              std::max(cfg.initial_state->mass(), cfg.initial_state_b->mass()) + 1.0)))
    summary["contraction_coefficient"] = *coef;
  bool budget_hit = tr.a.stop == StopReason::EventBudget;
  if (replicas > 1) {
    CoupledEnsembleStats st = ensemble_coupled(*cfg.initial_state, *cfg.initial_state_b, cfg.coag,
                                               cfg.frag, cfg.beta, cfg.sim, replicas);
    summary["ensemble"] = Json{{"replicas", st.replicas},
                               {"sup_distance", summary_stats(st.sup_distance)},
                               {"final_distance", summary_stats(st.final_distance)}};
  }
  sink.write("summary.json", summary.dump(2) + "\n");
  sink.write("plotspec.json", plotspec({{"distance.csv", {"d_lambda"}}}).dump(2) + "\n");
  sink.manifest.command = "couple";
  sink.manifest.master_seed = cfg.sim.seed;
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - start)
                .count();
  sink.finish(ms, tr.joint_events + tr.solo_a_events + tr.solo_b_events);
  if (!opt.quiet)
    std::printf("couple: joint=%llu soloA=%llu soloB=%llu sup_d=%s out=%s\n",
                static_cast<unsigned long long>(tr.joint_events),
                static_cast<unsigned long long>(tr.solo_a_events),
                static_cast<unsigned long long>(tr.solo_b_events),
                fmt_g17(tr.sup_distance).c_str(), opt.out_dir.c_str());
  return budget_hit ? 2 : 0;
}

int cmd_solve(const CliOptions& opt) {
  auto start = std::chrono::steady_clock::now();
  OutputSink sink(opt.out_dir);
  RunConfig cfg = parse_config(load_config(opt.config_path, sink), "solve", opt.seed);
  SolveResult res = solve(*cfg.initial_measure, cfg.coag, cfg.frag, cfg.beta, cfg.solver,
                          cfg.grid);
  sink.write("moments.csv", moments_csv(res.snapshots));
  sink.write("final_measure.csv", measure_csv(res.final_measure));
  Json summary = summary_base("solve", cfg);
  summary["scheme"] = cfg.solver.scheme == SolveConfig::Scheme::Euler ? "euler" : "picard";
  summary["steps"] = static_cast<uint64_t>(cfg.solver.t_max / cfg.solver.dt + 0.5);
  summary["overflow_mass"] = res.overflow_mass;
  if (cfg.solver.scheme == SolveConfig::Scheme::Picard) {
    summary["picard_iterations"] = res.picard_iterations;
    summary["picard_last_gap"] = res.picard_last_gap;
  }
  if (!res.snapshots.empty()) {
    const auto& last = res.snapshots.back();
    summary["final_moments"] =
        Json{{"t", last.t}, {"M0", last.m0}, {"M_lambda", last.m_lambda}, {"M1", last.m1}};
  }
  sink.write("summary.json", summary.dump(2) + "\n");
  sink.write("plotspec.json",
             plotspec({{"moments.csv", {"M0", "M_lambda", "M1"}}, {"final_measure.csv", {"w"}}})
                     .dump(2) +
                 "\n");
  sink.manifest.command = "solve";
  sink.manifest.master_seed = cfg.sim.seed;
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - start)
                .count();
  sink.finish(ms, static_cast<uint64_t>(cfg.solver.t_max / cfg.solver.dt + 0.5));
  if (!opt.quiet)
    std::printf("solve: %s, final M0=%s M1=%s out=%s\n",
                cfg.solver.scheme == SolveConfig::Scheme::Euler ? "euler" : "picard",
                fmt_g17(res.snapshots.empty() ? 0.0 : res.snapshots.back().m0).c_str(),
                fmt_g17(res.snapshots.empty() ? 0.0 : res.snapshots.back().m1).c_str(),
                opt.out_dir.c_str());
  return 0;
}

int cmd_audit(const CliOptions& opt) {
  auto start = std::chrono::steady_clock::now();
  OutputSink sink(opt.out_dir);
  AuditConfig acfg;
  if (!opt.config_path.empty()) {
    RunConfig cfg = parse_config(load_config(opt.config_path, sink), "audit", opt.seed);
    acfg.seed = cfg.sim.seed;
    acfg.cases = cfg.audit_cases;
  } else if (opt.seed) {
    acfg.seed = *opt.seed;
  }
  if (opt.cases) acfg.cases = *opt.cases;

  AuditOps ops = AuditOps::real();
  if (opt.mutant) {
    // deliberately broken distance: flips the sign of every term
    ops.dist_lambda = [](const ParticleState& a, const ParticleState& b, double l) {
      return -dist_lambda(a, b, l);
    };
  }
  AuditReport rep = run_audit(acfg, ops);

  Json j;
  j["tool_version"] = kToolVersion;
  j["seed"] = acfg.seed;
  j["cases"] = rep.cases;
  j["violations"] = rep.violations;
  Json stats = Json::array();
  for (const auto& s : rep.stats)
    stats.push_back(Json{{"name", s.name},
                         {"cases", s.cases},
                         {"violations", s.violations},
                         {"worst_slack", s.worst_slack}});
  j["inequalities"] = stats;
  Json firsts = Json::array();
  for (const auto& v : rep.first_violations)
    firsts.push_back(
        Json{{"name", v.name}, {"lhs", v.lhs}, {"rhs", v.rhs}, {"case", v.case_index}});
  j["first_violations"] = firsts;
  sink.write("audit_report.json", j.dump(2) + "\n");
  sink.manifest.command = "audit";
  sink.manifest.master_seed = acfg.seed;
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - start)
                .count();
  sink.finish(ms, acfg.cases);
  if (!opt.quiet)
    std::printf("audit: %ld cases, %ld violations, out=%s\n", rep.cases, rep.violations,
                opt.out_dir.c_str());
  return rep.clean() ? 0 : 5;
}

int cmd_verify_kernels(const CliOptions& opt) {
  auto start = std::chrono::steady_clock::now();
  OutputSink sink(opt.out_dir);
  RunConfig cfg = parse_config(load_config(opt.config_path, sink), "verify-kernels", opt.seed);
  GridSpec grid{cfg.verify_eps, cfg.verify_points};
  HypothesisReport rc = verify_coag_hypothesis(cfg.coag, grid);
  HypothesisReport rf = verify_frag_hypothesis(cfg.frag, grid);
  auto to_json = [](const HypothesisReport& r) {
    Json j;
    j["kernel"] = r.kernel;
    j["samples"] = r.samples;
    j["worst_margin"] = r.worst_margin;
    j["consistent_at_this_resolution"] = r.consistent();
    Json v = Json::array();
    for (const auto& x : r.violations)
      v.push_back(
          Json{{"check", x.check}, {"x", x.x}, {"y", x.y}, {"lhs", x.lhs}, {"rhs", x.rhs}});
    j["violations"] = v;
    return j;
  };
  Json j;
  j["tool_version"] = kToolVersion;
  j["coag"] = to_json(rc);
  j["frag"] = to_json(rf);
  sink.write("verify_report.json", j.dump(2) + "\n");
  sink.manifest.command = "verify-kernels";
  sink.manifest.master_seed = cfg.sim.seed;
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - start)
                .count();
  sink.finish(ms, static_cast<uint64_t>(rc.samples + rf.samples));
  if (!opt.quiet)
    std::printf("verify-kernels: coag %zu violations, frag %zu violations, out=%s\n",
                rc.violations.size(), rf.violations.size(), opt.out_dir.c_str());
  return 0;
}

int cmd_truncation_study(const CliOptions& opt) {
  auto start = std::chrono::steady_clock::now();
  OutputSink sink(opt.out_dir);
  RunConfig cfg =
      parse_config(load_config(opt.config_path, sink), "truncation-study", opt.seed);
  auto rows = truncation_cauchy_check(*cfg.initial_measure, cfg.coag, cfg.frag, cfg.beta,
                                      cfg.solver, cfg.grid, cfg.levels);
  std::string csv = "level_lo,level_hi,uniqueness_distance\n";
  for (const auto& r : rows)
    csv += std::to_string(r.level_lo) + "," + std::to_string(r.level_hi) + "," +
           fmt_g17(r.distance) + "\n";
  sink.write("truncation_distances.csv", csv);
  Json summary = summary_base("truncation-study", cfg);
  Json jr = Json::array();
  for (const auto& r : rows)
    jr.push_back(Json{{"level_lo", r.level_lo},
                      {"level_hi", r.level_hi},
                      {"uniqueness_distance", r.distance}});
  summary["rows"] = jr;
  sink.write("summary.json", summary.dump(2) + "\n");
  sink.manifest.command = "truncation-study";
  sink.manifest.master_seed = cfg.sim.seed;
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - start)
                .count();
  sink.finish(ms, 0);
  if (!opt.quiet) std::printf("truncation-study: %zu rows, out=%s\n", rows.size(), opt.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coagulation-fragmentation kinetics engine"};
  app.require_subcommand(1);

  CliOptions opt;
  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", opt.config_path, "JSON config path");
    if (config_required) c->required();
    sub->add_option("--out", opt.out_dir, "output directory");
    sub->add_option("--seed", opt.seed, "seed override (wins over config and COAGFRAG_SEED)");
    sub->add_flag("--quiet", opt.quiet, "suppress progress output");
  };

  auto* sim = app.add_subcommand("simulate", "run one stochastic trajectory (plus ensemble stats)");
  add_common(sim, true);
  sim->add_option("--replicas", opt.replicas, "ensemble replica count override");
  sim->add_option("--mean-field-n", opt.mean_field_n,
                  "experimental: scale coagulation rates by 1/N (no convergence claims)");

  auto* cup = app.add_subcommand("couple", "run two processes under shared randomness");
  add_common(cup, true);
  cup->add_option("--replicas", opt.replicas, "ensemble replica count override");

  auto* sol = app.add_subcommand("solve", "deterministic sectional solver");
  add_common(sol, true);

  auto* aud = app.add_subcommand("audit", "randomized jump-map inequality audit");
  add_common(aud, false);
  aud->add_option("--cases", opt.cases, "number of randomized cases");
  aud->add_flag("--self-test-mutant", opt.mutant)->group("");  // test hook, hidden

  auto* ver = app.add_subcommand("verify-kernels", "kernel growth/derivative checks on a grid");
  add_common(ver, true);

  auto* tru = app.add_subcommand("truncation-study", "consecutive truncation-level distances");
  add_common(tru, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(opt);
    if (cup->parsed()) return cmd_couple(opt);
    if (sol->parsed()) return cmd_solve(opt);
    if (aud->parsed()) return cmd_audit(opt);
    if (ver->parsed()) return cmd_verify_kernels(opt);
    if (tru->parsed()) return cmd_truncation_study(opt);
  } catch (const StabilityError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidConfig || e.code() == ErrorCode::DomainError) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 3;
    }
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
  return 1;
}
