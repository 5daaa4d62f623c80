#include "coagfrag/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "coagfrag/errors.hpp"

namespace coagfrag {

const char* kToolVersion = "0.1.0";

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fnv1a_hex(const std::string& bytes) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string digest_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read file: " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a_hex(ss.str());
}

void write_text_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
  if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write file: " + p.string());
}

// ---- kernels ----------------------------------------------------------------

namespace {

const char* coag_family_name(CoagFamily f) {
  switch (f) {
    case CoagFamily::Constant: return "constant";
    case CoagFamily::SumPow: return "sum_pow";
    case CoagFamily::SymProd: return "sym_prod";
    case CoagFamily::ProdFrac: return "prod_frac";
    case CoagFamily::DiffPow: return "diff_pow";
    case CoagFamily::ExpDamped: return "exp_damped";
    case CoagFamily::Custom: return "custom";
  }
  return "?";
}

CoagFamily coag_family_from(const std::string& s) {
  if (s == "constant") return CoagFamily::Constant;
  if (s == "sum_pow") return CoagFamily::SumPow;
  if (s == "sym_prod") return CoagFamily::SymProd;
  if (s == "prod_frac") return CoagFamily::ProdFrac;
  if (s == "diff_pow") return CoagFamily::DiffPow;
  if (s == "exp_damped") return CoagFamily::ExpDamped;
  if (s == "custom") return CoagFamily::Custom;
  throw Error(ErrorCode::InvalidConfig, "kernels.coag.family: unknown family '" + s + "'");
}

const char* frag_family_name(FragFamily f) {
  switch (f) {
    case FragFamily::Constant: return "constant";
    case FragFamily::BoundedInv: return "bounded_inv";
    case FragFamily::Power: return "power";
    case FragFamily::Custom: return "custom";
  }
  return "?";
}

FragFamily frag_family_from(const std::string& s) {
  if (s == "constant") return FragFamily::Constant;
  if (s == "bounded_inv") return FragFamily::BoundedInv;
  if (s == "power") return FragFamily::Power;
  if (s == "custom") return FragFamily::Custom;
  throw Error(ErrorCode::InvalidConfig, "kernels.frag.family: unknown family '" + s + "'");
}

double get_num(const Json& j, const std::string& key, double fallback,
               const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number())
    throw Error(ErrorCode::InvalidConfig, where + "." + key + ": must be a number");
  return j.at(key).get<double>();
}

}  // namespace

Json coag_kernel_to_json(const CoagKernel& k) {
  Json j;
  j["family"] = coag_family_name(k.family);
  Json params;
  params["c"] = k.c;
  params["a"] = k.a;
  params["b"] = k.b;
  params["g"] = k.g;
  if (k.family == CoagFamily::Custom) params["expr"] = k.custom.text();
  j["params"] = params;
  j["lambda"] = k.lambda;
  j["kappa"] = Json{{"kappa0", k.kappa0}, {"kappa1", k.kappa1}};
  if (k.declared_holder_kappa) j["holder_kappa"] = *k.declared_holder_kappa;
  if (k.truncation) j["truncation"] = *k.truncation;
  j["deterministic_track"] = k.deterministic_track;
  return j;
}

CoagKernel coag_kernel_from_json(const Json& j) {
  if (!j.contains("family"))
    throw Error(ErrorCode::InvalidConfig, "kernels.coag.family: missing");
  CoagKernel k;
  k.family = coag_family_from(j.at("family").get<std::string>());
  Json params = j.value("params", Json::object());
  k.c = get_num(params, "c", 1.0, "kernels.coag.params");
  k.a = get_num(params, "a", 0.0, "kernels.coag.params");
  k.b = get_num(params, "b", 0.0, "kernels.coag.params");
  k.g = get_num(params, "g", 0.0, "kernels.coag.params");
  if (k.family == CoagFamily::Custom) {
    if (!params.contains("expr"))
      throw Error(ErrorCode::InvalidConfig, "kernels.coag.params.expr: missing for custom family");
    k.custom = Expr::parse(params.at("expr").get<std::string>());
  }
  k.lambda = get_num(j, "lambda", 1.0, "kernels.coag");
  Json kap = j.value("kappa", Json::object());
  k.kappa0 = get_num(kap, "kappa0", 1.0, "kernels.coag.kappa");
  k.kappa1 = get_num(kap, "kappa1", 1.0, "kernels.coag.kappa");
  if (j.contains("holder_kappa")) k.declared_holder_kappa = j.at("holder_kappa").get<double>();
  if (j.contains("truncation")) k.truncation = j.at("truncation").get<double>();
  k.deterministic_track = j.value("deterministic_track", false);
  try {
    k.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("kernels.coag: ") + e.what());
  }
  return k;
}

Json frag_kernel_to_json(const FragKernel& f) {
  Json j;
  j["family"] = frag_family_name(f.family);
  Json params;
  params["c"] = f.c;
  params["a"] = f.a;
  if (f.family == FragFamily::Custom) params["expr"] = f.custom.text();
  j["params"] = params;
  j["kappa"] = Json{{"kappa2", f.kappa2}, {"kappa3", f.kappa3}};
  j["alpha"] = f.alpha;
  if (f.declared_holder_mu) j["holder_mu"] = *f.declared_holder_mu;
  j["deterministic_track"] = f.deterministic_track;
  return j;
}

FragKernel frag_kernel_from_json(const Json& j) {
  if (!j.contains("family"))
    throw Error(ErrorCode::InvalidConfig, "kernels.frag.family: missing");
  FragKernel f;
  f.family = frag_family_from(j.at("family").get<std::string>());
  Json params = j.value("params", Json::object());
  f.c = get_num(params, "c", 1.0, "kernels.frag.params");
  f.a = get_num(params, "a", 0.0, "kernels.frag.params");
  if (f.family == FragFamily::Custom) {
    if (!params.contains("expr"))
      throw Error(ErrorCode::InvalidConfig, "kernels.frag.params.expr: missing for custom family");
    f.custom = Expr::parse(params.at("expr").get<std::string>());
  }
  Json kap = j.value("kappa", Json::object());
  f.kappa2 = get_num(kap, "kappa2", 1.0, "kernels.frag.kappa");
  f.kappa3 = get_num(kap, "kappa3", 1.0, "kernels.frag.kappa");
  f.alpha = get_num(j, "alpha", 0.0, "kernels.frag");
  if (j.contains("holder_mu")) f.declared_holder_mu = j.at("holder_mu").get<double>();
  f.deterministic_track = j.value("deterministic_track", false);
  try {
    f.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("kernels.frag: ") + e.what());
  }
  return f;
}

Json beta_to_json(const DislocationMeasure& beta) {
  Json atoms = Json::array();
  for (const auto& a : beta.atoms()) {
    Json atom;
    atom["weight"] = a.weight;
    atom["theta"] = a.theta.ratios();
    atoms.push_back(atom);
  }
  return Json{{"atoms", atoms}};
}

DislocationMeasure beta_from_json(const Json& j) {
  if (!j.contains("atoms") || !j.at("atoms").is_array())
    throw Error(ErrorCode::InvalidConfig, "beta.atoms: missing or not an array");
  std::vector<DislocationMeasure::Atom> atoms;
  std::size_t idx = 0;
  for (const auto& a : j.at("atoms")) {
    std::string where = "beta.atoms[" + std::to_string(idx++) + "]";
    if (!a.contains("weight") || !a.at("weight").is_number() ||
        !(a.at("weight").get<double>() > 0.0))
      throw Error(ErrorCode::InvalidConfig, where + ".weight: must be a positive number");
    if (!a.contains("theta") || !a.at("theta").is_array())
      throw Error(ErrorCode::InvalidConfig, where + ".theta: must be an array");
    std::vector<double> theta = a.at("theta").get<std::vector<double>>();
    try {
      atoms.push_back({a.at("weight").get<double>(), RatioSequence::validate(std::move(theta))});
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidConfig, where + ".theta: " + e.what());
    }
  }
  return DislocationMeasure(std::move(atoms));
}

Json state_to_json(const ParticleState& m) {
  Json arr = Json::array();
  for (double x : m.masses()) arr.push_back(x);
  return arr;
}

// ---- config -----------------------------------------------------------------

namespace {

ParticleState state_from_initial(const Json& j, const std::string& where) {
  if (j.contains("masses")) {
    std::vector<double> v = j.at("masses").get<std::vector<double>>();
    try {
      return ParticleState::from_unsorted(std::move(v));
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidConfig, where + ".masses: " + e.what());
    }
  }
  if (j.contains("monodisperse")) {
    const Json& m = j.at("monodisperse");
    if (!m.contains("count") || !m.contains("mass"))
      throw Error(ErrorCode::InvalidConfig, where + ".monodisperse: needs count and mass");
    auto count = m.at("count").get<uint64_t>();
    double mass = m.at("mass").get<double>();
    if (count < 1 || !(mass > 0.0))
      throw Error(ErrorCode::InvalidConfig, where + ".monodisperse: count >= 1 and mass > 0");
    return ParticleState::monodisperse(count, mass);
  }
  throw Error(ErrorCode::InvalidConfig, where + ": needs masses or monodisperse");
}

AtomicMeasure measure_from_initial(const Json& j, const std::string& where) {
  if (j.contains("measure")) {
    const Json& m = j.at("measure");
    if (!m.contains("x") || !m.contains("w"))
      throw Error(ErrorCode::InvalidConfig, where + ".measure: needs x and w arrays");
    try {
      return AtomicMeasure(m.at("x").get<std::vector<double>>(),
                           m.at("w").get<std::vector<double>>());
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidConfig, where + ".measure: " + e.what());
    }
  }
  // particle lists are measures too: unit weight per particle, merged
  ParticleState s = state_from_initial(j, where);
  std::vector<double> xs, ws;
  for (auto it = s.masses().rbegin(); it != s.masses().rend(); ++it) {
    if (!xs.empty() && *it == xs.back())
      ws.back() += 1.0;
    else {
      xs.push_back(*it);
      ws.push_back(1.0);
    }
  }
  return AtomicMeasure(std::move(xs), std::move(ws));
}

GridPolicy grid_from_json(const Json& j) {
  GridPolicy g;
  if (j.contains("kind")) {
    std::string k = j.at("kind").get<std::string>();
    if (k == "geometric")
      g.kind = GridPolicy::Kind::Geometric;
    else if (k == "fixed_support")
      g.kind = GridPolicy::Kind::FixedSupport;
    else
      throw Error(ErrorCode::InvalidConfig, "grid.kind: unknown kind '" + k + "'");
  }
  g.ratio = get_num(j, "ratio", g.ratio, "grid");
  g.x_min = get_num(j, "x_min", g.x_min, "grid");
  g.x_max = get_num(j, "x_max", g.x_max, "grid");
  if (j.contains("max_points")) g.max_points = j.at("max_points").get<std::size_t>();
  if (j.contains("overflow")) {
    std::string o = j.at("overflow").get<std::string>();
    if (o == "bucket")
      g.overflow = GridPolicy::Overflow::Bucket;
    else if (o == "error")
      g.overflow = GridPolicy::Overflow::Error;
    else
      throw Error(ErrorCode::InvalidConfig, "grid.overflow: must be bucket or error");
  }
  try {
    g.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  return g;
}

}  // namespace

RunConfig parse_config(const Json& doc, const std::string& mode,
                       std::optional<uint64_t> seed_override) {
  RunConfig cfg;
  cfg.raw = doc;
  if (!doc.contains("kernels") || !doc.at("kernels").contains("coag") ||
      !doc.at("kernels").contains("frag"))
    throw Error(ErrorCode::InvalidConfig, "kernels: needs coag and frag sections");
  cfg.coag = coag_kernel_from_json(doc.at("kernels").at("coag"));
  cfg.frag = frag_kernel_from_json(doc.at("kernels").at("frag"));
  if (!doc.contains("beta")) throw Error(ErrorCode::InvalidConfig, "beta: missing section");
  cfg.beta = beta_from_json(doc.at("beta"));

  Json run = doc.value("run", Json::object());
  // seed precedence: --seed, then config, then COAGFRAG_SEED
  if (seed_override)
    cfg.sim.seed = *seed_override;
  else if (run.contains("seed"))
    cfg.sim.seed = run.at("seed").get<uint64_t>();
  else if (const char* env = std::getenv("COAGFRAG_SEED"))
    cfg.sim.seed = std::strtoull(env, nullptr, 10);

  cfg.sim.t_max = get_num(run, "t_max", 1.0, "run");
  cfg.sim.lambda = get_num(run, "lambda", 1.0, "run");
  if (!(cfg.sim.lambda > 0.0 && cfg.sim.lambda <= 1.0))
    throw Error(ErrorCode::InvalidConfig, "run.lambda: must be in (0,1]");
  if (run.contains("tau_cap")) cfg.sim.tau_cap = run.at("tau_cap").get<double>();
  if (run.contains("max_events")) cfg.sim.max_events = run.at("max_events").get<uint64_t>();
  if (run.contains("record")) {
    std::string r = run.at("record").get<std::string>();
    if (r == "events")
      cfg.sim.record = RecordMode::Events;
    else if (r == "snapshots")
      cfg.sim.record = RecordMode::Snapshots;
    else
      throw Error(ErrorCode::InvalidConfig, "run.record: must be events or snapshots");
  }
  cfg.sim.snapshot_dt = get_num(run, "snapshot_dt", 0.1, "run");
  if (run.contains("replicas")) {
    cfg.replicas = run.at("replicas").get<uint64_t>();
    if (cfg.replicas < 1) throw Error(ErrorCode::InvalidConfig, "run.replicas: must be >= 1");
  }

  if (mode == "simulate" || mode == "couple") {
    if (!doc.contains("initial"))
      throw Error(ErrorCode::InvalidConfig, "initial: missing section");
    cfg.initial_state = state_from_initial(doc.at("initial"), "initial");
    if (mode == "couple") {
      if (!doc.contains("initial_b"))
        throw Error(ErrorCode::InvalidConfig, "initial_b: missing section (second process)");
      cfg.initial_state_b = state_from_initial(doc.at("initial_b"), "initial_b");
    }
    try {
      cfg.sim.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidConfig, e.what());
    }
  }

  if (mode == "solve" || mode == "truncation-study") {
    if (!doc.contains("initial"))
      throw Error(ErrorCode::InvalidConfig, "initial: missing section");
    cfg.initial_measure = measure_from_initial(doc.at("initial"), "initial");
    Json sv = run.value("solver", Json::object());
    cfg.solver.dt = get_num(sv, "dt", 1e-3, "run.solver");
    cfg.solver.t_max = cfg.sim.t_max;
    cfg.solver.lambda = cfg.sim.lambda;
    cfg.solver.snapshot_dt = get_num(sv, "snapshot_dt", cfg.sim.snapshot_dt, "run.solver");
    cfg.solver.picard_tol = get_num(sv, "picard_tol", 1e-10, "run.solver");
    if (sv.contains("picard_max_iters"))
      cfg.solver.picard_max_iters = sv.at("picard_max_iters").get<int>();
    if (sv.contains("scheme")) {
      std::string s = sv.at("scheme").get<std::string>();
      if (s == "euler")
        cfg.solver.scheme = SolveConfig::Scheme::Euler;
      else if (s == "picard")
        cfg.solver.scheme = SolveConfig::Scheme::Picard;
      else
        throw Error(ErrorCode::InvalidConfig, "run.solver.scheme: must be euler or picard");
    }
    cfg.grid = grid_from_json(sv.value("grid", Json::object()));
    try {
      cfg.solver.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidConfig, e.what());
    }
    if (mode == "truncation-study" && run.contains("levels")) {
      cfg.levels = run.at("levels").get<std::vector<std::size_t>>();
      if (cfg.levels.size() < 2)
        throw Error(ErrorCode::InvalidConfig, "run.levels: needs at least two levels");
    }
  }

  if (mode == "audit" && run.contains("cases"))
    cfg.audit_cases = run.at("cases").get<uint64_t>();
  if (mode == "verify-kernels") {
    cfg.verify_eps = get_num(run, "grid_eps", 1e-3, "run");
    if (run.contains("grid_points")) cfg.verify_points = run.at("grid_points").get<int>();
  }
  return cfg;
}

// ---- CSV --------------------------------------------------------------------

std::string trajectory_csv(const Trajectory& t) {
  std::string out = "time,event_kind,i,j_or_atom,n_particles,mass_total,norm_lambda\n";
  for (const auto& e : t.events) {
    out += fmt_g17(e.time);
    out += e.kind == EventKind::Coalesce ? ",coalesce," : ",fragment,";
    out += std::to_string(e.i) + "," + std::to_string(e.j_or_atom) + "," +
           std::to_string(e.n_particles) + "," + fmt_g17(e.mass_total) + "," +
           fmt_g17(e.norm_lambda) + "\n";
  }
  return out;
}

std::string snapshots_csv(const Trajectory& t) {
  std::string out = "time,n_particles,mass_total,norm_lambda\n";
  for (const auto& s : t.snapshots)
    out += fmt_g17(s.time) + "," + std::to_string(s.n_particles) + "," + fmt_g17(s.mass) + "," +
           fmt_g17(s.norm_lambda) + "\n";
  return out;
}

std::string distance_csv(const CoupledTrajectory& t) {
  std::string out = "time,d_lambda\n";
  for (const auto& [time, d] : t.distance_series)
    out += fmt_g17(time) + "," + fmt_g17(d) + "\n";
  return out;
}

std::string moments_csv(const std::vector<MomentSnapshot>& snaps) {
  std::string out = "t,M0,M_lambda,M1,overflow_mass\n";
  for (const auto& s : snaps)
    out += fmt_g17(s.t) + "," + fmt_g17(s.m0) + "," + fmt_g17(s.m_lambda) + "," + fmt_g17(s.m1) +
           "," + fmt_g17(s.overflow_mass) + "\n";
  return out;
}

std::string measure_csv(const AtomicMeasure& m) {
  std::string out = "x,w\n";
  for (std::size_t g = 0; g < m.size(); ++g)
    out += fmt_g17(m.x[g]) + "," + fmt_g17(m.w[g]) + "\n";
  return out;
}

Json Manifest::to_json() const {
  Json j;
  j["tool_version"] = tool_version;
  j["command"] = command;
  j["master_seed"] = master_seed;
  j["config_digest"] = config_digest;
  if (!config_echo.is_null()) j["config"] = config_echo;
  Json ins = Json::array();
  for (const auto& [p, d] : inputs) ins.push_back(Json{{"path", p}, {"digest", d}});
  j["inputs"] = ins;
  Json outs = Json::array();
  for (const auto& [p, d] : outputs) outs.push_back(Json{{"path", p}, {"digest", d}});
  j["outputs"] = outs;
  j["event_count"] = event_count;
  j["wall_clock_ms"] = wall_clock_ms;
  return j;
}

}  // namespace coagfrag
