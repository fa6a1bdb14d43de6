#include <chrono>
#include <ctime>
#include <fstream>

#include "snse/errors.hpp"
#include "snse/harness.hpp"
#include "snse/parallel.hpp"

namespace snse::harness {
namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json estimate_json(const ProbabilityEstimate& p) {
  return {{"hits", p.hits},
          {"samples", p.samples},
          {"estimate", p.estimate},
          {"lo", p.wilson.lo},
          {"hi", p.wilson.hi},
          {"upper_bound", p.upper_bound},
          {"zero_hits", p.zero_hits()}};
}

Json fit_json(const LinearFit& f) {
  return {{"slope", finite_or_null(f.slope)},
          {"intercept", finite_or_null(f.intercept)},
          {"slope_se", finite_or_null(f.slope_se)},
          {"r_squared", finite_or_null(f.r_squared)}};
}

Json series_json(const Trajectory& t) {
  std::vector<double> h, v;
  for (const auto& f : t.frames) {
    h.push_back(h_norm_sq(f));
    v.push_back(v_norm_sq(f));
  }
  return {{"t", t.times},
          {"h_norm_sq", h},
          {"v_norm_sq", v},
          {"sup_h_sq", t.running_sup_h_sq},
          {"int_v_sq", t.running_int_v_sq},
          {"energy_norm", energy_norm(t)}};
}

McOptions mc_options(const ExperimentConfig& config, std::size_t samples) {
  McOptions o;
  o.samples = samples;
  o.seed = config.seed();
  o.workers = config.workers();
  return o;
}

SimConfig every_step(SimConfig sim) {
  sim.record_stride = 1;
  return sim;
}

LilSchedule schedule_of(const Json& s) { return {s["base"].get<double>(), s["j_min"].get<int>(), s["j_max"].get<int>()}; }

struct Outputs {
  Json results = Json::object();
  std::vector<std::pair<std::string, Trajectory>> trajectories;
  bool checks_failed = false;
};

Outputs simulate(const ExperimentConfig& config, const SimConfig& sim) {
  Outputs out;
  const Trajectory u0 = solve_deterministic(sim);
  out.results["epsilon"] = sim.epsilon;
  out.results["trajectories"]["u0"] = series_json(u0);
  if (sim.epsilon > 0.0) {
    const Trajectory ue = solve_snse(sim, config.seed());
    out.results["trajectories"]["u_eps"] = series_json(ue);
    out.results["deviation_energy_norm"] = energy_distance(ue, u0);
    out.trajectories.emplace_back("u0", u0);
    out.trajectories.emplace_back("u_eps", ue);
  } else {
    out.trajectories.emplace_back("u0", u0);
  }
  return out;
}

Outputs skeleton(const ExperimentConfig& config, const SimConfig& sim) {
  Outputs out;
  const Control h = build_control(config.params()["control"], sim);
  const Trajectory u0 = solve_deterministic(every_step(sim));
  Trajectory x = solve_skeleton(h, u0, sim);
  out.results["control_half_energy"] = 0.5 * control_energy(h, sim.noise);
  out.results["trajectories"]["skeleton"] = series_json(x);
  out.trajectories.emplace_back("skeleton", std::move(x));
  return out;
}

Outputs rate(const ExperimentConfig& config, const SimConfig& sim) {
  Outputs out;
  const Json& p = config.params();
  const Trajectory u0 = solve_deterministic(every_step(sim));
  const Trajectory target = build_rate_target(p["target"], sim);
  RateOptions opt;
  opt.feasibility_tol = p["feasibility_tol"];
  opt.energy_cap = p["energy_cap"];
  opt.penalty_max = p["penalty_max"];
  opt.sharpness = p["sharpness"];
  opt.max_iterations = p["max_iterations"];
  const RateResult res = rate_function(target, u0, sim, opt);
  out.results = {{"feasible", res.feasible},
                 {"value", finite_or_null(res.value)},
                 {"half_energy", res.half_energy},
                 {"residual", res.residual},
                 {"penalty", res.penalty},
                 {"iterations", res.iterations},
                 {"evaluations", res.evaluations},
                 {"gradient_norm", res.gradient_norm},
                 {"status", res.status},
                 {"target_energy_norm", energy_norm(target)}};
  SimConfig rec = sim;
  rec.record_stride = target.stride;
  Trajectory image = solve_skeleton(res.control, u0, rec);
  image.provenance.kind = "rate_minimizer";
  out.trajectories.emplace_back("target", target);
  out.trajectories.emplace_back("minimizer", std::move(image));
  return out;
}

Outputs mdp(const ExperimentConfig& config, const SimConfig& sim) {
  Outputs out;
  const Json& p = config.params();
  SpeedFunction a;
  a.kind = p["speed"]["kind"] == "power" ? SpeedFunction::Kind::power : SpeedFunction::Kind::loglog;
  a.gamma = p["speed"]["gamma"];
  const auto grid = p["eps_grid"].get<std::vector<double>>();
  const auto rep = mdp_scaling_probe(p["radius"], grid, a, sim, mc_options(config, p["samples"]));
  Json rows = Json::array();
  for (const auto& r : rep.rows) {
    rows.push_back({{"eps", r.eps},
                    {"a", r.a},
                    {"threshold", r.threshold},
                    {"probability", estimate_json(r.probability)},
                    {"scaled_log", r.scaled_log},
                    {"gap", r.gap}});
  }
  out.results = {{"radius", rep.radius},
                 {"rate", finite_or_null(rep.rate)},
                 {"lambda", rep.lambda},
                 {"rows", rows},
                 {"trend", fit_json(rep.trend)},
                 {"gap_shrinks", rep.gap_shrinks}};
  return out;
}

Outputs fw(const ExperimentConfig& config, const SimConfig& sim) {
  Outputs out;
  const Json& p = config.params();
  FWConfig f;
  f.rho = p["rho"];
  f.eta = p["eta"];
  f.R = p["R"];
  f.beta = p["beta"];
  f.depth = p["depth"];
  f.eps_grid = p["eps_grid"].get<std::vector<double>>();
  f.samples = p["samples"];
  const Control h = build_control(p["control"], sim);
  const auto rep = fw_conditional_probe(h, f, sim, mc_options(config, f.samples));
  Json rows = Json::array();
  for (const auto& r : rep.rows) {
    rows.push_back({{"eps", r.eps},
                    {"loglog", r.loglog},
                    {"joint", estimate_json(r.joint)},
                    {"closeness", estimate_json(r.closeness)},
                    {"deviation", estimate_json(r.deviation)},
                    {"conditional", estimate_json(r.conditional)},
                    {"bound", r.bound},
                    {"below_bound", r.below_bound}});
  }
  out.results = {{"rows", rows},
                 {"below_at_smallest", rep.below_at_smallest},
                 {"control_half_energy", 0.5 * control_energy(h, sim.noise)}};
  return out;
}

Outputs moments(const ExperimentConfig& config, const SimConfig& sim) {
  Outputs out;
  const Json& p = config.params();
  const ConstantsLedger ledger = build_ledger(config);
  MomentOptions mo;
  mo.eps_grid = p["eps_grid"].get<std::vector<double>>();
  mo.p_list = p["p_list"].get<std::vector<double>>();
  mo.skeleton_level = p["skeleton_level"];
  mo.skeleton_probes = p["skeleton_probes"];
  mo.ledger = &ledger;
  const auto rep = moment_bound_suite(mo, sim, mc_options(config, p["samples"]));
  Json rows = Json::array(), fits = Json::array();
  for (const auto& r : rep.rows) {
    rows.push_back({{"quantity", r.quantity},
                    {"p", r.p},
                    {"eps", r.eps},
                    {"mean", r.value.mean},
                    {"variance", r.value.variance},
                    {"n", r.value.n},
                    {"se", r.value.standard_error()}});
  }
  for (const auto& f : rep.fits) {
    fits.push_back({{"quantity", f.quantity},
                    {"p", f.p},
                    {"stated_power", f.stated_power},
                    {"fitted_exponent", finite_or_null(f.fitted_exponent)},
                    {"exponent_se", finite_or_null(f.exponent_se)},
                    {"implied_constant", finite_or_null(f.implied_constant)}});
  }
  out.results = {{"rows", rows},
                 {"fits", fits},
                 {"k6", rep.k6},
                 {"k7", rep.k7},
                 {"l4_u0", rep.l4_u0},
                 {"skeleton", rep.skeleton}};
  return out;
}

Outputs strassen(const ExperimentConfig& config, const SimConfig& sim) {
  Outputs out;
  const Json& p = config.params();
  const LilSchedule sched = schedule_of(p["schedule"]);
  const Trajectory u0 = solve_deterministic(every_step(sim));
  const auto probe = LimitSetProbe::sinusoid_family(u0, sim, p["probe"]["modes"], p["probe"]["harmonics"],
                                                    p["probe"]["tolerance"]);
  const auto rep = strassen_cluster_study(sched, probe, sim, mc_options(config, p["samples"]));
  std::vector<double> half;
  for (std::size_t i = 0; i < probe.size(); ++i) half.push_back(0.5 * control_energy(probe.control(i), sim.noise));
  out.results = {{"j", rep.j},
                 {"eps", rep.eps},
                 {"distance", rep.distance},
                 {"nearest", rep.nearest},
                 {"hit_fraction", rep.hit_fraction},
                 {"running_max", rep.running_max},
                 {"probe_half_energy", half},
                 {"tolerance", probe.tolerance()}};
  return out;
}

Outputs classical(const ExperimentConfig& config, const SimConfig& sim) {
  Outputs out;
  const Json& p = config.params();
  const auto rep = classical_ratio_study(schedule_of(p["schedule"]), sim, mc_options(config, p["samples"]));
  Json q = Json::array();
  for (const auto& a : rep.quantiles) q.push_back({{"q10", a[0]}, {"q50", a[1]}, {"q90", a[2]}});
  out.results = {{"j", rep.j},
                 {"eps", rep.eps},
                 {"ratio", rep.ratio},
                 {"running_max", rep.running_max},
                 {"running_min", rep.running_min},
                 {"mean", rep.mean},
                 {"quantiles", q},
                 {"trend", fit_json(rep.trend)}};
  return out;
}

Outputs verify_experiment(const ExperimentConfig& config) {
  Outputs out;
  const Json& p = config.params();
  VerifyOptions opt;
  opt.corrupt_divergence = p["corrupt_divergence"];
  opt.gradient_perturbations = p["gradient_perturbations"];
  const auto rep = verify(config, opt);
  out.results = rep.to_json();
  out.checks_failed = !rep.passed();
  return out;
}

Outputs dispatch(const ExperimentConfig& config) {
  const std::string& kind = config.kind();
  if (kind == "verify") return verify_experiment(config);
  const SimConfig sim = build_sim_config(config);
  if (kind == "simulate") return simulate(config, sim);
  if (kind == "skeleton") return skeleton(config, sim);
  if (kind == "rate") return rate(config, sim);
  if (kind == "mdp-scaling") return mdp(config, sim);
  if (kind == "fw-probe") return fw(config, sim);
  if (kind == "moments") return moments(config, sim);
  if (kind == "lil-strassen") return strassen(config, sim);
  if (kind == "lil-classical") return classical(config, sim);
  throw SchemaError("unknown experiment kind " + kind, {"experiment.kind"});
}

FileEntry entry(const fs::path& dir, const std::string& name, const std::string& role) {
  return {name, role, sha256_file(dir / name), fs::file_size(dir / name)};
}

}  // namespace

Json RunManifest::to_json() const {
  Json files_json = Json::array();
  for (const auto& f : files) {
    files_json.push_back({{"path", f.path}, {"role", f.role}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  }
  return {{"format", "snse-manifest"},
          {"version", 1},
          {"config_hash", config_hash},
          {"code_version", code_version},
          {"experiment", experiment},
          {"seed", seed},
          {"workers", workers},
          {"started_at", started_at},
          {"finished_at", finished_at},
          {"status", status},
          {"error", error},
          {"files", files_json}};
}

RunManifest RunManifest::from_json(const Json& doc) {
  if (!doc.is_object() || doc.value("format", "") != "snse-manifest") throw IoError("not an snse manifest");
  RunManifest m;
  try {
    m.config_hash = doc.at("config_hash");
    m.code_version = doc.at("code_version");
    m.experiment = doc.at("experiment");
    m.seed = doc.at("seed");
    m.workers = doc.at("workers");
    m.started_at = doc.at("started_at");
    m.finished_at = doc.at("finished_at");
    m.status = doc.at("status");
    m.error = doc.at("error");
    for (const auto& f : doc.at("files")) {
      m.files.push_back({f.at("path"), f.at("role"), f.at("sha256"), f.at("bytes")});
    }
  } catch (const Json::exception& e) {
    throw IoError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

Json error_json(const std::exception& e) {
  Json err{{"message", e.what()}};
  if (const auto* s = dynamic_cast<const SchemaError*>(&e)) {
    err["kind"] = "schema";
    err["keys"] = s->keys();
  } else if (dynamic_cast<const AdmissibilityError*>(&e)) {
    err["kind"] = "admissibility";
  } else if (dynamic_cast<const IoError*>(&e)) {
    err["kind"] = "io";
  } else if (const auto* i = dynamic_cast<const IntegrationError*>(&e)) {
    err["kind"] = "integration";
    err["step"] = i->step();
  } else if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParameterError*>(&e) ||
             dynamic_cast<const FieldError*>(&e)) {
    err["kind"] = "parameter";
  } else {
    err["kind"] = "runtime";
  }
  return err;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const SchemaError*>(&e)) return kSchema;
  if (dynamic_cast<const AdmissibilityError*>(&e)) return kAdmissibility;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e)) return kIo;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParameterError*>(&e) ||
      dynamic_cast<const FieldError*>(&e)) {
    return kSchema;
  }
  return kRuntime;
}

Json evaluate(const ExperimentConfig& config) {
  check_admissibility(config);
  return dispatch(config).results;
}

RunResult run(const ExperimentConfig& config) {
  RunResult result;
  RunManifest& m = result.manifest;
  m.started_at = utc_now();
  m.code_version = code_version();
  m.experiment = config.kind();
  m.seed = config.seed();
  m.workers = resolve_workers(config.workers());
  m.config_hash = config_hash(config);
  m.status = "ok";
  m.error = nullptr;

  const fs::path dir = config.output_directory();
  result.manifest_path = dir / "manifest.json";
  try {
    fs::create_directories(dir);
  } catch (const fs::filesystem_error& e) {
    m.status = "failed";
    m.error = error_json(e);
    result.exit_code = kIo;
    return result;
  }

  try {
    Json resolved = config.doc;
    resolved.erase("output");
    resolved.erase("workers");
    write_json(dir / "config.json", resolved);
    m.files.push_back(entry(dir, "config.json", "config"));

    check_admissibility(config);
    Outputs out = dispatch(config);
    for (auto& [name, traj] : out.trajectories) {
      traj.provenance.config_hash = m.config_hash;
      const std::string file = "trajectory_" + name + ".bin";
      write_trajectory(dir / file, traj);
      m.files.push_back(entry(dir, file, "trajectory"));
    }
    const Json report{{"experiment", config.kind()},
                      {"config_hash", m.config_hash},
                      {"seed", m.seed},
                      {"code_version", m.code_version},
                      {"results", out.results}};
    write_json(dir / "report.json", report);
    m.files.push_back(entry(dir, "report.json", "report"));
    if (out.checks_failed) {
      m.status = "failed";
      m.error = {{"kind", "check"}, {"message", "one or more invariant checks failed"}};
      result.exit_code = kCheckFailed;
    }
  } catch (const std::exception& e) {
    m.status = "failed";
    m.error = error_json(e);
    result.exit_code = exit_code_for(e);
  }

  m.finished_at = utc_now();
  try {
    write_json(result.manifest_path, m.to_json());
  } catch (const std::exception& e) {
    if (result.exit_code == kOk) result.exit_code = kIo;
  }
  return result;
}

}  // namespace snse::harness
