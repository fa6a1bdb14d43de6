#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>

#include "snse/errors.hpp"
#include "snse/harness.hpp"

namespace snse::harness {
namespace {

Json leaf(const char* type, Json def, const char* description) {
  return Json{{"type", type}, {"default", std::move(def)}, {"description", description}};
}

Json with(Json node, const char* key, Json value) {
  node[key] = std::move(value);
  return node;
}

Json object(const char* description, Json properties) {
  return Json{{"type", "object"}, {"description", description}, {"properties", std::move(properties)}};
}

Json positive(const char* type, Json def, const char* description) {
  return with(leaf(type, std::move(def), description), "exclusiveMinimum", 0);
}

Json nonnegative(const char* type, Json def, const char* description) {
  return with(leaf(type, std::move(def), description), "minimum", 0);
}

Json number_list(Json def, const char* description, bool positive_items = true) {
  Json item{{"type", "number"}};
  if (positive_items) item["exclusiveMinimum"] = 0;
  return with(leaf("array", std::move(def), description), "items", item);
}

Json control_block() {
  return object("Cameron-Martin control h(t) on the solver grid",
                {{"kind", with(leaf("string", "zero", "zero | constant | sinusoid"), "enum",
                               {"zero", "constant", "sinusoid"})},
                 {"direction", nonnegative("integer", 0, "noise direction j carrying the control")},
                 {"amplitude", leaf("number", 1.0, "h_j amplitude")},
                 {"harmonic", positive("integer", 1, "q in sin(pi q t / T)")}});
}

Json schedule_block() {
  return object("eps_j = base^-j for j_min <= j <= j_max",
                {{"base", with(leaf("number", 2.0, "c > 1"), "exclusiveMinimum", 1)},
                 {"j_min", positive("integer", 7, "first index")},
                 {"j_max", positive("integer", 12, "last index")}});
}

Json build_schema() {
  Json root = object(
      "snse experiment configuration",
      {{"version", with(leaf("integer", kSchemaVersion, "schema version"), "enum", {kSchemaVersion})},
       {"seed", nonnegative("integer", 1, "base seed; MC path i draws from the Philox stream (seed, i)")},
       {"workers", nonnegative("integer", 1, "worker threads, 0 = hardware concurrency")},
       {"output", object("run directory", {{"directory", leaf("string", "runs/default", "output directory")}})},
       {"grid", object("Fourier box |k|_inf <= K on an N x N collocation grid",
                       {{"K", positive("integer", 10, "largest wavenumber")},
                        {"N", positive("integer", 32, "collocation points per side; N > 3K to dealias")}})},
       {"solver", object("time integration",
                         {{"T", nonnegative("number", 1.0, "horizon")},
                          {"dt", positive("number", 1e-3, "step; T/dt must be an integer")},
                          {"nonlinear", leaf("boolean", true, "false drops B (linear regime)")},
                          {"record_stride", positive("integer", 10, "solver steps per recorded frame")},
                          {"blowup_factor", positive("number", 1e6, "abort when |u|^2 grows past this factor")}})},
       {"initial", object("initial velocity u0",
                          {{"kind", with(leaf("string", "random", "zero | random | taylor_green"), "enum",
                                         {"zero", "random", "taylor_green"})},
                           {"norm", nonnegative("number", 1.0, "H norm |u0|")},
                           {"seed", nonnegative("integer", 1, "seed of the random field")},
                           {"decay", nonnegative("number", 1.5, "random spectrum (1 + |k|^2)^-decay")}})},
       {"forcing", object("f(t) = amplitude (sin(n x2), 0) cos(frequency t)",
                          {{"kind", with(leaf("string", "none", "none | kolmogorov"), "enum", {"none", "kolmogorov"})},
                           {"amplitude", leaf("number", 1.0, "forcing amplitude")},
                           {"wavenumber", positive("integer", 1, "n")},
                           {"frequency", leaf("number", 0.0, "temporal frequency")}})},
       {"noise", object(
                     "Q-Wiener noise and sigma family",
                     {{"spectrum_exponent", with(leaf("number", 2.0, "lambda_j = |k_j|^-2s, s > 1"), "exclusiveMinimum", 1)},
                      {"num_modes", nonnegative("integer", 0, "number of directions J, 0 = all")},
                      {"max_wavenumber", nonnegative("integer", 0, "keep |k|_inf <= this, 0 = all")},
                      {"family", with(leaf("string", "additive", "additive | saturated"), "enum", {"additive", "saturated"})},
                      {"amplitude", nonnegative("number", 1.0, "base gain g")},
                      {"saturation", positive("number", 1.0, "s0")},
                      {"growth", nonnegative("number", 1.0, "alpha")},
                      {"silenced", with(leaf("array", Json::array(), "wavenumbers [k1, k2] with zero gain"), "items",
                                        {{"type", "array"}, {"length", 2}, {"items", {{"type", "integer"}}}})}})},
       {"constants", object("lemma constants ledger",
                            {{"K", with(with(leaf("array", Json(std::vector<double>(9, 1.0)), "K1..K9"), "length", 9),
                                        "items", {{"type", "number"}, {"exclusiveMinimum", 0}})}})},
       {"experiment",
        object("experiment selection; only the block named by kind is used",
               {{"kind", with(leaf("string", "simulate", "experiment to run"), "enum",
                              {"simulate", "skeleton", "rate", "mdp-scaling", "fw-probe", "moments", "lil-strassen",
                               "lil-classical", "verify"})},
                {"simulate", object("u0, and u^eps when epsilon > 0",
                                    {{"epsilon", nonnegative("number", 0.0, "noise level")}})},
                {"skeleton", object("skeleton image X^h", {{"control", control_block()}})},
                {"rate", object("rate function I(v) by penalty continuation",
                                {{"target", object("smooth target path",
                                                   {{"amplitude", nonnegative("number", 1.0, "coefficient scale")},
                                                    {"stride", positive("integer", 10, "steps between target records")},
                                                    {"seed", nonnegative("integer", 2, "coefficient seed")}})},
                                 {"feasibility_tol", positive("number", 1e-4, "E(T) residual tolerance")},
                                 {"energy_cap", positive("number", 1e3, "(1/2) energy cap")},
                                 {"penalty_max", positive("number", 1e14, "largest penalty weight")},
                                 {"sharpness", positive("number", 50.0, "soft-max sharpness")},
                                 {"max_iterations", positive("integer", 400, "quasi-Newton iterations per level")}})},
                {"mdp-scaling", object("a(eps)^2 log P(||u^eps - u0|| >= r sqrt(eps)/a(eps)) against -I*",
                                       {{"radius", nonnegative("number", 0.5, "r")},
                                        {"eps_grid", number_list({1e-3, 1e-4, 1e-5}, "noise levels")},
                                        {"speed", object("a(eps)",
                                                         {{"kind", with(leaf("string", "loglog", "loglog | power"), "enum",
                                                                        {"loglog", "power"})},
                                                          {"gamma", leaf("number", 0.25, "power exponent")}})},
                                        {"samples", positive("integer", 1000, "paths per eps")}})},
                {"fw-probe", object("conditional deviation probability against exp(-2R loglog 1/eps)",
                                    {{"control", control_block()},
                                     {"rho", positive("number", 0.5, "deviation radius")},
                                     {"eta", positive("number", 1.0, "noise closeness radius")},
                                     {"R", positive("number", 0.5, "exponent R")},
                                     {"beta", nonnegative("number", 0.0, "dyadic increment cut, 0 = off")},
                                     {"depth", nonnegative("integer", 0, "dyadic depth n")},
                                     {"eps_grid", number_list({1e-3, 1e-4, 1e-5}, "noise levels")},
                                     {"samples", positive("integer", 1000, "paths per eps")}})},
                {"moments", object("moment bounds against eps",
                                   {{"eps_grid", number_list({1e-2, 1e-3, 1e-4, 1e-5}, "noise levels")},
                                    {"p_list", with(number_list({1.0, 2.0}, "moment orders"), "items",
                                                    {{"type", "number"}, {"minimum", 1}})},
                                    {"skeleton_level", positive("number", 1.0, "N in S_N")},
                                    {"skeleton_probes", positive("integer", 4, "controls probed in S_N")},
                                    {"samples", positive("integer", 200, "paths per eps")}})},
                {"lil-strassen", object("distance of Z^eps_j to a finite limit-set probe",
                                        {{"schedule", schedule_block()},
                                         {"probe", object("sinusoid family with (1/2) energy 1",
                                                          {{"modes", positive("integer", 2, "directions used")},
                                                           {"harmonics", positive("integer", 2, "harmonics per direction")},
                                                           {"tolerance", nonnegative("number", 0.25, "hit radius")}})},
                                         {"samples", positive("integer", 100, "replicate paths")}})},
                {"lil-classical", object("||u^eps_j - u0|| / sqrt(2 eps_j loglog 1/eps_j)",
                                         {{"schedule", schedule_block()},
                                          {"samples", positive("integer", 200, "replicate paths")}})},
                {"verify", object("invariant suite",
                                  {{"corrupt_divergence", leaf("boolean", false, "inject a divergent mode (negative control)")},
                                   {"gradient_perturbations", positive("integer", 20, "finite-difference directions")},
                                   {"gradient_steps", positive("integer", 50, "horizon of the gradient check in steps")},
                                   {"divergence_steps", positive("integer", 1000, "steps of the divergence run")}})}})}});
  return root;
}

std::string join_path(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }

struct Validator {
  std::vector<std::string> keys;
  std::vector<std::string> messages;

  void fail(const std::string& path, const std::string& message) {
    keys.push_back(path);
    messages.push_back(path + ": " + message);
  }

  Json value(const Json& schema, const Json* given, const std::string& path) {
    const std::string type = schema.at("type");
    if (type == "object" && schema.contains("properties")) {
      Json out = Json::object();
      if (given && !given->is_object()) {
        fail(path, "expected an object");
        given = nullptr;
      }
      if (given) {
        for (const auto& [k, v] : given->items()) {
          if (!schema["properties"].contains(k)) fail(join_path(path, k), "unknown key");
        }
      }
      for (const auto& [k, sub] : schema["properties"].items()) {
        const Json* child = given && given->contains(k) ? &(*given)[k] : nullptr;
        out[k] = value(sub, child, join_path(path, k));
      }
      return out;
    }
    if (!given) return schema.at("default");
    return checked(schema, *given, path);
  }

  Json checked(const Json& schema, const Json& v, const std::string& path) {
    const std::string type = schema.at("type");
    Json out = v;
    if (type == "integer") {
      if (!v.is_number_integer()) {
        fail(path, "expected an integer");
        return v;
      }
    } else if (type == "number") {
      if (!v.is_number()) {
        fail(path, "expected a number");
        return v;
      }
      out = v.get<double>();
    } else if (type == "boolean") {
      if (!v.is_boolean()) fail(path, "expected a boolean");
      return v;
    } else if (type == "string") {
      if (!v.is_string()) {
        fail(path, "expected a string");
        return v;
      }
    } else if (type == "array") {
      if (!v.is_array()) {
        fail(path, "expected an array");
        return v;
      }
      if (schema.contains("length") && v.size() != schema["length"].get<std::size_t>()) {
        fail(path, "expected " + std::to_string(schema["length"].get<std::size_t>()) + " entries");
      }
      out = Json::array();
      for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(checked(schema.at("items"), v[i], path + "[" + std::to_string(i) + "]"));
      }
      return out;
    }
    if (schema.contains("enum")) {
      bool found = false;
      for (const auto& e : schema["enum"]) found = found || e == v;
      if (!found) fail(path, "value " + v.dump() + " not in " + schema["enum"].dump());
    }
    if (v.is_number()) {
      const double x = v.get<double>();
      if (!std::isfinite(x)) fail(path, "must be finite");
      if (schema.contains("minimum") && x < schema["minimum"].get<double>()) {
        fail(path, "must be >= " + schema["minimum"].dump());
      }
      if (schema.contains("exclusiveMinimum") && !(x > schema["exclusiveMinimum"].get<double>())) {
        fail(path, "must be > " + schema["exclusiveMinimum"].dump());
      }
    }
    return out;
  }
};

std::vector<double> doubles(const Json& a) { return a.get<std::vector<double>>(); }

SpectralField random_initial(const SpectralGrid& grid, std::uint64_t seed, double decay) {
  NormalStream rng(seed, 0);
  ModeCoefficients c(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Wavenumber k = grid.wavenumber(i);
    if (!(k.k1 > 0 || (k.k1 == 0 && k.k2 > 0))) continue;
    const double a = std::pow(1.0 + k.norm_sq(), -decay);
    c.c1[i] = a * Complex(rng(), rng());
    c.c2[i] = a * Complex(rng(), rng());
    c.c1[grid.mirror(i)] = std::conj(c.c1[i]);
    c.c2[grid.mirror(i)] = std::conj(c.c2[i]);
  }
  return project_leray(grid, c);
}

// u = (sin x cos y, -cos x sin y)
SpectralField taylor_green(const SpectralGrid& grid) {
  ModeCoefficients c(grid.size());
  for (int s1 : {-1, 1}) {
    for (int s2 : {-1, 1}) {
      const std::size_t i = grid.index({s1, s2});
      c.c1[i] = Complex(0, -0.25 * s1);
      c.c2[i] = Complex(0, 0.25 * s2);
    }
  }
  return SpectralField::from_coefficients(grid, c);
}

// (sin(n y), 0)
SpectralField kolmogorov(const SpectralGrid& grid, int n) {
  if (n > grid.max_wavenumber()) throw ParameterError("kolmogorov forcing wavenumber exceeds the grid box");
  ModeCoefficients c(grid.size());
  c.c1[grid.index({0, n})] = Complex(0, -0.5);
  c.c1[grid.index({0, -n})] = Complex(0, 0.5);
  return SpectralField::from_coefficients(grid, c);
}

bool deviation_kind(const std::string& kind) {
  return kind == "mdp-scaling" || kind == "fw-probe" || kind == "moments" || kind == "lil-strassen" ||
         kind == "lil-classical";
}

}  // namespace

const char* code_version() { return SNSE_VERSION; }

const Json& config_schema() {
  static const Json schema = build_schema();
  return schema;
}

const std::string& ExperimentConfig::kind() const { return doc.at("experiment").at("kind").get_ref<const std::string&>(); }
const Json& ExperimentConfig::params() const { return doc.at("experiment").at(kind()); }
std::uint64_t ExperimentConfig::seed() const { return doc.at("seed").get<std::uint64_t>(); }
std::size_t ExperimentConfig::workers() const { return doc.at("workers").get<std::size_t>(); }
fs::path ExperimentConfig::output_directory() const { return doc.at("output").at("directory").get<std::string>(); }

ExperimentConfig parse_config(const Json& doc) {
  Validator v;
  if (!doc.is_object()) throw SchemaError("config schema violation: document is not an object", {"$"});
  Json out = v.value(config_schema(), &doc, "");
  if (v.keys.empty()) {
    const auto& sched_kinds = {"lil-strassen", "lil-classical"};
    for (const char* k : sched_kinds) {
      const auto& s = out["experiment"][k]["schedule"];
      if (s["j_min"].get<int>() > s["j_max"].get<int>()) {
        v.fail(std::string("experiment.") + k + ".schedule.j_min", "must not exceed j_max");
      }
    }
    for (const char* k : {"mdp-scaling", "fw-probe", "moments"}) {
      if (out["experiment"][k]["eps_grid"].empty()) v.fail(std::string("experiment.") + k + ".eps_grid", "must not be empty");
    }
    if (out["experiment"]["moments"]["p_list"].empty()) v.fail("experiment.moments.p_list", "must not be empty");
    const int K = out["grid"]["K"], N = out["grid"]["N"];
    if (N < 2 * (K + 1)) v.fail("grid.N", "must be at least 2(K+1)");
  }
  if (!v.keys.empty()) {
    std::string msg = "config schema violation:";
    for (const auto& m : v.messages) msg += "\n  " + m;
    throw SchemaError(msg, v.keys);
  }
  return ExperimentConfig{std::move(out)};
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw SchemaError("config " + path.string() + " is not valid JSON: " + e.what(), {"$"});
  }
  return parse_config(doc);
}

Overrides environment_overrides() {
  Overrides o;
  auto parse = [](const char* name) -> std::optional<std::uint64_t> {
    const char* raw = std::getenv(name);
    if (!raw || !*raw) return std::nullopt;
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(raw, &end, 10);
    if (errno != 0 || *end != '\0' || raw[0] == '-') {
      throw SchemaError(std::string(name) + " is not an unsigned integer: '" + raw + "'", {name});
    }
    return v;
  };
  o.seed = parse("SNSE_SEED");
  if (const auto w = parse("SNSE_WORKERS")) o.workers = static_cast<std::size_t>(*w);
  return o;
}

void apply_overrides(ExperimentConfig& config, const Overrides& flags, const Overrides& env) {
  if (const auto s = flags.seed ? flags.seed : env.seed) config.doc["seed"] = *s;
  if (const auto w = flags.workers ? flags.workers : env.workers) config.doc["workers"] = *w;
  if (const auto& o = flags.output ? flags.output : env.output) config.doc["output"]["directory"] = o->string();
}

std::string config_hash(const ExperimentConfig& config) {
  Json canonical = config.doc;
  canonical.erase("output");
  canonical.erase("workers");
  return sha256_hex(canonical.dump());
}

void check_admissibility(const ExperimentConfig& config) {
  const std::string& kind = config.kind();
  if (!deviation_kind(kind)) return;
  const auto ledger = build_ledger(config);
  const double eps0 = epsilon_thresholds(ledger).eps0;
  std::vector<double> grid;
  std::string where = "experiment." + kind;
  if (kind == "lil-strassen" || kind == "lil-classical") {
    const auto& s = config.params()["schedule"];
    grid = LilSchedule{s["base"].get<double>(), s["j_min"].get<int>(), s["j_max"].get<int>()}.eps_grid();
    where += ".schedule";
  } else {
    grid = doubles(config.params()["eps_grid"]);
    where += ".eps_grid";
  }
  for (double eps : grid) {
    if (!(eps < eps0)) {
      throw AdmissibilityError(where + ": eps = " + csv_number(eps) +
                               " is not below eps0 = min{1/(2K1^2), 1/(4K1), 1/(2K2), 1/(78K9)} = " +
                               csv_number(eps0));
    }
  }
}

ConstantsLedger build_ledger(const ExperimentConfig& config) {
  ConstantsLedger ledger;
  const auto K = doubles(config.doc["constants"]["K"]);
  std::copy(K.begin(), K.end(), ledger.K.begin());
  return ledger;
}

SimConfig build_sim_config(const ExperimentConfig& config) {
  const Json& d = config.doc;
  const SpectralGrid grid(d["grid"]["K"].get<int>(), d["grid"]["N"].get<int>());

  const Json& n = d["noise"];
  NoiseSpec spec;
  spec.spectrum_exponent = n["spectrum_exponent"];
  spec.num_modes = n["num_modes"];
  spec.max_noise_wavenumber = n["max_wavenumber"];
  spec.sigma.family = parse_sigma_family(n["family"]);
  spec.sigma.amplitude = n["amplitude"];
  spec.sigma.saturation = n["saturation"];
  spec.sigma.growth = n["growth"];
  for (const auto& k : n["silenced"]) spec.sigma.silenced_modes.push_back({k[0].get<int>(), k[1].get<int>()});

  SimConfig sim(grid, NoiseModel(grid, spec));
  const Json& s = d["solver"];
  sim.horizon = s["T"];
  sim.dt = s["dt"];
  sim.nonlinear = s["nonlinear"];
  sim.record_stride = s["record_stride"];
  sim.blowup_factor = s["blowup_factor"];

  const Json& init = d["initial"];
  const std::string ikind = init["kind"];
  const double norm = init["norm"];
  if (ikind != "zero" && norm > 0.0) {
    const SpectralField u = ikind == "random" ? random_initial(grid, init["seed"], init["decay"]) : taylor_green(grid);
    const double h = std::sqrt(h_norm_sq(u));
    if (h > 0.0) sim.initial = u * (norm / h);
  }

  const Json& f = d["forcing"];
  if (f["kind"] == "kolmogorov") {
    sim.forcing.field = kolmogorov(grid, f["wavenumber"]) * f["amplitude"].get<double>();
    sim.forcing.frequency = f["frequency"];
  }

  if (config.kind() == "simulate") sim.epsilon = config.params()["epsilon"];
  sim.config_hash = config_hash(config);
  sim.validate();
  return sim;
}

Control build_control(const Json& spec, const SimConfig& sim) {
  const std::size_t M = sim.steps(), J = sim.noise.num_modes();
  Control h(sim.horizon, M, J);
  const std::string kind = spec.at("kind");
  if (kind == "zero") return h;
  const std::size_t j = spec.at("direction");
  if (j >= J) throw ParameterError("control direction " + std::to_string(j) + " exceeds the " + std::to_string(J) + " noise directions");
  const double amp = spec.at("amplitude");
  const int q = spec.at("harmonic");
  for (std::size_t m = 0; m < M; ++m) {
    const double t = (static_cast<double>(m) + 0.5) * sim.dt;
    h.at(m)[j] = kind == "constant" ? amp : amp * std::sin(std::numbers::pi * q * t / sim.horizon);
  }
  return h;
}

Trajectory build_rate_target(const Json& spec, const SimConfig& sim) {
  const std::size_t stride = spec.at("stride");
  const std::size_t M = sim.steps();
  if (M % stride != 0) throw ParameterError("rate target stride must divide T/dt");
  const double amplitude = spec.at("amplitude");
  NormalStream rng(spec.at("seed").get<std::uint64_t>(), 5);
  const std::size_t J = sim.noise.num_modes();
  std::vector<double> a(J), b(J);
  for (std::size_t j = 0; j < J; ++j) {
    a[j] = rng() * amplitude / std::sqrt(double(J));
    b[j] = rng() * amplitude / std::sqrt(double(J));
  }
  Trajectory v(sim.grid);
  v.dt = sim.dt;
  v.stride = stride;
  v.provenance.kind = "target";
  v.provenance.config_hash = sim.config_hash;
  std::vector<double> c(J);
  double sup = 0.0, integral = 0.0;
  const StepWeights w(sim.grid, sim.dt * static_cast<double>(stride));
  for (std::size_t m = 0; m <= M; m += stride) {
    const double t = static_cast<double>(m) * sim.dt, s = M == 0 ? 0.0 : t / sim.horizon;
    for (std::size_t j = 0; j < J; ++j) c[j] = a[j] * std::sin(3.0 * s) + b[j] * s * s;
    v.times.push_back(t);
    v.frames.push_back(sim.noise.synthesize(c));
    sup = std::max(sup, h_norm_sq(v.frames.back()));
    v.running_sup_h_sq.push_back(sup);
    v.running_int_v_sq.push_back(integral);
    integral += step_dissipation(v.frames.back(), w);
  }
  return v;
}

}  // namespace snse::harness
