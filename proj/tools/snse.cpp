// snse: command-line front end for the experiment harness.

#include <iostream>

#include "CLI11.hpp"
#include "snse/harness.hpp"

namespace h = snse::harness;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::string> out;

  void attach(CLI::App* cmd, bool config_required) {
    auto* c = cmd->add_option("--config", config, "experiment config (JSON)")->check(CLI::ExistingFile);
    if (config_required) c->required();
    cmd->add_option("--seed", seed, "base seed (overrides SNSE_SEED and the config)");
    cmd->add_option("--workers", workers, "worker threads, 0 = all cores (overrides SNSE_WORKERS)");
    cmd->add_option("--out", out, "output directory");
  }

  h::Overrides overrides() const {
    h::Overrides o;
    o.seed = seed;
    o.workers = workers;
    if (out) o.output = *out;
    return o;
  }
};

void report_error(const std::exception& e) { std::cerr << h::error_json(e).dump() << '\n'; }

// A failed config load still leaves a manifest behind when the destination is known.
void write_failure_manifest(const CommonFlags& flags, const std::exception& e) {
  if (!flags.out) return;
  try {
    h::RunManifest m;
    m.code_version = h::code_version();
    m.status = "failed";
    m.error = h::error_json(e);
    h::fs::create_directories(*flags.out);
    h::write_json(h::fs::path(*flags.out) / "manifest.json", m.to_json());
  } catch (const std::exception&) {
  }
}

h::ExperimentConfig load(const CommonFlags& flags) {
  h::ExperimentConfig cfg = flags.config.empty() ? h::parse_config(h::Json::object()) : h::load_config(flags.config);
  h::apply_overrides(cfg, flags.overrides(), h::environment_overrides());
  return cfg;
}

int finish(const h::RunResult& r) {
  std::cout << "manifest: " << r.manifest_path.string() << '\n' << "status: " << r.manifest.status << '\n';
  if (!r.manifest.error.is_null()) std::cerr << r.manifest.error.dump() << '\n';
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral stochastic Navier-Stokes simulator and deviation analysis harness"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  auto* run = app.add_subcommand("run", "run the experiment selected in the config");
  run_flags.attach(run, true);

  CommonFlags verify_flags;
  bool corrupt = false;
  auto* verify = app.add_subcommand("verify", "run the invariant suite on the config's grid and noise");
  verify_flags.attach(verify, false);
  verify->add_flag("--corrupt-divergence", corrupt, "inject a divergent mode into the fixture (negative control)");

  std::string manifest;
  auto* emit = app.add_subcommand("emit-tables", "write CSV tables and gnuplot scripts for a finished run");
  emit->add_option("manifest", manifest, "manifest.json of the run")->required()->check(CLI::ExistingFile);

  bool defaults = false;
  auto* schema = app.add_subcommand("print-config-schema", "print the config schema");
  schema->add_flag("--defaults", defaults, "print the fully defaulted config instead");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      h::ExperimentConfig cfg;
      try {
        cfg = load(run_flags);
      } catch (const std::exception& e) {
        write_failure_manifest(run_flags, e);
        throw;
      }
      return finish(h::run(cfg));
    }
    if (*verify) {
      h::ExperimentConfig cfg;
      try {
        cfg = load(verify_flags);
      } catch (const std::exception& e) {
        write_failure_manifest(verify_flags, e);
        throw;
      }
      cfg.doc["experiment"]["kind"] = "verify";
      cfg.doc["experiment"]["verify"]["corrupt_divergence"] = corrupt;
      const auto r = h::run(cfg);
      const auto report = r.manifest.status == "ok" || r.exit_code == h::kCheckFailed
                              ? h::read_json(r.manifest_path.parent_path() / "report.json")
                              : h::Json();
      if (report.is_object()) {
        for (const auto& item : report["results"]["items"]) {
          std::cout << (item["passed"].get<bool>() ? "PASS " : "FAIL ") << item["name"].get<std::string>()
                    << " value=" << item["value"].dump() << " threshold=" << item["threshold"].dump() << "  "
                    << item["detail"].get<std::string>() << '\n';
        }
      }
      return finish(r);
    }
    if (*emit) {
      const auto res = h::emit_tables(manifest);
      for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
      for (const auto& p : res.written) std::cout << p.string() << '\n';
      return 0;
    }
    if (*schema) {
      std::cout << (defaults ? h::parse_config(h::Json::object()).doc : h::config_schema()).dump(2) << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    report_error(e);
    return h::exit_code_for(e);
  }
  return 0;
}
