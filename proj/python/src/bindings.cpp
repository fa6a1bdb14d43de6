// Python bindings: configs and results cross the boundary as JSON text; trajectories as arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "snse/deviation.hpp"
#include "snse/errors.hpp"
#include "snse/harness.hpp"

namespace py = pybind11;
namespace h = snse::harness;

namespace {

h::ExperimentConfig parse(const std::string& text) { return h::parse_config(h::Json::parse(text)); }

py::dict trajectory_dict(const snse::Trajectory& t) {
  const auto side = static_cast<py::ssize_t>(t.grid.side());
  const auto records = static_cast<py::ssize_t>(t.size());
  py::array_t<std::complex<double>> frames({records, py::ssize_t{2}, side, side});
  auto out = frames.mutable_unchecked<4>();
  for (py::ssize_t r = 0; r < records; ++r) {
    const auto& f = t.frames[static_cast<std::size_t>(r)];
    for (py::ssize_t i = 0; i < side * side; ++i) {
      out(r, 0, i / side, i % side) = f.c1()[static_cast<std::size_t>(i)];
      out(r, 1, i / side, i % side) = f.c2()[static_cast<std::size_t>(i)];
    }
  }
  py::dict d;
  d["K"] = t.grid.max_wavenumber();
  d["dt"] = t.dt;
  d["stride"] = t.stride;
  d["times"] = py::array_t<double>(static_cast<py::ssize_t>(t.times.size()), t.times.data());
  d["frames"] = frames;
  d["sup_h_sq"] = py::array_t<double>(records, t.running_sup_h_sq.data());
  d["int_v_sq"] = py::array_t<double>(records, t.running_int_v_sq.data());
  return d;
}

}  // namespace

PYBIND11_MODULE(_snse, m) {
  m.doc() = "Spectral stochastic Navier-Stokes solvers and deviation experiments";
  m.attr("__version__") = h::code_version();

  static const py::handle schema_error =
      py::exception<h::SchemaError>(m, "SchemaError", PyExc_ValueError).release();
  static const py::handle admissibility_error =
      py::exception<h::AdmissibilityError>(m, "AdmissibilityError", PyExc_ValueError).release();
  static const py::handle integration_error =
      py::exception<snse::IntegrationError>(m, "IntegrationError", PyExc_RuntimeError).release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const h::SchemaError& e) {
      std::string msg = e.what();
      for (const auto& k : e.keys()) msg += "\n  " + k;
      py::set_error(schema_error, msg.c_str());
    } catch (const h::AdmissibilityError& e) {
      py::set_error(admissibility_error, e.what());
    } catch (const snse::IntegrationError& e) {
      py::set_error(integration_error, e.what());
    } catch (const h::IoError& e) {
      py::set_error(PyExc_OSError, e.what());
    }
  });

  m.def("config_schema", [] { return h::config_schema().dump(); });
  m.def("resolve_config", [](const std::string& text) { return parse(text).doc.dump(); },
        "Validate a config and fill in defaults.");
  m.def("config_hash", [](const std::string& text) { return h::config_hash(parse(text)); });

  m.def(
      "run",
      [](const std::string& text, std::optional<std::uint64_t> seed, std::optional<std::size_t> workers,
         std::optional<std::string> output) {
        auto cfg = parse(text);
        h::Overrides o;
        o.seed = seed;
        o.workers = workers;
        if (output) o.output = *output;
        h::apply_overrides(cfg, o, h::environment_overrides());
        h::RunResult r;
        {
          py::gil_scoped_release release;
          r = h::run(cfg);
        }
        return py::make_tuple(r.exit_code, r.manifest_path.string(), r.manifest.to_json().dump());
      },
      py::arg("config"), py::arg("seed") = py::none(), py::arg("workers") = py::none(),
      py::arg("output") = py::none());

  m.def(
      "evaluate",
      [](const std::string& text) {
        const auto cfg = parse(text);
        py::gil_scoped_release release;
        return h::evaluate(cfg).dump();
      },
      py::arg("config"), "Run the configured experiment in memory and return its results.");

  m.def(
      "verify",
      [](const std::string& text, bool corrupt_divergence) {
        const auto cfg = parse(text);
        h::VerifyOptions o;
        o.corrupt_divergence = corrupt_divergence;
        py::gil_scoped_release release;
        return h::verify(cfg, o).to_json().dump();
      },
      py::arg("config"), py::arg("corrupt_divergence") = false);

  m.def("emit_tables", [](const std::string& manifest) {
    const auto r = h::emit_tables(manifest);
    std::vector<std::string> written;
    for (const auto& p : r.written) written.push_back(p.string());
    return py::make_tuple(written, r.warnings);
  });

  m.def(
      "epsilon_thresholds",
      [](const std::vector<double>& K, double p) {
        snse::ConstantsLedger ledger;
        if (K.size() != ledger.K.size()) throw snse::ParameterError("expected nine constants K1..K9");
        std::copy(K.begin(), K.end(), ledger.K.begin());
        const auto t = snse::epsilon_thresholds(ledger, p);
        return py::make_tuple(t.eps0, t.eps1, t.eps2);
      },
      py::arg("K"), py::arg("p") = 1.0);

  m.def(
      "solve",
      [](const std::string& text, double epsilon, std::uint64_t seed) {
        auto sim = h::build_sim_config(parse(text));
        sim.epsilon = epsilon;
        snse::Trajectory t(sim.grid);
        {
          py::gil_scoped_release release;
          t = epsilon == 0.0 ? snse::solve_deterministic(sim) : snse::solve_snse(sim, seed);
        }
        return trajectory_dict(t);
      },
      py::arg("config"), py::arg("epsilon") = 0.0, py::arg("seed") = 0,
      "Deterministic (epsilon = 0) or stochastic trajectory on the config's grid, solver and noise.");
}
