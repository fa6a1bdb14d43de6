#include <fstream>
#include <sstream>

#include "snse/harness.hpp"

namespace snse::harness {
namespace {

std::string num(const Json& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return csv_number(v.get<double>());
  return v.get<std::string>();
}

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) { row(header); }
  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) text_ += ',';
      text_ += csv_field(fields[i]);
    }
    text_ += "\r\n";
  }
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

struct Emitter {
  fs::path dir;
  EmitResult result;

  void file(const std::string& name, const std::string& content) {
    const fs::path p = dir / name;
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + p.string());
    out << content;
    if (!out) throw IoError("write failed: " + p.string());
    result.written.push_back(p);
  }

  void plot(const std::string& name, const std::string& title, const std::string& settings, const std::string& body) {
    std::ostringstream s;
    s << "# gnuplot script for " << name << ".csv\n"
      << "set datafile separator ','\n"
      << "set key autotitle columnhead\n"
      << "set title '" << title << "'\n"
      << settings << "set terminal pngcairo size 900,600\n"
      << "set output '" << name << ".png'\n"
      << body << "\n";
    file(name + ".gp", s.str());
  }
};

void norms_tables(Emitter& em, const Json& trajectories) {
  for (const auto& [name, s] : trajectories.items()) {
    Csv csv({"t", "h_norm_sq", "v_norm_sq", "sup_h_sq", "int_v_sq"});
    for (std::size_t r = 0; r < s["t"].size(); ++r) {
      csv.row({num(s["t"][r]), num(s["h_norm_sq"][r]), num(s["v_norm_sq"][r]), num(s["sup_h_sq"][r]),
               num(s["int_v_sq"][r])});
    }
    const std::string base = name + "_norms";
    em.file(base + ".csv", csv.text());
    em.plot(base, name + " norms", "set xlabel 't'\n",
            "plot '" + base + ".csv' using 1:2 with lines, '' using 1:3 with lines, '' using 1:5 with lines");
  }
}

void rate_tables(Emitter& em, const Json& r) {
  Csv csv({"feasible", "value", "half_energy", "residual", "penalty", "iterations", "evaluations", "status"});
  csv.row({num(r["feasible"]), num(r["value"]), num(r["half_energy"]), num(r["residual"]), num(r["penalty"]),
           num(r["iterations"]), num(r["evaluations"]), r["status"].get<std::string>()});
  em.file("rate.csv", csv.text());
}

void mdp_tables(Emitter& em, const Json& r) {
  Csv csv({"eps", "P", "lo", "hi", "a2logP", "minus_I"});
  const std::string minus_i = r["rate"].is_null() ? "-inf" : csv_number(-r["rate"].get<double>());
  for (const auto& row : r["rows"]) {
    const auto& p = row["probability"];
    csv.row({num(row["eps"]), num(p["estimate"]), num(p["lo"]), num(p["hi"]), num(row["scaled_log"]), minus_i});
  }
  em.file("mdp_scaling.csv", csv.text());
  em.plot("mdp_scaling", "a(eps)^2 log P against -I*", "set logscale x\nset xlabel 'eps'\n",
          "plot 'mdp_scaling.csv' using 1:5 with linespoints, '' using 1:6 with lines");
}

void fw_tables(Emitter& em, const Json& r) {
  Csv csv({"eps", "loglog", "joint", "closeness", "deviation", "conditional", "conditional_lo", "conditional_hi",
           "conditional_upper", "bound", "below_bound"});
  for (const auto& row : r["rows"]) {
    const auto& c = row["conditional"];
    csv.row({num(row["eps"]), num(row["loglog"]), num(row["joint"]["estimate"]), num(row["closeness"]["estimate"]),
             num(row["deviation"]["estimate"]), num(c["estimate"]), num(c["lo"]), num(c["hi"]), num(c["upper_bound"]),
             num(row["bound"]), num(row["below_bound"])});
  }
  em.file("fw_probe.csv", csv.text());
  em.plot("fw_probe", "conditional deviation probability", "set logscale xy\nset xlabel 'eps'\n",
          "plot 'fw_probe.csv' using 1:9 with linespoints, '' using 1:10 with lines");
}

void moment_tables(Emitter& em, const Json& r) {
  Csv rows({"quantity", "p", "eps", "mean", "se"});
  for (const auto& row : r["rows"]) {
    rows.row({row["quantity"].get<std::string>(), num(row["p"]), num(row["eps"]), num(row["mean"]), num(row["se"])});
  }
  em.file("moments.csv", rows.text());
  Csv fits({"quantity", "p", "stated_power", "fitted_exponent", "exponent_se", "implied_constant"});
  for (const auto& f : r["fits"]) {
    fits.row({f["quantity"].get<std::string>(), num(f["p"]), num(f["stated_power"]), num(f["fitted_exponent"]),
              num(f["exponent_se"]), num(f["implied_constant"])});
  }
  em.file("moment_fits.csv", fits.text());
  em.plot("moments", "moments against eps", "set logscale xy\nset xlabel 'eps'\n",
          "plot 'moments.csv' using 3:4 with points");
}

void strassen_tables(Emitter& em, const Json& r) {
  Csv d({"r", "j", "eps", "distance", "nearest"});
  for (std::size_t rep = 0; rep < r["distance"].size(); ++rep) {
    for (std::size_t k = 0; k < r["j"].size(); ++k) {
      d.row({std::to_string(rep), num(r["j"][k]), num(r["eps"][k]), num(r["distance"][rep][k]),
             num(r["nearest"][rep][k])});
    }
  }
  em.file("strassen_distance.csv", d.text());
  Csv h({"candidate", "half_energy", "hit_fraction"});
  for (std::size_t i = 0; i < r["hit_fraction"].size(); ++i) {
    h.row({std::to_string(i), num(r["probe_half_energy"][i]), num(r["hit_fraction"][i])});
  }
  em.file("strassen_hits.csv", h.text());
  em.plot("strassen_distance", "distance to the limit-set probe", "set xlabel 'j'\n",
          "plot 'strassen_distance.csv' using 2:4 with points");
}

void classical_tables(Emitter& em, const Json& r) {
  Csv d({"r", "j", "eps", "ratio"});
  for (std::size_t rep = 0; rep < r["ratio"].size(); ++rep) {
    for (std::size_t k = 0; k < r["j"].size(); ++k) {
      d.row({std::to_string(rep), num(r["j"][k]), num(r["eps"][k]), num(r["ratio"][rep][k])});
    }
  }
  em.file("classical_ratio.csv", d.text());
  Csv s({"j", "eps", "mean", "q10", "q50", "q90"});
  for (std::size_t k = 0; k < r["j"].size(); ++k) {
    const auto& q = r["quantiles"][k];
    s.row({num(r["j"][k]), num(r["eps"][k]), num(r["mean"][k]), num(q["q10"]), num(q["q50"]), num(q["q90"])});
  }
  em.file("classical_summary.csv", s.text());
  em.plot("classical_summary", "normalized deviation ratio", "set xlabel 'j'\n",
          "plot 'classical_summary.csv' using 1:3 with linespoints, '' using 1:4 with lines, '' using 1:5 with lines, "
          "'' using 1:6 with lines");
}

void verify_tables(Emitter& em, const Json& r) {
  Csv csv({"item", "passed", "value", "threshold", "detail"});
  for (const auto& i : r["items"]) {
    csv.row({i["name"].get<std::string>(), num(i["passed"]), num(i["value"]), num(i["threshold"]),
             i["detail"].get<std::string>()});
  }
  em.file("verify.csv", csv.text());
}

}  // namespace

EmitResult emit_tables(const fs::path& manifest_path) {
  const RunManifest m = RunManifest::from_json(read_json(manifest_path));
  const fs::path run_dir = manifest_path.parent_path();
  Emitter em;
  em.dir = run_dir / "tables";
  std::vector<const FileEntry*> reports;
  for (const auto& f : m.files) {
    if (f.role == "report") reports.push_back(&f);
  }
  if (m.files.empty()) {
    em.result.warnings.push_back("manifest lists no files; nothing to emit");
    return em.result;
  }
  if (reports.empty()) {
    em.result.warnings.push_back("manifest lists no reports; nothing to emit");
    return em.result;
  }
  for (const auto* f : reports) {
    const fs::path p = run_dir / f->path;
    if (!fs::exists(p)) throw IoError("report listed in the manifest is missing: " + p.string());
    if (sha256_file(p) != f->sha256) throw IoError("report checksum does not match the manifest: " + p.string());
  }
  fs::create_directories(em.dir);
  for (const auto* f : reports) {
    const Json report = read_json(run_dir / f->path);
    const std::string kind = report.at("experiment");
    const Json& r = report.at("results");
    if (kind == "simulate" || kind == "skeleton") {
      norms_tables(em, r.at("trajectories"));
    } else if (kind == "rate") {
      rate_tables(em, r);
    } else if (kind == "mdp-scaling") {
      mdp_tables(em, r);
    } else if (kind == "fw-probe") {
      fw_tables(em, r);
    } else if (kind == "moments") {
      moment_tables(em, r);
    } else if (kind == "lil-strassen") {
      strassen_tables(em, r);
    } else if (kind == "lil-classical") {
      classical_tables(em, r);
    } else if (kind == "verify") {
      verify_tables(em, r);
    } else {
      em.result.warnings.push_back("no tables for experiment '" + kind + "'");
    }
  }
  return em.result;
}

}  // namespace snse::harness
