#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "snse/deviation.hpp"
#include "snse/lil.hpp"
#include "snse/solvers.hpp"

namespace snse::harness {

using Json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int kSchemaVersion = 1;
const char* code_version();

/// Config document fails the schema; keys are dotted paths ("noise.num_modes").
class SchemaError : public std::runtime_error {
 public:
  SchemaError(const std::string& what, std::vector<std::string> keys)
      : std::runtime_error(what), keys_(std::move(keys)) {}
  const std::vector<std::string>& keys() const { return keys_; }

 private:
  std::vector<std::string> keys_;
};

/// Schema-valid config whose eps values violate the small-noise threshold.
class AdmissibilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable, missing or inconsistent files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- config

/// The documented config schema: nested objects whose leaves carry type, default and description.
const Json& config_schema();

/// Config after schema validation, with every default filled in.
struct ExperimentConfig {
  Json doc;

  const std::string& kind() const;
  const Json& params() const;  ///< experiment.<kind> block
  std::uint64_t seed() const;
  std::size_t workers() const;
  fs::path output_directory() const;
};

/// Validates against the schema and fills defaults. Throws SchemaError listing every offending key.
ExperimentConfig parse_config(const Json& doc);
ExperimentConfig load_config(const fs::path& path);

/// Command-line and environment overrides. Precedence is flag, then environment, then config.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<fs::path> output;
};
/// Reads SNSE_SEED and SNSE_WORKERS; throws SchemaError on unparsable values.
Overrides environment_overrides();
void apply_overrides(ExperimentConfig& config, const Overrides& flags, const Overrides& env = {});

/// SHA-256 of the canonical (sorted-key, compact) config with output and workers removed.
std::string config_hash(const ExperimentConfig& config);

/// Throws AdmissibilityError when a deviation experiment uses eps >= eps0 from the constants ledger.
void check_admissibility(const ExperimentConfig& config);

ConstantsLedger build_ledger(const ExperimentConfig& config);
SimConfig build_sim_config(const ExperimentConfig& config);
/// Control described by a {kind, direction, amplitude, harmonic} block on the solver grid.
Control build_control(const Json& spec, const SimConfig& sim);
/// Target path v(t) = sum_j (a_j sin(3t/T) + b_j (t/T)^2) e_j recorded every `stride` steps, with
/// a_j, b_j normal draws scaled by amplitude / sqrt(J).
Trajectory build_rate_target(const Json& spec, const SimConfig& sim);

// ---------------------------------------------------------------- files

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const fs::path& path);

Json read_json(const fs::path& path);
/// Pretty-printed with a trailing newline.
void write_json(const fs::path& path, const Json& doc);

/// Binary trajectory: 8-byte magic "SNSETRJ1", little-endian u64 header length, JSON header,
/// then per record the c1 and c2 coefficient boxes as interleaved little-endian doubles.
void write_trajectory(const fs::path& path, const Trajectory& traj);
Trajectory read_trajectory(const fs::path& path);

/// RFC-4180 field quoting.
std::string csv_field(const std::string& value);
std::string csv_number(double value);

// ---------------------------------------------------------------- run / verify / emit

struct FileEntry {
  std::string path;  ///< relative to the run directory
  std::string role;  ///< report, trajectory, config, table, script
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::string config_hash;
  std::string code_version;
  std::string experiment;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::string started_at;
  std::string finished_at;
  std::string status;  ///< "ok" or "failed"
  Json error;          ///< null on success
  std::vector<FileEntry> files;

  Json to_json() const;
  static RunManifest from_json(const Json& doc);
};

struct RunResult {
  int exit_code = 0;
  fs::path manifest_path;
  RunManifest manifest;
};

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kSchema = 2, kAdmissibility = 3, kRuntime = 4, kIo = 5 };

/// Runs the selected experiment into the output directory. Always writes manifest.json; failures are
/// recorded there and in the exit code rather than thrown.
RunResult run(const ExperimentConfig& config);

/// The results block of run() computed in memory; nothing is written and errors are thrown.
Json evaluate(const ExperimentConfig& config);

struct VerifyItem {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct VerifyOptions {
  /// Injects a nonzero k.u_k into the divergence fixture (negative control).
  bool corrupt_divergence = false;
  std::size_t gradient_perturbations = 20;
};

struct VerifyReport {
  std::vector<VerifyItem> items;
  bool passed() const;
  Json to_json() const;
};

VerifyReport verify(const ExperimentConfig& config, const VerifyOptions& options = {});

struct EmitResult {
  std::vector<fs::path> written;
  std::vector<std::string> warnings;
};

/// Writes CSV tables and gnuplot scripts for every report in the manifest under <run dir>/tables.
/// Throws IoError for listed reports that are missing or fail their checksum.
EmitResult emit_tables(const fs::path& manifest_path);

/// Structured error document for stderr.
Json error_json(const std::exception& e);
int exit_code_for(const std::exception& e);

}  // namespace snse::harness
