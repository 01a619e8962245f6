#pragma once

// Experiment configuration, the verification suite, manifests and reports.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rorlab/ortho.hpp"

namespace rorlab::lab {

inline constexpr std::string_view kArtifactVersion = "0.3.0";

/// Declarative run configuration. Text form is one `key = value` per line
/// with `#` comments; see configs/default.conf for every key.
struct ExperimentConfig {
  std::string name = "default";
  std::uint64_t seed = 20240611;
  int n = 64;
  std::vector<int> ks = {2, 3};
  std::string matrix = "haar";  // "haar" or a matrix file path
  std::string output_dir = "out";

  int qsim_triples = 200;
  std::uint64_t sign_samples = 1000000;
  int haar_seeds = 100;
  std::uint64_t mc_samples = 100000;
  std::uint64_t uniform_samples = 100000;
  int moment_n = 256;
  int moment_sets = 200;
  int moment_max_size = 6;
  std::uint64_t link_samples = 2000;
  int decomposition_trees = 100;
  int goodness_pairs = 10000;
  int goodness_block = 16;
  int tail_n = 256;
  int tail_trials = 10000;
  std::uint64_t advantage_samples = 20000;
  int corpus_depth = 8;

  /// Throws std::invalid_argument naming the offending key.
  void validate() const;
  /// Applies one `key=value` assignment.
  void set(std::string_view key, std::string_view value);
  nlohmann::json to_json() const;
  /// FNV-1a of the canonical JSON form.
  std::uint64_t hash() const;
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// One measured quantity next to the bound it is compared with.
struct BoundRow {
  std::string quantity;
  int n = 0;
  int k = 0;
  double measured = 0.0;
  double bound = 0.0;
  std::string relation;  // ">=", "<=", "==", "shape"
};

struct CheckResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string summary;
  nlohmann::json measurements = nlohmann::json::object();
  std::vector<BoundRow> rows;
  double seconds = 0.0;  // wall time; kept out of the manifest
};

/// Shared inputs for a run: the config and its main matrix.
struct RunContext {
  ExperimentConfig config;
  ortho::MatrixHandle matrix;
};

/// Loads or samples the config's main matrix. Throws on load errors before
/// any check runs.
RunContext make_context(const ExperimentConfig& config);

struct CheckInfo {
  int id;
  std::string_view name;
  CheckResult (*run)(const RunContext&);
};

/// The twelve verification checks in order. Check 12 reruns checks 1-11
/// with the same config and compares the serialized results byte for byte.
const std::vector<CheckInfo>& checks();
CheckResult run_check(int id, const RunContext& ctx);

struct RunManifest {
  std::string version{kArtifactVersion};
  std::uint64_t config_hash = 0;
  nlohmann::json config;
  std::uint64_t matrix_hash = 0;
  std::vector<CheckResult> results;

  bool all_passed() const;
  /// Everything except timing.
  nlohmann::json to_json() const;
  nlohmann::json timing_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

/// Runs the selected checks (all when `only` is empty). `progress` is
/// called after each check.
RunManifest verify_paper(const RunContext& ctx, const std::vector<int>& only = {},
                         const std::function<void(const CheckResult&)>& progress = {});

/// Writes manifest.json and timing.json into `dir`.
void write_manifest(const std::filesystem::path& dir, const RunManifest& m);
RunManifest read_manifest(const std::filesystem::path& path);

struct ReportFiles {
  std::string csv;            // one row per (manifest, BoundRow)
  std::string markdown;       // check table plus measured-vs-bound table
  std::string shapes_csv;     // bound-shape evaluator grid and advantage rows
};

/// Report columns: manifest,config_hash,check,quantity,N,k,measured,bound,relation
ReportFiles build_report(const std::vector<std::pair<std::string, RunManifest>>& manifests);

}  // namespace rorlab::lab
