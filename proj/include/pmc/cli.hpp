#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pmc/solver.hpp"

namespace pmc {

inline constexpr const char* kToolVersion = "1.0.0";

/// Parsed scenario file. `raw` keeps the document as read; the other members are validated views.
struct ScenarioConfig {
  std::string name;
  std::string task;  // classify | cheeger | solve | trace | verticality | stability | superreduced
  nlohmann::json domain;
  double h = 1.0 / 128;
  int margin = 3;
  nlohmann::json curvature;  // {"constant": c} or {"normalized": true}; absent = 0
  nlohmann::json params = nlohmann::json::object();
  std::string out_dir;
  std::uint64_t seed = 1;
  std::filesystem::path base_dir;  // relative paths in the config resolve against this
  nlohmann::json raw;
};

/// Throws Error{ConfigParse} with a message naming the offending key.
ScenarioConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
ScenarioConfig load_config(const std::filesystem::path& path);

DomainMask build_domain(const ScenarioConfig& cfg);
CurvatureSpec build_curvature(const ScenarioConfig& cfg, const DomainMask& mask);
SolveConfig build_solve_config(const nlohmann::json& params);

struct RunOptions {
  std::filesystem::path out_dir;  // overrides the config's output directory when set
  int threads = 0;                // 0 keeps the runtime default
  bool deterministic = false;     // single thread, fixed reduction order
};

struct RunArtifacts {
  std::filesystem::path out_dir;
  nlohmann::json manifest;
  nlohmann::json report;
  std::vector<std::filesystem::path> files;
  bool ok = false;
};

/// Executes the task, writes report.json, field dumps, log.txt and manifest.json (every emitted file with
/// its SHA-256). Hard errors are caught and recorded in the manifest with ok = false.
RunArtifacts run_scenario(const ScenarioConfig& cfg, const RunOptions& opts = {});

/// Writes the mask, its sidecar, a domain summary and the manifest.
RunArtifacts dump_domain(const ScenarioConfig& cfg, const RunOptions& opts = {});

/// Manifest for a run that failed before a config could be parsed.
RunArtifacts record_failure(const std::filesystem::path& out_dir, const std::string& stage, const Error& error,
                            const std::filesystem::path& config_path);

/// Lowercase hex SHA-256 of a file's contents.
std::string sha256_file(const std::filesystem::path& path);

enum class FillOrder { SmallestFirst, LargestFirst, Index };

struct StabilityConfig {
  double a = 1.1;
  double delta = 0.05;
  double eps = 0.3;
  int i_max = 2;
  double h = 1.0 / 128;
  int margin = 3;
  FillOrder order = FillOrder::SmallestFirst;
  /// K = {|x| <= k_radius} intersected with every step's solution domain.
  double k_radius = 0.8;
  SolveConfig solve;
};

struct StabilityStep {
  std::size_t holes_remaining = 0;
  std::optional<SwissCheeseHole> filled;  // hole filled to reach this step (none for the first)
  double curvature = 0.0;                 // H_j = P(Omega_j) / |Omega_j|
  std::string classification;
  bool extremal = false;
  bool solved = false;
  std::string error;
  int iterations = 0;
  double distance_previous = 0.0;  // epigraph L1 on K to the previous solved step
  double distance_final = 0.0;     // epigraph L1 on K to the final (disk) solution
  std::optional<HeightField> solution;
};

struct StabilityReport {
  std::vector<StabilityStep> steps;
  bool completed = false;  // every step extremal and solved
  std::size_t k_cells = 0;
  double m_cap = 0.0;
  /// Epigraph L1 distance on K between the final solution and the median-normalized lower hemisphere.
  std::optional<double> final_vs_hemisphere;
  /// Distances to the final solution are nonincreasing within 20% slack.
  bool monotone = false;
  std::vector<std::string> notes;
};

/// Fills the Swiss-cheese holes one at a time, classifying and solving each domain with H_j = P/|Omega|.
/// A classification failure is recorded and ends the sequence; a solver failure is recorded and skipped.
StabilityReport stability_experiment(const StabilityConfig& cfg);

}  // namespace pmc
