#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "eval.hpp"
#include "space.hpp"
#include "strategies.hpp"

namespace cellnas {

struct TrialRecord {
  std::size_t trial_index = 0;
  CandidateArchitecture candidate;
  std::optional<Genome> genome;
  std::optional<std::size_t> generation;
  double fitness = 0.0;
  std::optional<double> accuracy;
  std::optional<std::uint64_t> param_count;
  std::string size_string;
  double wall_time_seconds = 0.0;
  std::string timestamp;
  EvalStatus status = EvalStatus::ok;
  bool cached = false;
  std::map<std::string, double> aux;
  std::string message;
};

struct RunReport {
  std::string strategy;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::vector<TrialRecord> trials;
  std::optional<std::size_t> best;  // index into trials
  double total_wall_time_seconds = 0.0;
  std::size_t unique_evaluations = 0;
  std::size_t total_evaluations = 0;
  bool completed = false;

  const TrialRecord* best_trial() const { return best ? &trials[*best] : nullptr; }
};

// Argmax over ok trials by fitness; the earliest trial wins ties.
std::optional<std::size_t> find_best(const std::vector<TrialRecord>& trials);

// Recomputes best, unique_evaluations and total_evaluations from the trials.
void finalize_counts(RunReport& report);

struct RunOptions {
  std::size_t workers = 1;
  bool cache = true;
  Budget budget;
  std::optional<std::filesystem::path> out_dir;
  nlohmann::json config_snapshot = nlohmann::json::object();
};

// Drives an ask/tell strategy to completion. Each batch is evaluated on up to
// `workers` threads; trials are committed (and logged) strictly in proposal
// order. With caching on, a candidate already evaluated in this run is served
// from the cache and recorded with cached = true. When the evaluator aborts,
// the completed prefix is logged, report.json is written with
// completed = false, and RunAborted propagates.
RunReport run_search(SearchStrategy& strategy, Evaluator& evaluator, const RunOptions& options);

// Builds strategy and evaluator from the config and runs them. `out_dir`
// overrides config.out.
RunReport run(const RunConfig& config, std::optional<std::filesystem::path> out_dir = std::nullopt);

// Output directory layout.
inline constexpr const char* kConfigFile = "config.json";
inline constexpr const char* kTrialLogFile = "trials.jsonl";
inline constexpr const char* kReportFile = "report.json";
inline constexpr const char* kResultsTextFile = "results.txt";
inline constexpr const char* kResultsCsvFile = "results.csv";

nlohmann::json trial_to_json(const TrialRecord& trial);
TrialRecord trial_from_json(const nlohmann::json& j);
nlohmann::json report_to_json(const RunReport& report);

// Rebuilds a report from a trial log alone.
RunReport read_trial_log(const std::filesystem::path& log_path);
// Accepts a run directory or a trials.jsonl path.
RunReport load_run(const std::filesystem::path& path);

// Writes config.json, report.json, results.txt and results.csv.
void write_report_files(const RunReport& report, const std::filesystem::path& out_dir);

}  // namespace cellnas
