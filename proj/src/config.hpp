#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "evaluator_factory.hpp"
#include "space.hpp"
#include "strategies.hpp"

namespace cellnas {

struct RandomSettings {
  std::size_t iterations = 5;
  bool dedup = false;
  std::size_t dedup_retry_cap = 1000;
};

// Everything one search run needs. Defaults reproduce the grid experiment
// (conv {0,2,3,4} x dense {1,2}, 8-bit genome split 4/4).
struct RunConfig {
  std::string strategy = "grid";
  SearchSpace space;
  RandomSettings random;
  GAConfig ga;  // seed and genome_length are taken from the run
  EvaluatorSpec evaluator;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  bool cache = true;
  int epochs = 50;
  std::optional<std::filesystem::path> out;

  void validate() const;
};

// Unknown keys are rejected. Relative paths (table, out) resolve against
// base_dir.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig parse_run_config_text(const std::string& text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

// Complete snapshot including defaults; parse_run_config(to_json(c)) == c.
nlohmann::json to_json(const RunConfig& config);

GridConfig grid_config(const RunConfig& config);
RandomConfig random_config(const RunConfig& config);
GAConfig ga_config(const RunConfig& config);

std::unique_ptr<SearchStrategy> make_strategy(const RunConfig& config);

}  // namespace cellnas
