#pragma once

#include <filesystem>
#include <memory>
#include <string_view>

#include "eval.hpp"
#include "protocol.hpp"

namespace cellnas {

enum class EvaluatorKind { surrogate, table, param_count, external };

std::string to_string(EvaluatorKind kind);

struct EvaluatorSpec {
  EvaluatorKind kind = EvaluatorKind::surrogate;
  SurrogateParams surrogate;
  std::filesystem::path table_path;
  protocol::ExternalSpec external;
  ValidityBounds validity;
  double penalty_fitness = kDefaultPenaltyFitness;
  ErrorPolicy on_error = ErrorPolicy::penalize;
};

// Builds the concrete evaluator wrapped with the validity-bound check.
// `workers` sizes the external worker pool.
std::unique_ptr<Evaluator> make_evaluator(const EvaluatorSpec& spec, std::size_t workers = 1);

// Command-line evaluator spec, merged over `base`:
//   surrogate[:key=value,...]   keys: peak, conv, dense, a, b, noise, seed
//   table:PATH
//   param_count
//   external:COMMAND [ARGS...]  (split on whitespace)
// Relative table paths resolve against the current directory.
EvaluatorSpec parse_evaluator_flag(std::string_view text, const EvaluatorSpec& base = {});

}  // namespace cellnas
