#pragma once

#include <span>
#include <string>

#include "harness.hpp"

namespace cellnas {

// Fraction -> percentage with at most two decimals, trailing zeros dropped
// (0.83 -> "83", 0.858 -> "85.8").
std::string format_percent(double fraction);

// The best trial as "conv dense size accuracy", e.g. "2 2 0.84M 83". Without
// an accuracy the fitness is printed instead; without a best trial, "—".
std::string best_row(const RunReport& report);

// Display table with grouped headers ("Model params" / "Evaluating" / "Timing").
std::string render_results_table(const RunReport& report);

// One comma-separated line per trial, with a header.
std::string render_results_csv(const RunReport& report);

// One results table per run plus a summary, all ordered by strategy name
// (input order among equal names).
std::string compare(std::span<const RunReport> reports);

}  // namespace cellnas
