#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "space.hpp"

namespace cellnas {

enum class EvalStatus { ok, penalized, failed };

std::string to_string(EvalStatus status);
EvalStatus parse_eval_status(const std::string& s);

// Fitness is maximized by every strategy; accuracy is a fraction in [0, 1].
struct EvalResult {
  double fitness = 0.0;
  std::optional<double> accuracy;
  std::optional<std::uint64_t> param_count;
  std::map<std::string, double> aux;
  EvalStatus status = EvalStatus::ok;
  std::string message;

  friend bool operator==(const EvalResult&, const EvalResult&) = default;
};

// What to do when an evaluation errors: record a penalized/failed trial, or
// stop the run.
enum class ErrorPolicy { penalize, abort };

struct Budget {
  int epochs = 50;
  std::uint64_t seed = 0;
};

// Implementations must tolerate concurrent evaluate() calls.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual std::string kind() const = 0;
  virtual EvalResult evaluate(const CandidateArchitecture& candidate, const Budget& budget) = 0;
};

// ---------------------------------------------------------------------------
// Surrogate landscape: peak - a (conv - c*)^2 - b (dense - d*)^2 + noise.

struct SurrogateParams {
  double peak = 0.86;
  int optimum_conv = 2;
  int optimum_dense = 2;
  double curvature_conv = 0.01;
  double curvature_dense = 0.01;
  double noise_sd = 0.0;
  // Noise seed; falls back to the run seed when unset.
  std::optional<std::uint64_t> seed;
};

// Noise is keyed by (candidate, seed), never by call order.
double surrogate_fitness(const CandidateArchitecture& candidate, const SurrogateParams& params,
                         std::uint64_t seed);

class SurrogateEvaluator final : public Evaluator {
 public:
  explicit SurrogateEvaluator(SurrogateParams params);
  std::string kind() const override { return "surrogate"; }
  EvalResult evaluate(const CandidateArchitecture& candidate, const Budget& budget) override;

 private:
  SurrogateParams params_;
};

// ---------------------------------------------------------------------------
// Lookup table of published results. Accuracy and spread are kept in
// percentage points as written; score is stored but never used as fitness.

struct TableRow {
  int conv = 0;
  int dense = 0;
  double accuracy = 0.0;
  double spread = 0.0;
  std::optional<double> score;
  std::string size;
};

class TableEvaluator final : public Evaluator {
 public:
  std::string kind() const override { return "table"; }
  EvalResult evaluate(const CandidateArchitecture& candidate, const Budget& budget) override;

  const std::vector<TableRow>& rows() const { return rows_; }
  const TableRow* find(const CandidateArchitecture& candidate) const;

 private:
  friend TableEvaluator table_load(std::vector<TableRow> rows);
  std::vector<TableRow> rows_;
  std::map<CandidateArchitecture, std::size_t> index_;
};

// Duplicate (conv, dense) keys are a LoadError.
TableEvaluator table_load(std::vector<TableRow> rows);

// Delimited text with header conv,dense,accuracy,spread,score,size.
std::vector<TableRow> read_table_file(const std::filesystem::path& path);
std::vector<TableRow> parse_table_text(const std::string& text);

// ---------------------------------------------------------------------------

// Minimizes model size: fitness is the negated parameter count.
class ParamCountEvaluator final : public Evaluator {
 public:
  explicit ParamCountEvaluator(PlanConfig plan = {}) : plan_(plan) {}
  std::string kind() const override { return "param_count"; }
  EvalResult evaluate(const CandidateArchitecture& candidate, const Budget& budget) override;

 private:
  PlanConfig plan_;
};

struct ValidityBounds {
  std::optional<std::pair<int, int>> conv;
  std::optional<std::pair<int, int>> dense;

  bool admits(const CandidateArchitecture& c) const;
};

inline constexpr double kDefaultPenaltyFitness = -1e9;

// Short-circuits candidates outside the validity bounds to a penalized result
// without invoking the wrapped evaluator.
class BoundedEvaluator final : public Evaluator {
 public:
  BoundedEvaluator(std::unique_ptr<Evaluator> inner, ValidityBounds bounds,
                   double penalty_fitness = kDefaultPenaltyFitness);
  std::string kind() const override { return inner_->kind(); }
  EvalResult evaluate(const CandidateArchitecture& candidate, const Budget& budget) override;

 private:
  std::unique_ptr<Evaluator> inner_;
  ValidityBounds bounds_;
  double penalty_;
};

EvalResult penalized_result(double penalty_fitness, std::string message);

// Results keyed by candidate; shared between evaluation threads.
class EvaluationCache {
 public:
  std::optional<EvalResult> lookup(const CandidateArchitecture& candidate) const;
  void insert(const CandidateArchitecture& candidate, const EvalResult& result);
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::map<CandidateArchitecture, EvalResult> entries_;
};

}  // namespace cellnas
