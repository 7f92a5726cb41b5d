#include "eval.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "error.hpp"
#include "rng.hpp"

namespace cellnas {

std::string to_string(EvalStatus status) {
  switch (status) {
    case EvalStatus::ok: return "ok";
    case EvalStatus::penalized: return "penalized";
    case EvalStatus::failed: return "failed";
  }
  return "failed";
}

EvalStatus parse_eval_status(const std::string& s) {
  if (s == "ok") return EvalStatus::ok;
  if (s == "penalized") return EvalStatus::penalized;
  if (s == "failed") return EvalStatus::failed;
  throw LoadError("unknown trial status '" + s + "'");
}

double surrogate_fitness(const CandidateArchitecture& candidate, const SurrogateParams& params,
                         std::uint64_t seed) {
  const double dc = candidate.conv_cells - params.optimum_conv;
  const double dd = candidate.dense_cells - params.optimum_dense;
  double value = params.peak - params.curvature_conv * dc * dc - params.curvature_dense * dd * dd;
  if (params.noise_sd > 0.0) {
    Rng rng(derive_seed({seed, static_cast<std::uint64_t>(candidate.conv_cells),
                         static_cast<std::uint64_t>(candidate.dense_cells)}));
    value += params.noise_sd * rng.normal();
  }
  return value;
}

SurrogateEvaluator::SurrogateEvaluator(SurrogateParams params) : params_(params) {
  if (!(params_.curvature_conv > 0.0) || !(params_.curvature_dense > 0.0)) {
    throw ConfigError("surrogate curvatures must be > 0");
  }
  if (params_.noise_sd < 0.0) throw ConfigError("surrogate noise_sd must be >= 0");
}

EvalResult SurrogateEvaluator::evaluate(const CandidateArchitecture& candidate,
                                        const Budget& budget) {
  EvalResult r;
  r.fitness = surrogate_fitness(candidate, params_, params_.seed.value_or(budget.seed));
  if (r.fitness >= 0.0 && r.fitness <= 1.0) r.accuracy = r.fitness;
  r.param_count = candidate_params(candidate);
  return r;
}

// ---------------------------------------------------------------------------

TableEvaluator table_load(std::vector<TableRow> rows) {
  TableEvaluator t;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const CandidateArchitecture key{rows[i].conv, rows[i].dense};
    if (!t.index_.emplace(key, i).second) {
      throw LoadError("duplicate table row for " + to_string(key));
    }
  }
  t.rows_ = std::move(rows);
  return t;
}

const TableRow* TableEvaluator::find(const CandidateArchitecture& candidate) const {
  auto it = index_.find(candidate);
  return it == index_.end() ? nullptr : &rows_[it->second];
}

EvalResult TableEvaluator::evaluate(const CandidateArchitecture& candidate, const Budget&) {
  const TableRow* row = find(candidate);
  if (!row) return penalized_result(kDefaultPenaltyFitness, "no table entry for " + to_string(candidate));
  EvalResult r;
  r.fitness = row->accuracy / 100.0;
  r.accuracy = r.fitness;
  r.param_count = candidate_params(candidate);
  r.aux["spread"] = row->spread / 100.0;
  if (row->score) r.aux["score"] = *row->score;
  return r;
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <class T>
T parse_number(const std::string& s, std::size_t line_no, const char* what) {
  T value{};
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw LoadError("table line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
  }
  return value;
}

}  // namespace

std::vector<TableRow> parse_table_text(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<TableRow> rows;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto fields = split_fields(t);
    if (!header_seen) {
      const std::vector<std::string> expected{"conv", "dense", "accuracy", "spread", "score", "size"};
      if (fields != expected) {
        throw LoadError("table header must be conv,dense,accuracy,spread,score,size");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 6) {
      throw LoadError("table line " + std::to_string(line_no) + ": expected 6 fields");
    }
    TableRow row;
    row.conv = parse_number<int>(fields[0], line_no, "conv");
    row.dense = parse_number<int>(fields[1], line_no, "dense");
    if (row.conv < 0 || row.dense < 0) {
      throw LoadError("table line " + std::to_string(line_no) + ": negative cell count");
    }
    row.accuracy = parse_number<double>(fields[2], line_no, "accuracy");
    row.spread = fields[3].empty() ? 0.0 : parse_number<double>(fields[3], line_no, "spread");
    if (!fields[4].empty()) row.score = parse_number<double>(fields[4], line_no, "score");
    row.size = fields[5];
    rows.push_back(std::move(row));
  }
  if (!header_seen) throw LoadError("table has no header");
  return rows;
}

std::vector<TableRow> read_table_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open table file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_table_text(ss.str());
}

// ---------------------------------------------------------------------------

EvalResult ParamCountEvaluator::evaluate(const CandidateArchitecture& candidate, const Budget&) {
  EvalResult r;
  const auto n = candidate_params(candidate, plan_);
  r.param_count = n;
  r.fitness = -static_cast<double>(n);
  return r;
}

bool ValidityBounds::admits(const CandidateArchitecture& c) const {
  auto in = [](const std::optional<std::pair<int, int>>& b, int v) {
    return !b || (v >= b->first && v <= b->second);
  };
  return in(conv, c.conv_cells) && in(dense, c.dense_cells);
}

EvalResult penalized_result(double penalty_fitness, std::string message) {
  EvalResult r;
  r.fitness = penalty_fitness;
  r.status = EvalStatus::penalized;
  r.message = std::move(message);
  return r;
}

BoundedEvaluator::BoundedEvaluator(std::unique_ptr<Evaluator> inner, ValidityBounds bounds,
                                   double penalty_fitness)
    : inner_(std::move(inner)), bounds_(bounds), penalty_(penalty_fitness) {
  if (!std::isfinite(penalty_)) throw ConfigError("penalty_fitness must be finite");
}

EvalResult BoundedEvaluator::evaluate(const CandidateArchitecture& candidate, const Budget& budget) {
  if (!bounds_.admits(candidate)) {
    return penalized_result(penalty_, to_string(candidate) + " outside validity bounds");
  }
  EvalResult r = inner_->evaluate(candidate, budget);
  if (r.status != EvalStatus::ok) r.fitness = penalty_;
  return r;
}

std::optional<EvalResult> EvaluationCache::lookup(const CandidateArchitecture& candidate) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(candidate);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EvaluationCache::insert(const CandidateArchitecture& candidate, const EvalResult& result) {
  std::lock_guard lock(mutex_);
  entries_.insert_or_assign(candidate, result);
}

std::size_t EvaluationCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

}  // namespace cellnas
