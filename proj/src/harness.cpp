#include "harness.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "error.hpp"
#include "evaluator_factory.hpp"
#include "report.hpp"

namespace cellnas {

using nlohmann::json;

std::optional<std::size_t> find_best(const std::vector<TrialRecord>& trials) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (trials[i].status != EvalStatus::ok) continue;
    if (!best || trials[i].fitness > trials[*best].fitness) best = i;
  }
  return best;
}

void finalize_counts(RunReport& report) {
  report.best = find_best(report.trials);
  report.total_evaluations = report.trials.size();
  report.unique_evaluations = 0;
  for (const auto& t : report.trials) {
    if (!t.cached) ++report.unique_evaluations;
  }
}

namespace {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

template <class T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <class T>
std::optional<T> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<T>();
}

// Append-only JSON-lines log; every line is flushed as it is written.
class TrialLog {
 public:
  TrialLog(const std::filesystem::path& path, const RunReport& header) : out_(path, std::ios::trunc) {
    if (!out_) throw Error("cannot write trial log " + path.string());
    write({{"type", "run"}, {"strategy", header.strategy}, {"seed", header.seed}, {"config", header.config}});
  }

  void trial(const TrialRecord& t) {
    json j = trial_to_json(t);
    j["type"] = "trial";
    write(j);
  }

  void end(double total_wall_time, bool completed) {
    write({{"type", "end"}, {"total_wall_time_seconds", total_wall_time}, {"completed", completed}});
  }

 private:
  void write(const json& j) {
    out_ << j.dump() << '\n';
    out_.flush();
  }
  std::ofstream out_;
};

struct Slot {
  enum class Kind { fresh, cached, duplicate } kind = Kind::fresh;
  std::size_t source = 0;  // for duplicates: earlier slot in this batch
  EvalResult result;
  double wall_time = 0.0;
  std::string timestamp;
  bool done = false;
};

TrialRecord make_record(std::size_t index, const Proposal& p, const Slot& slot, const EvalResult& r) {
  TrialRecord t;
  t.trial_index = index;
  t.candidate = p.candidate;
  t.genome = p.genome;
  t.generation = p.generation;
  t.fitness = r.fitness;
  t.accuracy = r.accuracy;
  t.param_count = r.param_count ? r.param_count : std::optional<std::uint64_t>(candidate_params(p.candidate));
  t.size_string = format_size_millions(*t.param_count);
  t.wall_time_seconds = slot.wall_time;
  t.timestamp = slot.timestamp;
  t.status = r.status;
  t.cached = slot.kind != Slot::Kind::fresh;
  t.aux = r.aux;
  t.message = r.message;
  return t;
}

// Evaluates one batch and appends its trials to the report in proposal
// order. Returns the first evaluator exception, if any.
std::exception_ptr evaluate_batch(const std::vector<Proposal>& batch, Evaluator& evaluator,
                                  const RunOptions& options, EvaluationCache& cache,
                                  RunReport& report, TrialLog* log) {
  const std::size_t base = report.trials.size();
  std::vector<Slot> slots(batch.size());
  std::vector<std::size_t> fresh;
  std::map<CandidateArchitecture, std::size_t> first_seen;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& c = batch[i].candidate;
    if (options.cache) {
      if (auto hit = cache.lookup(c)) {
        slots[i].kind = Slot::Kind::cached;
        slots[i].result = *hit;
        slots[i].timestamp = utc_timestamp();
        slots[i].done = true;
        continue;
      }
      if (auto it = first_seen.find(c); it != first_seen.end()) {
        slots[i].kind = Slot::Kind::duplicate;
        slots[i].source = it->second;
        continue;
      }
      first_seen.emplace(c, i);
    }
    fresh.push_back(i);
  }

  std::mutex commit_mutex;
  std::size_t next_commit = 0;
  auto commit_ready = [&] {
    while (next_commit < slots.size()) {
      Slot& s = slots[next_commit];
      if (s.kind == Slot::Kind::duplicate) {
        const Slot& src = slots[s.source];
        if (!src.done) break;
        s.result = src.result;
        s.timestamp = utc_timestamp();
        s.done = true;
      }
      if (!s.done) break;
      TrialRecord t = make_record(base + next_commit, batch[next_commit], s, s.result);
      if (log) log->trial(t);
      report.trials.push_back(std::move(t));
      ++next_commit;
    }
  };

  std::atomic<std::size_t> next_fresh{0};
  std::atomic<bool> stop{false};
  std::exception_ptr failure;

  auto work = [&] {
    for (;;) {
      if (stop.load()) return;
      const std::size_t k = next_fresh.fetch_add(1);
      if (k >= fresh.size()) return;
      const std::size_t i = fresh[k];
      const auto t0 = std::chrono::steady_clock::now();
      EvalResult r;
      try {
        r = evaluator.evaluate(batch[i].candidate, options.budget);
      } catch (...) {
        std::lock_guard lock(commit_mutex);
        if (!failure) failure = std::current_exception();
        stop.store(true);
        return;
      }
      const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
      if (options.cache && r.status != EvalStatus::failed) cache.insert(batch[i].candidate, r);
      std::lock_guard lock(commit_mutex);
      slots[i].result = std::move(r);
      slots[i].wall_time = dt.count();
      slots[i].timestamp = utc_timestamp();
      slots[i].done = true;
      commit_ready();
    }
  };

  {
    std::lock_guard lock(commit_mutex);
    commit_ready();
  }
  const std::size_t n_threads = std::min(std::max<std::size_t>(options.workers, 1), fresh.size());
  if (n_threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(work);
  }
  std::lock_guard lock(commit_mutex);
  commit_ready();
  return failure;
}

}  // namespace

RunReport run_search(SearchStrategy& strategy, Evaluator& evaluator, const RunOptions& options) {
  RunReport report;
  report.strategy = strategy.name();
  report.config = options.config_snapshot;
  report.seed = options.budget.seed;

  std::optional<TrialLog> log;
  if (options.out_dir) {
    std::filesystem::create_directories(*options.out_dir);
    std::ofstream(*options.out_dir / kConfigFile) << report.config.dump(2) << '\n';
    log.emplace(*options.out_dir / kTrialLogFile, report);
  }

  EvaluationCache cache;
  const auto start = std::chrono::steady_clock::now();
  std::exception_ptr failure;
  for (;;) {
    const auto batch = strategy.ask();
    if (batch.empty()) break;
    const std::size_t base = report.trials.size();
    failure = evaluate_batch(batch, evaluator, options, cache, report, log ? &*log : nullptr);
    if (failure) break;
    std::vector<double> fitness;
    fitness.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) fitness.push_back(report.trials[base + i].fitness);
    strategy.tell(fitness);
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  report.total_wall_time_seconds = elapsed.count();
  report.completed = !failure;
  finalize_counts(report);
  if (log) log->end(report.total_wall_time_seconds, report.completed);
  if (options.out_dir) write_report_files(report, *options.out_dir);
  if (failure) std::rethrow_exception(failure);
  return report;
}

RunReport run(const RunConfig& config, std::optional<std::filesystem::path> out_dir) {
  config.validate();
  auto strategy = make_strategy(config);
  auto evaluator = make_evaluator(config.evaluator, config.workers);
  RunOptions options;
  options.workers = config.workers;
  options.cache = config.cache;
  options.budget.epochs = config.epochs;
  options.budget.seed = config.seed;
  options.out_dir = out_dir ? out_dir : config.out;
  RunConfig snapshot = config;
  if (options.out_dir) snapshot.out = options.out_dir;
  options.config_snapshot = to_json(snapshot);
  return run_search(*strategy, *evaluator, options);
}

// ---------------------------------------------------------------------------

json trial_to_json(const TrialRecord& t) {
  json j;
  j["trial_index"] = t.trial_index;
  j["conv_cells"] = t.candidate.conv_cells;
  j["dense_cells"] = t.candidate.dense_cells;
  j["genome"] = t.genome ? json(t.genome->to_string()) : json(nullptr);
  j["generation"] = opt_json(t.generation);
  j["fitness"] = t.fitness;
  j["accuracy"] = opt_json(t.accuracy);
  j["param_count"] = opt_json(t.param_count);
  j["size"] = t.size_string;
  j["status"] = to_string(t.status);
  j["cached"] = t.cached;
  j["aux"] = t.aux;
  j["message"] = t.message;
  j["wall_time_seconds"] = t.wall_time_seconds;
  j["timestamp"] = t.timestamp;
  return j;
}

TrialRecord trial_from_json(const json& j) {
  try {
    TrialRecord t;
    t.trial_index = j.at("trial_index").get<std::size_t>();
    t.candidate = {j.at("conv_cells").get<int>(), j.at("dense_cells").get<int>()};
    if (auto g = opt_from<std::string>(j, "genome")) t.genome = Genome::parse(*g);
    t.generation = opt_from<std::size_t>(j, "generation");
    t.fitness = j.at("fitness").get<double>();
    t.accuracy = opt_from<double>(j, "accuracy");
    t.param_count = opt_from<std::uint64_t>(j, "param_count");
    t.size_string = j.value("size", std::string{});
    t.status = parse_eval_status(j.at("status").get<std::string>());
    t.cached = j.value("cached", false);
    if (j.contains("aux")) t.aux = j["aux"].get<std::map<std::string, double>>();
    t.message = j.value("message", std::string{});
    t.wall_time_seconds = j.value("wall_time_seconds", 0.0);
    t.timestamp = j.value("timestamp", std::string{});
    return t;
  } catch (const json::exception& e) {
    throw LoadError(std::string("malformed trial record: ") + e.what());
  }
}

json report_to_json(const RunReport& r) {
  json trials = json::array();
  for (const auto& t : r.trials) trials.push_back(trial_to_json(t));
  return {{"strategy", r.strategy},
          {"seed", r.seed},
          {"config", r.config},
          {"trials", trials},
          {"best_index", opt_json(r.best)},
          {"total_wall_time_seconds", r.total_wall_time_seconds},
          {"unique_evaluations", r.unique_evaluations},
          {"total_evaluations", r.total_evaluations},
          {"completed", r.completed}};
}

RunReport read_trial_log(const std::filesystem::path& log_path) {
  std::ifstream in(log_path);
  if (!in) throw LoadError("cannot open trial log " + log_path.string());
  RunReport r;
  bool header = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      // A crash can leave a torn final line; anything earlier is corruption.
      if (in.peek() == std::char_traits<char>::eof()) break;
      throw LoadError("trial log line " + std::to_string(line_no) + " is not JSON");
    }
    const auto type = j.value("type", std::string{});
    if (type == "run") {
      r.strategy = j.value("strategy", std::string{});
      r.seed = j.value("seed", std::uint64_t{0});
      r.config = j.value("config", json::object());
      header = true;
    } else if (type == "trial") {
      TrialRecord t = trial_from_json(j);
      if (t.trial_index != r.trials.size()) {
        throw LoadError("trial log indices are not dense at line " + std::to_string(line_no));
      }
      r.trials.push_back(std::move(t));
    } else if (type == "end") {
      r.total_wall_time_seconds = j.value("total_wall_time_seconds", 0.0);
      r.completed = j.value("completed", false);
    } else {
      throw LoadError("unknown record type at trial log line " + std::to_string(line_no));
    }
  }
  if (!header) throw LoadError("trial log has no run header: " + log_path.string());
  finalize_counts(r);
  return r;
}

RunReport load_run(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) return read_trial_log(path / kTrialLogFile);
  return read_trial_log(path);
}

void write_report_files(const RunReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto write = [&](const char* name, const std::string& text) {
    std::ofstream out(out_dir / name, std::ios::trunc);
    if (!out) throw Error("cannot write " + (out_dir / name).string());
    out << text;
  };
  write(kConfigFile, report.config.dump(2) + "\n");
  write(kReportFile, report_to_json(report).dump(2) + "\n");
  write(kResultsTextFile, render_results_table(report));
  write(kResultsCsvFile, render_results_csv(report));
}

}  // namespace cellnas
