#pragma once

#include <sys/types.h>

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "eval.hpp"
#include "space.hpp"

namespace cellnas::protocol {

inline constexpr int kProtocolVersion = 1;

// Training constants forwarded to the worker with every request.
struct TrainConfig {
  int kernel = 3;
  int base_filters = 32;
  int cell_filters = 64;
  int dense_units = 512;
  double dropout_cell = 0.2;
  double dropout_head = 0.5;
  double l2 = 1e-4;
  std::string optimizer = "adamax";
  double learning_rate = 2e-3;
};

struct EvalRequest {
  std::int64_t id = 0;
  CandidateArchitecture candidate;
  int epochs = 50;
  std::int64_t seed = 0;
  TrainConfig train_config;
};

struct EvalResponse {
  std::int64_t id = 0;
  bool ok = false;
  double fitness = 0.0;
  std::optional<double> accuracy;
  std::optional<std::uint64_t> params;
  std::optional<std::string> message;
};

// One JSON object, no trailing newline. Key order is fixed:
// {"id","candidate":{"conv_cells","dense_cells"},"budget":{"epochs"},"seed","train_config":{...}}
std::string encode_request(const EvalRequest& request);

// Parses one response line. Throws TransportError on malformed JSON or
// missing/mistyped fields (fitness is required when status is "ok").
EvalResponse decode_response(const std::string& line);

// Parses the greeting {"hello": true, "protocol_version": N} and returns N.
// A malformed greeting is a TransportError.
int decode_greeting(const std::string& line);

// A child process with its stdin/stdout attached to pipes. Stderr is inherited.
class WorkerProcess {
 public:
  explicit WorkerProcess(const std::vector<std::string>& argv);
  ~WorkerProcess();
  WorkerProcess(const WorkerProcess&) = delete;
  WorkerProcess& operator=(const WorkerProcess&) = delete;

  void write_line(const std::string& line);
  // Throws TimeoutError when no complete line arrives in time, TransportError
  // on end of stream.
  std::string read_line(std::chrono::milliseconds timeout);
  pid_t pid() const { return pid_; }

 private:
  void terminate();

  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

struct WorkerOptions {
  std::vector<std::string> command;
  std::chrono::milliseconds handshake_timeout{30'000};
  std::chrono::milliseconds eval_timeout{600'000};
};

// Strictly serial client for one worker: at most one outstanding request.
class WorkerClient {
 public:
  explicit WorkerClient(WorkerOptions options);

  // Spawns the process and reads the greeting. Returns the protocol version.
  // Throws VersionError when the worker speaks a different version.
  int start();
  // Kills the current process (if any) and starts a fresh one.
  int restart();
  bool running() const { return process_ != nullptr; }
  void stop() { process_.reset(); }

  // Sends one request, reads the matching response. The request id is
  // assigned here. A TransportError leaves the client stopped.
  EvalResponse evaluate(const CandidateArchitecture& candidate, int epochs, std::int64_t seed,
                        const TrainConfig& train);

  std::int64_t last_id() const { return next_id_ - 1; }

 private:
  WorkerOptions options_;
  std::unique_ptr<WorkerProcess> process_;
  std::int64_t next_id_ = 1;
};

struct ExternalSpec {
  std::vector<std::string> command;
  std::size_t workers = 1;
  double timeout_seconds = 600.0;
  double handshake_timeout_seconds = 30.0;
  ErrorPolicy on_error = ErrorPolicy::penalize;
  TrainConfig train;
};

// Evaluator backed by a pool of worker processes; each evaluate() call
// borrows one idle worker for the duration of the request.
class ExternalEvaluator final : public Evaluator {
 public:
  ExternalEvaluator(ExternalSpec spec, double penalty_fitness = kDefaultPenaltyFitness);
  std::string kind() const override { return "external"; }
  EvalResult evaluate(const CandidateArchitecture& candidate, const Budget& budget) override;

  std::size_t restarts() const;

 private:
  std::unique_ptr<WorkerClient> acquire();
  void release(std::unique_ptr<WorkerClient> client);

  ExternalSpec spec_;
  double penalty_;
  mutable std::mutex mutex_;
  std::condition_variable idle_cv_;
  std::vector<std::unique_ptr<WorkerClient>> idle_;
  std::size_t restarts_ = 0;
};

}  // namespace cellnas::protocol
