#include "protocol.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <thread>

#include <json.hpp>

#include "error.hpp"

extern char** environ;

namespace cellnas::protocol {

using ordered_json = nlohmann::ordered_json;

std::string encode_request(const EvalRequest& r) {
  ordered_json j;
  j["id"] = r.id;
  j["candidate"] = {{"conv_cells", r.candidate.conv_cells}, {"dense_cells", r.candidate.dense_cells}};
  j["budget"] = {{"epochs", r.epochs}};
  j["seed"] = r.seed;
  const auto& t = r.train_config;
  j["train_config"] = {{"kernel", t.kernel},
                       {"base_filters", t.base_filters},
                       {"cell_filters", t.cell_filters},
                       {"dense_units", t.dense_units},
                       {"dropout_cell", t.dropout_cell},
                       {"dropout_head", t.dropout_head},
                       {"l2", t.l2},
                       {"optimizer", t.optimizer},
                       {"learning_rate", t.learning_rate}};
  return j.dump();
}

namespace {

nlohmann::json parse_object(const std::string& line, const char* what) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error&) {
    throw TransportError(std::string("unparseable ") + what + ": " + line.substr(0, 200));
  }
  if (!j.is_object()) throw TransportError(std::string(what) + " is not a JSON object");
  return j;
}

}  // namespace

EvalResponse decode_response(const std::string& line) {
  const auto j = parse_object(line, "response");
  EvalResponse r;
  if (!j.contains("id") || !j["id"].is_number_integer()) {
    throw TransportError("response without integer id");
  }
  r.id = j["id"].get<std::int64_t>();
  if (!j.contains("status") || !j["status"].is_string()) {
    throw TransportError("response without status");
  }
  const auto status = j["status"].get<std::string>();
  if (status == "ok") {
    r.ok = true;
  } else if (status != "error") {
    throw TransportError("response status must be \"ok\" or \"error\", got \"" + status + "\"");
  }
  if (r.ok) {
    if (!j.contains("fitness") || !j["fitness"].is_number()) {
      throw TransportError("ok response without numeric fitness");
    }
    r.fitness = j["fitness"].get<double>();
    if (!std::isfinite(r.fitness)) throw TransportError("non-finite fitness");
  }
  if (j.contains("accuracy") && !j["accuracy"].is_null()) {
    if (!j["accuracy"].is_number()) throw TransportError("accuracy must be a number");
    r.accuracy = j["accuracy"].get<double>();
  }
  if (j.contains("params") && !j["params"].is_null()) {
    if (!j["params"].is_number_unsigned()) {
      throw TransportError("params must be a non-negative integer");
    }
    r.params = j["params"].get<std::uint64_t>();
  }
  if (j.contains("message") && j["message"].is_string()) r.message = j["message"].get<std::string>();
  return r;
}

int decode_greeting(const std::string& line) {
  const auto j = parse_object(line, "greeting");
  if (!j.contains("hello") || j["hello"] != true) throw TransportError("greeting lacks \"hello\": true");
  if (!j.contains("protocol_version") || !j["protocol_version"].is_number_integer()) {
    throw TransportError("greeting lacks integer protocol_version");
  }
  return j["protocol_version"].get<int>();
}

// ---------------------------------------------------------------------------

WorkerProcess::WorkerProcess(const std::vector<std::string>& argv) {
  if (argv.empty()) throw TransportError("empty worker command");
  int in_pipe[2];
  int out_pipe[2];
  if (pipe2(in_pipe, O_CLOEXEC) != 0) throw TransportError("pipe: " + std::string(std::strerror(errno)));
  if (pipe2(out_pipe, O_CLOEXEC) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw TransportError("pipe: " + std::string(std::strerror(errno)));
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);

  std::vector<char*> args;
  args.reserve(argv.size() + 1);
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  const int rc = posix_spawnp(&pid_, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  close(in_pipe[0]);
  close(out_pipe[1]);
  if (rc != 0) {
    close(in_pipe[1]);
    close(out_pipe[0]);
    pid_ = -1;
    throw TransportError("cannot start worker '" + argv[0] + "': " + std::strerror(rc));
  }
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

WorkerProcess::~WorkerProcess() { terminate(); }

void WorkerProcess::terminate() {
  if (to_child_ >= 0) close(to_child_);
  to_child_ = -1;
  if (pid_ > 0) {
    // Closing stdin asks the worker to exit; give it a moment, then kill.
    int status = 0;
    bool reaped = false;
    for (int i = 0; i < 50 && !reaped; ++i) {
      if (waitpid(pid_, &status, WNOHANG) == pid_) {
        reaped = true;
      } else {
        std::this_thread::sleep_for(std::chrono::milliseconds(4));
      }
    }
    if (!reaped) {
      kill(pid_, SIGKILL);
      waitpid(pid_, &status, 0);
    }
    pid_ = -1;
  }
  if (from_child_ >= 0) close(from_child_);
  from_child_ = -1;
}

void WorkerProcess::write_line(const std::string& line) {
  const std::string data = line + "\n";
  // Keep a dead reader from killing us with SIGPIPE: block it on this thread
  // and swallow the pending signal if the write raised one.
  sigset_t pipe_set;
  sigset_t old_set;
  sigemptyset(&pipe_set);
  sigaddset(&pipe_set, SIGPIPE);
  pthread_sigmask(SIG_BLOCK, &pipe_set, &old_set);

  std::size_t written = 0;
  int err = 0;
  while (written < data.size()) {
    const auto n = ::write(to_child_, data.data() + written, data.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      err = errno;
      break;
    }
    written += static_cast<std::size_t>(n);
  }
  if (err == EPIPE) {
    timespec zero{0, 0};
    sigtimedwait(&pipe_set, nullptr, &zero);
  }
  pthread_sigmask(SIG_SETMASK, &old_set, nullptr);
  if (err != 0) throw TransportError("write to worker failed: " + std::string(std::strerror(err)));
}

std::string WorkerProcess::read_line(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) throw TimeoutError("timed out waiting for worker output");
    pollfd pfd{from_child_, POLLIN, 0};
    const int rc = poll(&pfd, 1, static_cast<int>(std::min<std::int64_t>(remaining.count(), 1 << 30)));
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw TransportError("poll failed: " + std::string(std::strerror(errno)));
    }
    if (rc == 0) continue;
    char chunk[4096];
    const auto n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw TransportError("read from worker failed: " + std::string(std::strerror(errno)));
    }
    if (n == 0) throw TransportError("worker closed its output");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

// ---------------------------------------------------------------------------

WorkerClient::WorkerClient(WorkerOptions options) : options_(std::move(options)) {}

int WorkerClient::start() {
  process_ = std::make_unique<WorkerProcess>(options_.command);
  try {
    const int version = decode_greeting(process_->read_line(options_.handshake_timeout));
    if (version != kProtocolVersion) {
      throw VersionError("worker speaks protocol version " + std::to_string(version) + ", expected " +
                         std::to_string(kProtocolVersion));
    }
    return version;
  } catch (...) {
    process_.reset();
    throw;
  }
}

int WorkerClient::restart() {
  process_.reset();
  return start();
}

EvalResponse WorkerClient::evaluate(const CandidateArchitecture& candidate, int epochs,
                                    std::int64_t seed, const TrainConfig& train) {
  if (!process_) throw TransportError("worker not running");
  EvalRequest req;
  req.id = next_id_++;
  req.candidate = candidate;
  req.epochs = epochs;
  req.seed = seed;
  req.train_config = train;
  try {
    process_->write_line(encode_request(req));
    EvalResponse resp = decode_response(process_->read_line(options_.eval_timeout));
    if (resp.id != req.id) {
      throw TransportError("response id " + std::to_string(resp.id) + " does not match request id " +
                           std::to_string(req.id));
    }
    return resp;
  } catch (const TransportError&) {
    process_.reset();
    throw;
  }
}

// ---------------------------------------------------------------------------

ExternalEvaluator::ExternalEvaluator(ExternalSpec spec, double penalty_fitness)
    : spec_(std::move(spec)), penalty_(penalty_fitness) {
  if (spec_.command.empty()) throw ConfigError("external evaluator needs a command");
  if (spec_.workers == 0) spec_.workers = 1;
  if (!(spec_.timeout_seconds > 0.0) || !(spec_.handshake_timeout_seconds > 0.0)) {
    throw ConfigError("external evaluator timeouts must be > 0");
  }
  WorkerOptions opts;
  opts.command = spec_.command;
  opts.eval_timeout = std::chrono::milliseconds(static_cast<std::int64_t>(spec_.timeout_seconds * 1000));
  opts.handshake_timeout =
      std::chrono::milliseconds(static_cast<std::int64_t>(spec_.handshake_timeout_seconds * 1000));
  for (std::size_t i = 0; i < spec_.workers; ++i) idle_.push_back(std::make_unique<WorkerClient>(opts));
}

std::unique_ptr<WorkerClient> ExternalEvaluator::acquire() {
  std::unique_lock lock(mutex_);
  idle_cv_.wait(lock, [&] { return !idle_.empty(); });
  auto client = std::move(idle_.back());
  idle_.pop_back();
  return client;
}

void ExternalEvaluator::release(std::unique_ptr<WorkerClient> client) {
  {
    std::lock_guard lock(mutex_);
    idle_.push_back(std::move(client));
  }
  idle_cv_.notify_one();
}

std::size_t ExternalEvaluator::restarts() const {
  std::lock_guard lock(mutex_);
  return restarts_;
}

EvalResult ExternalEvaluator::evaluate(const CandidateArchitecture& candidate, const Budget& budget) {
  auto client = acquire();
  struct Returner {
    ExternalEvaluator* self;
    std::unique_ptr<WorkerClient>& client;
    ~Returner() { self->release(std::move(client)); }
  } returner{this, client};

  try {
    if (!client->running()) {
      bool restarted = client->last_id() > 0;
      client->start();
      if (restarted) {
        std::lock_guard lock(mutex_);
        ++restarts_;
      }
    }
    const EvalResponse resp = client->evaluate(candidate, budget.epochs,
                                               static_cast<std::int64_t>(budget.seed), spec_.train);
    if (!resp.ok) {
      const std::string msg = resp.message.value_or("worker reported an error");
      if (spec_.on_error == ErrorPolicy::abort) {
        throw RunAborted("worker error for " + to_string(candidate) + ": " + msg);
      }
      return penalized_result(penalty_, msg);
    }
    EvalResult r;
    r.fitness = resp.fitness;
    r.accuracy = resp.accuracy;
    r.param_count = resp.params;
    return r;
  } catch (const VersionError& e) {
    throw RunAborted(e.what());
  } catch (const TransportError& e) {
    // The client is stopped; the next request on it spawns a fresh worker.
    if (spec_.on_error == ErrorPolicy::abort) {
      throw RunAborted("worker transport error for " + to_string(candidate) + ": " + e.what());
    }
    EvalResult r;
    r.status = EvalStatus::failed;
    r.fitness = penalty_;
    r.message = e.what();
    return r;
  }
}

}  // namespace cellnas::protocol
