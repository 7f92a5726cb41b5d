#include "evaluator_factory.hpp"

#include <charconv>
#include <sstream>

#include "error.hpp"

namespace cellnas {

std::string to_string(EvaluatorKind kind) {
  switch (kind) {
    case EvaluatorKind::surrogate: return "surrogate";
    case EvaluatorKind::table: return "table";
    case EvaluatorKind::param_count: return "param_count";
    case EvaluatorKind::external: return "external";
  }
  return "surrogate";
}

std::unique_ptr<Evaluator> make_evaluator(const EvaluatorSpec& spec, std::size_t workers) {
  std::unique_ptr<Evaluator> inner;
  switch (spec.kind) {
    case EvaluatorKind::surrogate:
      inner = std::make_unique<SurrogateEvaluator>(spec.surrogate);
      break;
    case EvaluatorKind::table:
      if (spec.table_path.empty()) throw ConfigError("table evaluator needs a table path");
      inner = std::make_unique<TableEvaluator>(table_load(read_table_file(spec.table_path)));
      break;
    case EvaluatorKind::param_count:
      inner = std::make_unique<ParamCountEvaluator>();
      break;
    case EvaluatorKind::external: {
      auto ext = spec.external;
      ext.on_error = spec.on_error;
      ext.workers = std::max<std::size_t>(workers, 1);
      inner = std::make_unique<protocol::ExternalEvaluator>(std::move(ext), spec.penalty_fitness);
      break;
    }
  }
  return std::make_unique<BoundedEvaluator>(std::move(inner), spec.validity, spec.penalty_fitness);
}

namespace {

double to_double(const std::string& key, const std::string& value) {
  double out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError("surrogate option " + key + " needs a number, got '" + value + "'");
  }
  return out;
}

template <class Int>
Int to_int(const std::string& key, const std::string& value) {
  Int out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError("surrogate option " + key + " needs an integer, got '" + value + "'");
  }
  return out;
}

}  // namespace

EvaluatorSpec parse_evaluator_flag(std::string_view text, const EvaluatorSpec& base) {
  EvaluatorSpec spec = base;
  const auto colon = text.find(':');
  const std::string head(text.substr(0, colon));
  const std::string rest = colon == std::string_view::npos ? "" : std::string(text.substr(colon + 1));

  if (head == "surrogate") {
    spec.kind = EvaluatorKind::surrogate;
    std::istringstream is(rest);
    std::string item;
    while (std::getline(is, item, ',')) {
      if (item.empty()) continue;
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ConfigError("surrogate option '" + item + "' needs key=value");
      const std::string key = item.substr(0, eq);
      const std::string value = item.substr(eq + 1);
      if (key == "peak") spec.surrogate.peak = to_double(key, value);
      else if (key == "conv") spec.surrogate.optimum_conv = to_int<int>(key, value);
      else if (key == "dense") spec.surrogate.optimum_dense = to_int<int>(key, value);
      else if (key == "a") spec.surrogate.curvature_conv = to_double(key, value);
      else if (key == "b") spec.surrogate.curvature_dense = to_double(key, value);
      else if (key == "noise") spec.surrogate.noise_sd = to_double(key, value);
      else if (key == "seed") spec.surrogate.seed = to_int<std::uint64_t>(key, value);
      else throw ConfigError("unknown surrogate option '" + key + "'");
    }
  } else if (head == "table") {
    if (rest.empty()) throw ConfigError("table evaluator needs a path: table:PATH");
    spec.kind = EvaluatorKind::table;
    spec.table_path = rest;
  } else if (head == "param_count") {
    spec.kind = EvaluatorKind::param_count;
  } else if (head == "external") {
    std::istringstream is(rest);
    std::vector<std::string> argv;
    for (std::string tok; is >> tok;) argv.push_back(tok);
    if (argv.empty()) throw ConfigError("external evaluator needs a command: external:CMD [ARGS]");
    spec.kind = EvaluatorKind::external;
    spec.external.command = std::move(argv);
  } else {
    throw ConfigError("unknown evaluator '" + head + "' (surrogate, table, param_count, external)");
  }
  return spec;
}

}  // namespace cellnas
