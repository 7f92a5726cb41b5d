#include "cellnas/cellnas.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "config.hpp"
#include "error.hpp"
#include "harness.hpp"
#include "report.hpp"
#include "space.hpp"

struct cellnas_config {
  cellnas::RunConfig value;
};

struct cellnas_report {
  cellnas::RunReport value;
};

namespace {

thread_local std::string g_last_error;

cellnas_status fail(cellnas_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Maps exceptions from the core onto status codes.
template <class F>
cellnas_status guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return CELLNAS_OK;
  } catch (const cellnas::RunAborted& e) {
    return fail(CELLNAS_ERR_ABORTED, e.what());
  } catch (const cellnas::ConfigError& e) {
    return fail(CELLNAS_ERR_CONFIG, e.what());
  } catch (const cellnas::CodecError& e) {
    return fail(CELLNAS_ERR_CODEC, e.what());
  } catch (const cellnas::RangeError& e) {
    return fail(CELLNAS_ERR_RANGE, e.what());
  } catch (const cellnas::LoadError& e) {
    return fail(CELLNAS_ERR_IO, e.what());
  } catch (const cellnas::TransportError& e) {
    return fail(CELLNAS_ERR_TRANSPORT, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(CELLNAS_ERR_IO, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(CELLNAS_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(CELLNAS_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(CELLNAS_ERR_INTERNAL, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

#define CELLNAS_REQUIRE(cond, what) \
  if (!(cond)) return fail(CELLNAS_ERR_INVALID_ARGUMENT, what)

}  // namespace

extern "C" {

const char* cellnas_last_error(void) { return g_last_error.c_str(); }

const char* cellnas_status_name(cellnas_status status) {
  switch (status) {
    case CELLNAS_OK: return "ok";
    case CELLNAS_ERR_INVALID_ARGUMENT: return "invalid argument";
    case CELLNAS_ERR_CONFIG: return "configuration error";
    case CELLNAS_ERR_CODEC: return "codec error";
    case CELLNAS_ERR_RANGE: return "range error";
    case CELLNAS_ERR_IO: return "i/o error";
    case CELLNAS_ERR_ABORTED: return "run aborted";
    case CELLNAS_ERR_TRANSPORT: return "transport error";
    case CELLNAS_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void cellnas_string_free(char* s) { std::free(s); }

cellnas_status cellnas_count_params(int conv_cells, int dense_cells, uint64_t* out) {
  CELLNAS_REQUIRE(out, "out is null");
  CELLNAS_REQUIRE(conv_cells >= 0 && dense_cells >= 0, "cell counts must be non-negative");
  return guarded([&] { *out = cellnas::candidate_params({conv_cells, dense_cells}); });
}

cellnas_status cellnas_format_size(uint64_t params, char** out) {
  CELLNAS_REQUIRE(out, "out is null");
  return guarded([&] { *out = dup_string(cellnas::format_size_millions(params)); });
}

cellnas_status cellnas_decode_genome(const char* bits, int conv_bits, int dense_bits, int* conv_cells,
                                     int* dense_cells) {
  CELLNAS_REQUIRE(bits && conv_cells && dense_cells, "null argument");
  return guarded([&] {
    const cellnas::GenomeLayout layout(conv_bits, dense_bits);
    const auto arch = cellnas::decode_genome(cellnas::Genome::parse(bits), layout);
    *conv_cells = arch.conv_cells;
    *dense_cells = arch.dense_cells;
  });
}

cellnas_status cellnas_encode_architecture(int conv_cells, int dense_cells, int conv_bits, int dense_bits,
                                           char** out) {
  CELLNAS_REQUIRE(out, "out is null");
  return guarded([&] {
    const cellnas::GenomeLayout layout(conv_bits, dense_bits);
    *out = dup_string(cellnas::encode_architecture({conv_cells, dense_cells}, layout).to_string());
  });
}

cellnas_status cellnas_config_default(cellnas_config** out) {
  CELLNAS_REQUIRE(out, "out is null");
  return guarded([&] { *out = new cellnas_config{}; });
}

cellnas_status cellnas_config_load(const char* path, cellnas_config** out) {
  CELLNAS_REQUIRE(path && out, "null argument");
  *out = nullptr;
  return guarded([&] { *out = new cellnas_config{cellnas::load_run_config(path)}; });
}

cellnas_status cellnas_config_parse(const char* json_text, const char* base_dir, cellnas_config** out) {
  CELLNAS_REQUIRE(json_text && out, "null argument");
  *out = nullptr;
  return guarded([&] {
    *out = new cellnas_config{cellnas::parse_run_config_text(json_text, base_dir ? base_dir : "")};
  });
}

void cellnas_config_free(cellnas_config* config) { delete config; }

cellnas_status cellnas_config_set_strategy(cellnas_config* config, const char* strategy) {
  CELLNAS_REQUIRE(config && strategy, "null argument");
  return guarded([&] {
    auto next = config->value;
    next.strategy = strategy;
    if (next.strategy == "ga") next.ga.genome_length = static_cast<std::size_t>(next.space.genome_layout.total_bits());
    next.validate();
    config->value = std::move(next);
  });
}

cellnas_status cellnas_config_set_seed(cellnas_config* config, uint64_t seed) {
  CELLNAS_REQUIRE(config, "config is null");
  config->value.seed = seed;
  return CELLNAS_OK;
}

cellnas_status cellnas_config_set_evaluator(cellnas_config* config, const char* spec) {
  CELLNAS_REQUIRE(config && spec, "null argument");
  return guarded([&] { config->value.evaluator = cellnas::parse_evaluator_flag(spec, config->value.evaluator); });
}

cellnas_status cellnas_config_set_workers(cellnas_config* config, size_t workers) {
  CELLNAS_REQUIRE(config, "config is null");
  CELLNAS_REQUIRE(workers >= 1, "workers must be >= 1");
  config->value.workers = workers;
  return CELLNAS_OK;
}

cellnas_status cellnas_config_set_output(cellnas_config* config, const char* dir) {
  CELLNAS_REQUIRE(config, "config is null");
  if (dir && *dir) {
    config->value.out = std::filesystem::path(dir);
  } else {
    config->value.out.reset();
  }
  return CELLNAS_OK;
}

cellnas_status cellnas_config_get_strategy(const cellnas_config* config, char** out) {
  CELLNAS_REQUIRE(config && out, "null argument");
  return guarded([&] { *out = dup_string(config->value.strategy); });
}

cellnas_status cellnas_config_get_seed(const cellnas_config* config, uint64_t* out) {
  CELLNAS_REQUIRE(config && out, "null argument");
  *out = config->value.seed;
  return CELLNAS_OK;
}

cellnas_status cellnas_config_get_output(const cellnas_config* config, char** out) {
  CELLNAS_REQUIRE(config && out, "null argument");
  return guarded([&] { *out = config->value.out ? dup_string(config->value.out->string()) : nullptr; });
}

cellnas_status cellnas_config_genome_bits(const cellnas_config* config, int* conv_bits, int* dense_bits) {
  CELLNAS_REQUIRE(config && conv_bits && dense_bits, "null argument");
  *conv_bits = config->value.space.genome_layout.conv_bits();
  *dense_bits = config->value.space.genome_layout.dense_bits();
  return CELLNAS_OK;
}

cellnas_status cellnas_config_to_json(const cellnas_config* config, char** out) {
  CELLNAS_REQUIRE(config && out, "null argument");
  return guarded([&] { *out = dup_string(cellnas::to_json(config->value).dump(2)); });
}

cellnas_status cellnas_run(const cellnas_config* config, cellnas_report** out) {
  CELLNAS_REQUIRE(config && out, "null argument");
  *out = nullptr;
  return guarded([&] { *out = new cellnas_report{cellnas::run(config->value)}; });
}

cellnas_status cellnas_report_load(const char* path, cellnas_report** out) {
  CELLNAS_REQUIRE(path && out, "null argument");
  *out = nullptr;
  return guarded([&] { *out = new cellnas_report{cellnas::load_run(path)}; });
}

void cellnas_report_free(cellnas_report* report) { delete report; }

cellnas_status cellnas_report_summary_get(const cellnas_report* report, cellnas_report_summary* out) {
  CELLNAS_REQUIRE(report && out, "null argument");
  const auto& r = report->value;
  out->total_evaluations = r.total_evaluations;
  out->unique_evaluations = r.unique_evaluations;
  out->has_best = r.best.has_value() ? 1 : 0;
  out->best_index = r.best.value_or(0);
  out->total_wall_time_seconds = r.total_wall_time_seconds;
  out->completed = r.completed ? 1 : 0;
  return CELLNAS_OK;
}

cellnas_status cellnas_report_trial(const cellnas_report* report, size_t index, cellnas_trial* out) {
  CELLNAS_REQUIRE(report && out, "null argument");
  CELLNAS_REQUIRE(index < report->value.trials.size(), "trial index out of range");
  const auto& t = report->value.trials[index];
  out->trial_index = t.trial_index;
  out->conv_cells = t.candidate.conv_cells;
  out->dense_cells = t.candidate.dense_cells;
  out->fitness = t.fitness;
  out->has_accuracy = t.accuracy ? 1 : 0;
  out->accuracy = t.accuracy.value_or(0.0);
  out->param_count = t.param_count.value_or(0);
  out->status = t.status == cellnas::EvalStatus::ok          ? CELLNAS_TRIAL_OK
                : t.status == cellnas::EvalStatus::penalized ? CELLNAS_TRIAL_PENALIZED
                                                             : CELLNAS_TRIAL_FAILED;
  out->cached = t.cached ? 1 : 0;
  out->wall_time_seconds = t.wall_time_seconds;
  return CELLNAS_OK;
}

cellnas_status cellnas_report_strategy(const cellnas_report* report, char** out) {
  CELLNAS_REQUIRE(report && out, "null argument");
  return guarded([&] { *out = dup_string(report->value.strategy); });
}

cellnas_status cellnas_report_best_row(const cellnas_report* report, char** out) {
  CELLNAS_REQUIRE(report && out, "null argument");
  return guarded([&] { *out = dup_string(cellnas::best_row(report->value)); });
}

cellnas_status cellnas_report_render(const cellnas_report* report, cellnas_format format, char** out) {
  CELLNAS_REQUIRE(report && out, "null argument");
  switch (format) {
    case CELLNAS_FORMAT_TABLE:
      return guarded([&] { *out = dup_string(cellnas::render_results_table(report->value)); });
    case CELLNAS_FORMAT_CSV:
      return guarded([&] { *out = dup_string(cellnas::render_results_csv(report->value)); });
    case CELLNAS_FORMAT_JSON:
      return guarded([&] { *out = dup_string(cellnas::report_to_json(report->value).dump(2) + "\n"); });
  }
  return fail(CELLNAS_ERR_INVALID_ARGUMENT, "unknown format");
}

cellnas_status cellnas_compare(const cellnas_report* const* reports, size_t count, char** out) {
  CELLNAS_REQUIRE(reports && out, "null argument");
  CELLNAS_REQUIRE(count >= 1, "compare needs at least one report");
  return guarded([&] {
    std::vector<cellnas::RunReport> copies;
    copies.reserve(count);
    for (size_t i = 0; i < count; ++i) {
      if (!reports[i]) throw std::invalid_argument("null report in list");
      copies.push_back(reports[i]->value);
    }
    *out = dup_string(cellnas::compare(copies));
  });
}

}  // extern "C"
