/*
 * cellnas: cell-count architecture search (grid, random, genetic) behind a C
 * interface. All functions return a cellnas_status; on failure a message is
 * available from cellnas_last_error() on the calling thread. Strings returned
 * through char** out-parameters are owned by the caller and released with
 * cellnas_string_free().
 */
#ifndef CELLNAS_CELLNAS_H
#define CELLNAS_CELLNAS_H

#include <stddef.h>
#include <stdint.h>

#if defined(CELLNAS_BUILDING_LIBRARY)
#define CELLNAS_API __attribute__((visibility("default")))
#else
#define CELLNAS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cellnas_status {
  CELLNAS_OK = 0,
  CELLNAS_ERR_INVALID_ARGUMENT = 1, /* null pointer, negative count, bad enum */
  CELLNAS_ERR_CONFIG = 2,           /* unreadable or invalid configuration */
  CELLNAS_ERR_CODEC = 3,            /* malformed genome / length mismatch */
  CELLNAS_ERR_RANGE = 4,            /* value does not fit a genome field */
  CELLNAS_ERR_IO = 5,               /* file could not be read or written */
  CELLNAS_ERR_ABORTED = 6,          /* run stopped by the evaluator error policy */
  CELLNAS_ERR_TRANSPORT = 7,        /* worker process communication failure */
  CELLNAS_ERR_INTERNAL = 8
} cellnas_status;

typedef enum cellnas_trial_status {
  CELLNAS_TRIAL_OK = 0,
  CELLNAS_TRIAL_PENALIZED = 1,
  CELLNAS_TRIAL_FAILED = 2
} cellnas_trial_status;

typedef enum cellnas_format {
  CELLNAS_FORMAT_TABLE = 0,
  CELLNAS_FORMAT_CSV = 1,
  CELLNAS_FORMAT_JSON = 2
} cellnas_format;

typedef struct cellnas_config cellnas_config;
typedef struct cellnas_report cellnas_report;

typedef struct cellnas_trial {
  size_t trial_index;
  int conv_cells;
  int dense_cells;
  double fitness;
  int has_accuracy;
  double accuracy; /* fraction in [0, 1] when has_accuracy */
  uint64_t param_count;
  cellnas_trial_status status;
  int cached;
  double wall_time_seconds;
} cellnas_trial;

typedef struct cellnas_report_summary {
  size_t total_evaluations;
  size_t unique_evaluations;
  int has_best;
  size_t best_index;
  double total_wall_time_seconds;
  int completed;
} cellnas_report_summary;

CELLNAS_API const char* cellnas_last_error(void);
CELLNAS_API const char* cellnas_status_name(cellnas_status status);
CELLNAS_API void cellnas_string_free(char* s);

/* Canonical plan parameter count for (conv_cells, dense_cells). */
CELLNAS_API cellnas_status cellnas_count_params(int conv_cells, int dense_cells, uint64_t* out);
/* "4.2M", "0.58M": millions, truncated. */
CELLNAS_API cellnas_status cellnas_format_size(uint64_t params, char** out);
/* MSB-first unsigned fields: conv_bits for conv cells, then dense_bits. */
CELLNAS_API cellnas_status cellnas_decode_genome(const char* bits, int conv_bits, int dense_bits,
                                                 int* conv_cells, int* dense_cells);
CELLNAS_API cellnas_status cellnas_encode_architecture(int conv_cells, int dense_cells, int conv_bits,
                                                       int dense_bits, char** out);

CELLNAS_API cellnas_status cellnas_config_default(cellnas_config** out);
CELLNAS_API cellnas_status cellnas_config_load(const char* path, cellnas_config** out);
/* base_dir resolves relative paths inside the document; may be NULL. */
CELLNAS_API cellnas_status cellnas_config_parse(const char* json_text, const char* base_dir,
                                                cellnas_config** out);
CELLNAS_API void cellnas_config_free(cellnas_config* config);
CELLNAS_API cellnas_status cellnas_config_set_strategy(cellnas_config* config, const char* strategy);
CELLNAS_API cellnas_status cellnas_config_set_seed(cellnas_config* config, uint64_t seed);
/* surrogate[:k=v,...] | table:PATH | param_count | external:CMD [ARGS] */
CELLNAS_API cellnas_status cellnas_config_set_evaluator(cellnas_config* config, const char* spec);
CELLNAS_API cellnas_status cellnas_config_set_workers(cellnas_config* config, size_t workers);
CELLNAS_API cellnas_status cellnas_config_set_output(cellnas_config* config, const char* dir);
CELLNAS_API cellnas_status cellnas_config_get_strategy(const cellnas_config* config, char** out);
CELLNAS_API cellnas_status cellnas_config_get_seed(const cellnas_config* config, uint64_t* out);
/* *out is NULL when no output directory is configured. */
CELLNAS_API cellnas_status cellnas_config_get_output(const cellnas_config* config, char** out);
CELLNAS_API cellnas_status cellnas_config_genome_bits(const cellnas_config* config, int* conv_bits,
                                                      int* dense_bits);
CELLNAS_API cellnas_status cellnas_config_to_json(const cellnas_config* config, char** out);

/* Runs the configured search. Writes the run directory when an output
 * directory is configured. */
CELLNAS_API cellnas_status cellnas_run(const cellnas_config* config, cellnas_report** out);
/* Rebuilds a report from a run directory or a trials.jsonl file. */
CELLNAS_API cellnas_status cellnas_report_load(const char* path, cellnas_report** out);
CELLNAS_API void cellnas_report_free(cellnas_report* report);
CELLNAS_API cellnas_status cellnas_report_summary_get(const cellnas_report* report,
                                                      cellnas_report_summary* out);
CELLNAS_API cellnas_status cellnas_report_trial(const cellnas_report* report, size_t index,
                                                cellnas_trial* out);
CELLNAS_API cellnas_status cellnas_report_strategy(const cellnas_report* report, char** out);
/* "conv dense size accuracy" of the best trial, or "—" without one. */
CELLNAS_API cellnas_status cellnas_report_best_row(const cellnas_report* report, char** out);
CELLNAS_API cellnas_status cellnas_report_render(const cellnas_report* report, cellnas_format format,
                                                 char** out);
CELLNAS_API cellnas_status cellnas_compare(const cellnas_report* const* reports, size_t count,
                                           char** out);

#ifdef __cplusplus
}
#endif

#endif /* CELLNAS_CELLNAS_H */
