// Command-line front end. Talks to the library only through the C API.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cellnas/cellnas.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAbort = 1;
constexpr int kExitUsage = 2;

struct StringDeleter {
  void operator()(char* s) const { cellnas_string_free(s); }
};
using OwnedString = std::unique_ptr<char, StringDeleter>;

struct ConfigDeleter {
  void operator()(cellnas_config* c) const { cellnas_config_free(c); }
};
struct ReportDeleter {
  void operator()(cellnas_report* r) const { cellnas_report_free(r); }
};
using Config = std::unique_ptr<cellnas_config, ConfigDeleter>;
using Report = std::unique_ptr<cellnas_report, ReportDeleter>;

// Thrown to unwind with a specific exit code after printing a message.
struct ExitError {
  int code;
  std::string message;
};

int exit_code_for(cellnas_status status) {
  switch (status) {
    case CELLNAS_OK: return kExitOk;
    case CELLNAS_ERR_ABORTED:
    case CELLNAS_ERR_TRANSPORT:
    case CELLNAS_ERR_INTERNAL: return kExitAbort;
    default: return kExitUsage;
  }
}

void check(cellnas_status status, const std::string& context) {
  if (status == CELLNAS_OK) return;
  throw ExitError{exit_code_for(status), context + ": " + cellnas_last_error()};
}

std::string take(char* s) {
  OwnedString owned(s);
  return owned ? std::string(owned.get()) : std::string();
}

struct SearchArgs {
  std::string strategy;
  std::string config;
  std::string evaluator;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> workers;
};

int do_search(const SearchArgs& args) {
  cellnas_config* raw = nullptr;
  check(cellnas_config_load(args.config.c_str(), &raw), "cannot load config");
  Config config(raw);
  if (!args.strategy.empty()) check(cellnas_config_set_strategy(config.get(), args.strategy.c_str()), "--strategy");
  if (!args.evaluator.empty()) check(cellnas_config_set_evaluator(config.get(), args.evaluator.c_str()), "--evaluator");
  if (args.seed) check(cellnas_config_set_seed(config.get(), *args.seed), "--seed");
  if (args.workers) check(cellnas_config_set_workers(config.get(), *args.workers), "--workers");
  if (!args.out.empty()) check(cellnas_config_set_output(config.get(), args.out.c_str()), "--out");

  char* out_dir = nullptr;
  check(cellnas_config_get_output(config.get(), &out_dir), "config");
  std::string out = take(out_dir);
  if (out.empty()) {
    char* strategy = nullptr;
    check(cellnas_config_get_strategy(config.get(), &strategy), "config");
    std::uint64_t seed = 0;
    check(cellnas_config_get_seed(config.get(), &seed), "config");
    out = "runs/" + take(strategy) + "-seed" + std::to_string(seed);
    check(cellnas_config_set_output(config.get(), out.c_str()), "output directory");
  }

  cellnas_report* report_raw = nullptr;
  const cellnas_status status = cellnas_run(config.get(), &report_raw);
  if (status != CELLNAS_OK) {
    const int code = status == CELLNAS_ERR_CONFIG ? kExitUsage : kExitAbort;
    throw ExitError{code, std::string("search failed (") + cellnas_status_name(status) +
                              "): " + cellnas_last_error() + "\npartial results kept in " + out};
  }
  Report report(report_raw);
  char* row = nullptr;
  check(cellnas_report_best_row(report.get(), &row), "report");
  cellnas_report_summary summary{};
  check(cellnas_report_summary_get(report.get(), &summary), "report");
  std::cout << take(row) << "\n";
  std::cerr << "wrote " << out << " (" << summary.total_evaluations << " trials, "
            << summary.unique_evaluations << " unique evaluations)\n";
  return kExitOk;
}

Report load_report(const std::string& path) {
  cellnas_report* raw = nullptr;
  check(cellnas_report_load(path.c_str(), &raw), "cannot load run " + path);
  return Report(raw);
}

int do_compare(const std::vector<std::string>& runs, const std::string& out_path) {
  std::vector<Report> reports;
  std::vector<const cellnas_report*> views;
  for (const auto& r : runs) {
    reports.push_back(load_report(r));
    views.push_back(reports.back().get());
  }
  char* doc = nullptr;
  check(cellnas_compare(views.data(), views.size(), &doc), "compare");
  const std::string text = take(doc);
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw ExitError{kExitUsage, "cannot write " + out_path};
    out << text;
  }
  std::cout << text;
  return kExitOk;
}

int do_report(const std::string& run, const std::string& format) {
  Report report = load_report(run);
  const cellnas_format fmt = format == "csv"    ? CELLNAS_FORMAT_CSV
                             : format == "json" ? CELLNAS_FORMAT_JSON
                                                : CELLNAS_FORMAT_TABLE;
  char* text = nullptr;
  check(cellnas_report_render(report.get(), fmt, &text), "report");
  std::cout << take(text);
  return kExitOk;
}

int do_count_params(int conv, int dense) {
  std::uint64_t n = 0;
  check(cellnas_count_params(conv, dense, &n), "count-params");
  char* size = nullptr;
  check(cellnas_format_size(n, &size), "count-params");
  std::cout << n << " (" << take(size) << ")\n";
  return kExitOk;
}

int do_decode(const std::string& genome, const std::string& config_path) {
  int conv_bits = 4;
  int dense_bits = 4;
  if (!config_path.empty()) {
    cellnas_config* raw = nullptr;
    check(cellnas_config_load(config_path.c_str(), &raw), "cannot load config");
    Config config(raw);
    check(cellnas_config_genome_bits(config.get(), &conv_bits, &dense_bits), "config");
  }
  int conv = 0;
  int dense = 0;
  check(cellnas_decode_genome(genome.c_str(), conv_bits, dense_bits, &conv, &dense), "decode");
  std::cout << "conv=" << conv << " dense=" << dense << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Architecture search over conv/dense cell counts: grid, random and genetic strategies"};
  app.name("cellnas");
  app.require_subcommand(1);

  SearchArgs search_args;
  auto* search = app.add_subcommand("search", "Run one search and print the best row (conv dense size accuracy)");
  search->add_option("--strategy", search_args.strategy, "Search strategy (overrides config)")
      ->check(CLI::IsMember({"grid", "random", "ga"}));
  search->add_option("--config", search_args.config, "Run configuration file (JSON)")->required();
  search->add_option("--evaluator", search_args.evaluator,
                     "surrogate[:k=v,...] | table:PATH | param_count | external:CMD [ARGS]");
  search->add_option("--seed", search_args.seed, "Random seed (overrides config)");
  search->add_option("--out", search_args.out, "Output directory (overrides config)");
  search->add_option("--workers", search_args.workers, "Concurrent evaluations (overrides config)")
      ->check(CLI::PositiveNumber);

  std::vector<std::string> compare_runs;
  std::string compare_out;
  auto* cmp = app.add_subcommand("compare", "Render results and a summary for several runs");
  cmp->add_option("runs", compare_runs, "Run directories or trial logs")->required();
  cmp->add_option("--out", compare_out, "Also write the comparison document to this file");

  std::string report_run;
  std::string report_format = "table";
  auto* rep = app.add_subcommand("report", "Render one run's results from its trial log");
  rep->add_option("run", report_run, "Run directory or trial log")->required();
  rep->add_option("--format", report_format, "table, csv or json")
      ->check(CLI::IsMember({"table", "csv", "json"}));

  int conv = 0;
  int dense = 0;
  auto* count = app.add_subcommand("count-params", "Parameter count and size string of the canonical plan");
  count->add_option("--conv", conv, "Number of convolutional cells")->required()->check(CLI::Range(0, std::numeric_limits<int>::max()));
  count->add_option("--dense", dense, "Number of dense cells")->required()->check(CLI::Range(0, std::numeric_limits<int>::max()));

  std::string genome;
  std::string decode_config;
  auto* decode = app.add_subcommand("decode", "Decode a genome bitstring into cell counts");
  decode->add_option("--genome", genome, "Bitstring over {0,1}, MSB first")->required();
  decode->add_option("--config", decode_config, "Take the genome layout from this config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*search) return do_search(search_args);
    if (*cmp) return do_compare(compare_runs, compare_out);
    if (*rep) return do_report(report_run, report_format);
    if (*count) return do_count_params(conv, dense);
    if (*decode) return do_decode(genome, decode_config);
  } catch (const ExitError& e) {
    std::cerr << "cellnas: " << e.message << "\n";
    return e.code;
  }
  return kExitUsage;
}
