// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "harness.hpp"
#include "report.hpp"
#include "rng.hpp"
#include "space.hpp"
#include "strategies.hpp"

using namespace cellnas;
using nlohmann::json;

namespace {

const std::filesystem::path kSource = CELLNAS_SOURCE_DIR;

// Collects failure details for one criterion.
struct Check {
  std::vector<std::string> failures;
  std::string note;

  void expect(bool ok, const std::string& what) {
    if (!ok && failures.size() < 5) failures.push_back(what);
    if (!ok && failures.size() == 5) failures.push_back("...");
  }
};

int g_failed = 0;

void criterion(const char* name, double budget_seconds, const std::function<void(Check&)>& body) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.failures.push_back(std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > budget_seconds) {
    std::ostringstream os;
    os << "took " << secs << "s, budget " << budget_seconds << "s";
    c.failures.push_back(os.str());
  }
  const bool pass = c.failures.empty();
  g_failed += !pass;
  std::printf("%s  %-46s %7.3fs%s%s\n", pass ? "PASS" : "FAIL", name, secs, c.note.empty() ? "" : "  ",
              c.note.c_str());
  for (const auto& f : c.failures) std::printf("      %s\n", f.c_str());
  std::fflush(stdout);
}

std::string cell(const CandidateArchitecture& c) { return to_string(c); }

// Binary oracle: MSB-first bits of n in `width` characters.
std::string bits_of(unsigned n, int width) {
  std::string s;
  for (int i = width - 1; i >= 0; --i) s += ((n >> i) & 1u) ? '1' : '0';
  return s;
}

json strip_timing(json j) {
  j.erase("total_wall_time_seconds");
  for (auto& t : j["trials"]) {
    t.erase("wall_time_seconds");
    t.erase("timestamp");
  }
  return j;
}

RunConfig surrogate_run(const std::string& strategy, std::uint64_t seed) {
  RunConfig c;
  c.strategy = strategy;
  c.seed = seed;
  c.space.conv_domain = IntDomain::range("conv", 0, 15);
  c.space.dense_domain = IntDomain::range("dense", 0, 15);
  c.random.iterations = 12;
  c.ga.population_size = 4;
  c.ga.generations = 5;
  c.evaluator.kind = EvaluatorKind::surrogate;
  c.evaluator.surrogate.noise_sd = 0.02;
  return c;
}

}  // namespace

int main() {
  criterion("Table 1 size reproduction", 1.0, [](Check& c) {
    const std::vector<std::pair<CandidateArchitecture, std::string>> table{
        {{0, 1}, "4.2M"},  {{0, 2}, "4.4M"},  {{2, 1}, "0.58M"}, {{2, 2}, "0.84M"},
        {{3, 1}, "0.23M"}, {{3, 2}, "0.49M"}, {{4, 1}, "0.16M"}, {{4, 2}, "0.43M"}};
    for (const auto& [arch, size] : table) {
      const auto got = format_size_millions(count_params(build_plan(arch)));
      c.expect(got == size, cell(arch) + ": " + got + " != " + size);
    }
  });

  criterion("Grid exhaustiveness", 1.0, [](Check& c) {
    const auto r = run(load_run_config(kSource / "configs" / "grid-4x2.json"));
    c.expect(r.trials.size() == 8, "trial count " + std::to_string(r.trials.size()));
    std::set<CandidateArchitecture> seen;
    for (const auto& t : r.trials) seen.insert(t.candidate);
    for (int conv : {0, 2, 3, 4}) {
      for (int dense : {1, 2}) c.expect(seen.count({conv, dense}) == 1, "missing " + cell({conv, dense}));
    }
    const auto* best = r.best_trial();
    c.expect(best && best->candidate == CandidateArchitecture{2, 2}, "best is not (2,2)");
    c.expect(best && best->accuracy && format_percent(*best->accuracy) == "83", "best accuracy is not 83");
    c.note = "best " + best_row(r);
  });

  criterion("Genome codec", 1.0, [](Check& c) {
    const GenomeLayout layout(4, 4);
    for (unsigned n = 0; n < 256; ++n) {
      const auto g = Genome::parse(bits_of(n, 8));
      const auto arch = decode_genome(g, layout);
      c.expect(arch == CandidateArchitecture{static_cast<int>(n >> 4), static_cast<int>(n & 15u)},
               "decode " + g.to_string());
      c.expect(encode_architecture(arch, layout) == g, "round trip " + g.to_string());
    }
    c.expect(decode_genome(Genome::parse("10100001"), layout) == CandidateArchitecture{10, 1},
             "decode(10100001) != (10,1)");
  });

  criterion("Random search bounds/uniformity/determinism", 5.0, [](Check& c) {
    RandomConfig cfg;
    cfg.conv = IntDomain::range("conv", 2, 8);
    cfg.dense = IntDomain::range("dense", 1, 4);
    cfg.n_iterations = 10000;
    cfg.seed = 2024;
    const auto samples = random_sample(cfg);
    c.expect(samples.size() == 10000, "sample count");
    std::map<CandidateArchitecture, int> freq;
    for (const auto& s : samples) {
      c.expect(s.conv_cells >= 2 && s.conv_cells <= 8 && s.dense_cells >= 1 && s.dense_cells <= 4,
               "out of bounds " + cell(s));
      ++freq[s];
    }
    const double p = 1.0 / 28.0;
    const double mean = 10000 * p;
    const double sigma = std::sqrt(10000 * p * (1 - p));
    double worst = 0;
    for (int conv = 2; conv <= 8; ++conv) {
      for (int dense = 1; dense <= 4; ++dense) {
        const double dev = std::abs(freq[{conv, dense}] - mean) / sigma;
        worst = std::max(worst, dev);
        c.expect(dev <= 3.0, cell({conv, dense}) + " deviates " + std::to_string(dev) + " sigma");
      }
    }
    c.expect(random_sample(cfg) == samples, "same seed gave a different sequence");
    cfg.seed = 2025;
    c.expect(random_sample(cfg) != samples, "different seeds gave the same sequence");
    std::ostringstream os;
    os.precision(2);
    os << "max deviation " << std::fixed << worst << " sigma";
    c.note = os.str();
  });

  criterion("GA accounting and elitism", 5.0, [](Check& c) {
    struct Counting final : Evaluator {
      std::size_t calls = 0;
      std::string kind() const override { return "counting"; }
      EvalResult evaluate(const CandidateArchitecture& a, const Budget&) override {
        ++calls;
        EvalResult r;
        r.fitness = surrogate_fitness(a, {}, 0);
        return r;
      }
    };
    GAConfig cfg;
    cfg.population_size = 2;
    cfg.generations = 8;
    cfg.seed = 0;
    Counting e;
    GeneticSearch ga(cfg, GenomeLayout(4, 4));
    RunOptions o;
    o.cache = false;
    const auto r = run_search(ga, e, o);
    c.expect(e.calls == 18, "evaluator called " + std::to_string(e.calls) + " times");
    c.expect(r.total_evaluations == 18, "total_evaluations " + std::to_string(r.total_evaluations));

    SurrogateParams noisy;
    noisy.noise_sd = 0.05;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      cfg.seed = seed;
      GeneticSearch s(cfg, GenomeLayout(4, 4));
      double best_so_far = -INFINITY;
      for (auto batch = s.ask(); !batch.empty(); batch = s.ask()) {
        std::vector<double> fit;
        for (const auto& prop : batch) fit.push_back(surrogate_fitness(prop.candidate, noisy, seed));
        s.tell(fit);
        const double gen_best = *std::max_element(fit.begin(), fit.end());
        c.expect(gen_best >= best_so_far, "seed " + std::to_string(seed) + ": generation best decreased");
        best_so_far = std::max(best_so_far, gen_best);
      }
      c.expect(s.best() && s.best()->fitness == best_so_far, "seed " + std::to_string(seed) + ": best-ever mismatch");
    }
  });

  criterion("Optimizer sanity", 30.0, [](Check& c) {
    Rng rng(20240501);
    for (int domain = 0; domain < 20; ++domain) {
      auto draw_members = [&](const char* name) {
        std::set<int> values;
        const int n = static_cast<int>(rng.uniform_int(2, 8));
        while (static_cast<int>(values.size()) < n) values.insert(static_cast<int>(rng.uniform_int(0, 15)));
        return IntDomain::enumerated(name, std::vector<int>(values.begin(), values.end()));
      };
      GridConfig grid;
      grid.conv = draw_members("conv");
      grid.dense = draw_members("dense");
      SurrogateParams p;
      p.optimum_conv = grid.conv.member_at(rng.uniform_int(0, grid.conv.size() - 1));
      p.optimum_dense = grid.dense.member_at(rng.uniform_int(0, grid.dense.size() - 1));
      p.curvature_conv = 0.001 + 0.05 * rng.uniform01();
      p.curvature_dense = 0.001 + 0.05 * rng.uniform01();
      p.peak = 0.5 + 0.4 * rng.uniform01();

      // Brute force over the domain is the oracle.
      CandidateArchitecture oracle{-1, -1};
      double oracle_f = -INFINITY;
      for (int conv : grid.conv.members()) {
        for (int dense : grid.dense.members()) {
          const double f = surrogate_fitness({conv, dense}, p, 0);
          if (f > oracle_f) oracle_f = f, oracle = {conv, dense};
        }
      }
      SurrogateEvaluator e(p);
      auto s = make_grid_search(grid);
      const auto r = run_search(*s, e, {});
      const bool ok = r.best_trial() && r.best_trial()->candidate == oracle &&
                      oracle == CandidateArchitecture{p.optimum_conv, p.optimum_dense};
      c.expect(ok, "domain " + std::to_string(domain) + ": grid missed " + cell(oracle));
    }

    const CandidateArchitecture optimum{2, 2};
    int found = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      GAConfig cfg;
      cfg.population_size = 8;
      cfg.generations = 20;
      cfg.seed = seed;
      GeneticSearch ga(cfg, GenomeLayout(4, 4));
      SurrogateEvaluator e({});
      const auto r = run_search(ga, e, {});
      found += r.best_trial() && r.best_trial()->candidate == optimum;
    }
    c.expect(found >= 90, "GA found the optimum in " + std::to_string(found) + "/100 seeds, need >= 90");
    c.note = "grid 20/20 domains, GA " + std::to_string(found) + "/100 seeds";
  });

  criterion("Cache transparency and log replay", 30.0, [](Check& c) {
    const auto root = std::filesystem::temp_directory_path() / "cellnas-acceptance";
    std::filesystem::remove_all(root);
    std::size_t saved = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const std::string strategy = seed % 2 ? "random" : "ga";
      auto cfg = surrogate_run(strategy, seed);
      cfg.cache = true;
      const auto dir_on = root / ("on-" + std::to_string(seed));
      const auto on = run(cfg, dir_on);
      cfg.cache = false;
      const auto dir_off = root / ("off-" + std::to_string(seed));
      const auto off = run(cfg, dir_off);
      const std::string tag = strategy + " seed " + std::to_string(seed);

      c.expect(on.best_trial() && off.best_trial(), tag + ": no best");
      if (on.best_trial() && off.best_trial()) {
        c.expect(on.best_trial()->candidate == off.best_trial()->candidate, tag + ": best candidate differs");
        c.expect(on.best_trial()->fitness == off.best_trial()->fitness, tag + ": best fitness differs");
      }
      c.expect(on.total_evaluations == off.total_evaluations, tag + ": trial counts differ");
      saved += off.unique_evaluations - on.unique_evaluations;

      for (const auto& [dir, report] : {std::pair{dir_on, &on}, std::pair{dir_off, &off}}) {
        const auto back = load_run(dir / kTrialLogFile);
        c.expect(strip_timing(report_to_json(back)) == strip_timing(report_to_json(*report)),
                 tag + ": log replay differs");
      }
    }
    std::filesystem::remove_all(root);
    c.note = std::to_string(saved) + " evaluations served from cache";
  });

  std::printf("%s\n", g_failed ? "ACCEPTANCE: FAIL" : "ACCEPTANCE: PASS");
  return g_failed ? 1 : 0;
}
