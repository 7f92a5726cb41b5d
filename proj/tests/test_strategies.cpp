#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "error.hpp"
#include "strategies.hpp"

using namespace cellnas;

namespace {

// Runs a strategy to completion against f; returns every proposal in order.
std::vector<Proposal> drive(SearchStrategy& s, const std::function<double(const CandidateArchitecture&)>& f) {
  std::vector<Proposal> all;
  for (auto batch = s.ask(); !batch.empty(); batch = s.ask()) {
    std::vector<double> fit;
    for (const auto& p : batch) fit.push_back(f(p.candidate));
    all.insert(all.end(), batch.begin(), batch.end());
    s.tell(fit);
  }
  return all;
}

std::vector<Individual> with_fitness(std::initializer_list<double> f) {
  std::vector<Individual> pop;
  for (double x : f) pop.push_back({Genome::parse("00000000"), x});
  return pop;
}

}  // namespace

TEST_CASE("grid_enumerate examples") {
  GridConfig g;
  g.conv = IntDomain::enumerated("conv", {0, 2, 3, 4});
  g.dense = IntDomain::enumerated("dense", {1, 2});
  const auto all = grid_enumerate(g);
  REQUIRE(all.size() == 8);
  CHECK(all.front() == CandidateArchitecture{0, 1});
  CHECK(all[1] == CandidateArchitecture{0, 2});
  CHECK(all.back() == CandidateArchitecture{4, 2});
  CHECK(std::set<CandidateArchitecture>(all.begin(), all.end()).size() == 8);

  g.conv = IntDomain::enumerated("conv", {5});
  g.dense = IntDomain::enumerated("dense", {1});
  CHECK(grid_enumerate(g) == std::vector<CandidateArchitecture>{{5, 1}});

  g.conv = IntDomain::enumerated("conv", {1, 2});
  g.dense = IntDomain::enumerated("dense", {1, 2, 3});
  CHECK(grid_enumerate(g).size() == 6);
}

TEST_CASE("grid_enumerate rejects range domains") {
  GridConfig g;
  g.conv = IntDomain::range("conv", 0, 3);
  CHECK_THROWS_AS(grid_enumerate(g), ConfigError);
}

TEST_CASE("grid covers every combination exactly once") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> cv, dv;
    for (int v = 0; v < 16; ++v) {
      if (rng.bernoulli(0.4)) cv.push_back(v);
      if (rng.bernoulli(0.4)) dv.push_back(v);
    }
    if (cv.empty()) cv.push_back(3);
    if (dv.empty()) dv.push_back(1);
    GridConfig g{IntDomain::enumerated("conv", cv), IntDomain::enumerated("dense", dv)};
    const auto all = grid_enumerate(g);
    CHECK(all.size() == cv.size() * dv.size());
    std::set<CandidateArchitecture> seen(all.begin(), all.end());
    CHECK(seen.size() == all.size());
    for (int c : cv) {
      for (int d : dv) CHECK(seen.contains({c, d}));
    }
  }
}

TEST_CASE("random_sample: empty, bounded, covering, deterministic") {
  RandomConfig r;
  r.n_iterations = 0;
  CHECK(random_sample(r).empty());

  r.n_iterations = 10'000;
  r.seed = 42;
  const auto a = random_sample(r);
  REQUIRE(a.size() == 10'000);
  std::set<CandidateArchitecture> cells;
  for (const auto& c : a) {
    CHECK(c.conv_cells >= 2);
    CHECK(c.conv_cells <= 8);
    CHECK(c.dense_cells >= 1);
    CHECK(c.dense_cells <= 4);
    cells.insert(c);
  }
  CHECK(cells.size() == 28);
  CHECK(random_sample(r) == a);
  r.seed = 43;
  CHECK(random_sample(r) != a);
}

TEST_CASE("random_sample is uniform within three standard deviations") {
  RandomConfig r;
  r.n_iterations = 10'000;
  r.seed = 5;
  std::map<CandidateArchitecture, int> counts;
  for (const auto& c : random_sample(r)) ++counts[c];
  const double p = 1.0 / 28.0;
  const double mean = 10'000 * p;
  const double sd = std::sqrt(10'000 * p * (1 - p));
  for (const auto& [cell, n] : counts) CHECK(std::abs(n - mean) <= 3 * sd);
}

TEST_CASE("random_sample dedup avoids repeats until the space is exhausted") {
  RandomConfig r;
  r.n_iterations = 28;
  r.dedup = true;
  r.seed = 3;
  const auto a = random_sample(r);
  CHECK(std::set<CandidateArchitecture>(a.begin(), a.end()).size() == 28);

  r.n_iterations = 40;  // more than the 28 cells: retry cap lets duplicates through
  r.dedup_retry_cap = 50;
  CHECK(random_sample(r).size() == 40);
}

TEST_CASE("random_sample over an enumerated domain draws only members") {
  RandomConfig r;
  r.conv = IntDomain::enumerated("conv", {0, 2, 3, 4});
  r.dense = IntDomain::enumerated("dense", {1, 2});
  r.n_iterations = 500;
  for (const auto& c : random_sample(r)) {
    CHECK(r.conv.contains(c.conv_cells));
    CHECK(r.dense.contains(c.dense_cells));
  }
}

TEST_CASE("ga_init bit probabilities") {
  GAConfig c;
  c.population_size = 10'000;
  c.elitism = 1;
  Rng rng(1);
  c.init_bit_probability = 0.0;
  for (const auto& ind : ga_init(c, rng)) CHECK(ind.genome.to_string() == "00000000");
  c.init_bit_probability = 1.0;
  for (const auto& ind : ga_init(c, rng)) CHECK(ind.genome.to_string() == "11111111");
  c.init_bit_probability = 0.5;
  const auto pop = ga_init(c, rng);
  double ones = 0;
  for (const auto& ind : pop) {
    CHECK_FALSE(ind.fitness.has_value());
    for (auto b : ind.genome.bits()) ones += b;
  }
  CHECK(ones / (10'000.0 * 8) == doctest::Approx(0.5).epsilon(0.04));
  CHECK(std::abs(ones / 80'000.0 - 0.5) <= 0.02);
}

TEST_CASE("ga_init is seed-deterministic") {
  GAConfig c;
  Rng a(9), b(9);
  const auto pa = ga_init(c, a);
  const auto pb = ga_init(c, b);
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].genome == pb[i].genome);
}

TEST_CASE("tournament: dominant fitness and tie rule") {
  Rng rng(0);
  const auto pop = with_fitness({1.0, 0.0});
  // Whatever is drawn, individual 0 wins whenever it is in the tournament;
  // with many repetitions it must win most of the time and 1 only when drawn twice.
  for (int i = 0; i < 200; ++i) {
    const auto w = ga_tournament(pop, 2, rng);
    CHECK((w == 0 || w == 1));
  }
  // A tournament larger than the population nearly always contains both.
  std::size_t wins = 0;
  for (int i = 0; i < 200; ++i) wins += ga_tournament(pop, 64, rng) == 0;
  CHECK(wins == 200);

  const auto tie = with_fitness({0.5, 0.5});
  for (int i = 0; i < 200; ++i) {
    const auto w = ga_tournament(tie, 64, rng);
    CHECK(w == 0);
  }
}

TEST_CASE("tournament rejects unevaluated individuals") {
  Rng rng(0);
  std::vector<Individual> pop{{Genome::parse("0000"), 1.0}, {Genome::parse("1111"), std::nullopt}};
  CHECK_THROWS_AS(ga_tournament(pop, 2, rng), ContractError);
  CHECK_THROWS_AS(ga_select(pop, 2, rng), ContractError);
}

TEST_CASE("tournament win rate matches brute-force enumeration of draws") {
  // Oracle: enumerate every equally likely ordered draw of size k over the
  // population, apply "higher fitness wins, lower index on ties".
  const std::vector<double> fitness{2.0, 1.0};
  const std::size_t k = 2;
  std::size_t outcomes = 0;
  std::size_t better_wins = 0;
  for (std::size_t code = 0; code < (1u << k); ++code) {
    std::size_t winner = code & 1u;
    for (std::size_t j = 1; j < k; ++j) {
      const std::size_t pick = (code >> j) & 1u;
      if (fitness[pick] > fitness[winner] || (fitness[pick] == fitness[winner] && pick < winner)) winner = pick;
    }
    ++outcomes;
    better_wins += winner == 0;
  }
  const double expected = static_cast<double>(better_wins) / static_cast<double>(outcomes);
  CHECK(expected == doctest::Approx(0.75));

  Rng rng(2024);
  const auto pop = with_fitness({2.0, 1.0});
  std::size_t wins = 0;
  for (int i = 0; i < 10'000; ++i) wins += ga_tournament(pop, k, rng) == 0;
  CHECK(std::abs(wins / 10'000.0 - expected) <= 0.02);
}

TEST_CASE("crossover examples") {
  const auto a = Genome::parse("11110000");
  const auto b = Genome::parse("00001111");
  const auto [x, y] = crossover_at(a, b, 4);
  CHECK(x.to_string() == "11111111");
  CHECK(y.to_string() == "00000000");

  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const auto [c, d] = ga_crossover(a, b, 0.0, rng);
    CHECK(c == a);
    CHECK(d == b);
  }
  CHECK_THROWS_AS(ga_crossover(a, Genome::parse("0101"), 1.0, rng), CodecError);
  CHECK_THROWS_AS(crossover_at(a, Genome::parse("0101"), 2), CodecError);
}

TEST_CASE("crossover preserves the per-position bit multiset for every cut and parent pair") {
  for (int ga = 0; ga < 256; ++ga) {
    for (int gb = 0; gb < 256; ++gb) {
      std::vector<std::uint8_t> va, vb;
      for (int i = 7; i >= 0; --i) {
        va.push_back(static_cast<std::uint8_t>((ga >> i) & 1));
        vb.push_back(static_cast<std::uint8_t>((gb >> i) & 1));
      }
      const Genome a(va), b(vb);
      for (std::size_t cut = 1; cut <= 7; ++cut) {
        const auto [x, y] = crossover_at(a, b, cut);
        REQUIRE(x.size() == 8);
        REQUIRE(y.size() == 8);
        for (std::size_t i = 0; i < 8; ++i) {
          if (a[i] + b[i] != x[i] + y[i]) FAIL("multiset changed at " << i);
        }
      }
    }
  }
}

TEST_CASE("random crossover cuts stay inside [1, L-1]") {
  Rng rng(77);
  const auto a = Genome::parse("11111111");
  const auto b = Genome::parse("00000000");
  std::set<std::size_t> cuts;
  for (int i = 0; i < 2'000; ++i) {
    const auto [x, y] = ga_crossover(a, b, 1.0, rng);
    const auto s = x.to_string();
    const auto cut = s.find('0');
    REQUIRE(cut != std::string::npos);
    CHECK(s.find('1', cut) == std::string::npos);
    cuts.insert(cut);
  }
  CHECK(cuts == std::set<std::size_t>{1, 2, 3, 4, 5, 6, 7});
}

TEST_CASE("mutation examples and flip statistics") {
  Rng rng(3);
  const auto g = Genome::parse("10100001");
  CHECK(ga_mutate(g, 0.0, rng) == g);
  CHECK(ga_mutate(g, 1.0, rng).to_string() == "01011110");

  double flips = 0;
  for (int i = 0; i < 10'000; ++i) {
    const auto m = ga_mutate(g, 1.0 / 8.0, rng);
    REQUIRE(m.size() == 8);
    for (std::size_t k = 0; k < 8; ++k) flips += m[k] != g[k];
  }
  CHECK(std::abs(flips / 10'000.0 - 1.0) <= 0.05);
}

TEST_CASE("GAConfig validation") {
  GAConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.effective_mutation_rate() == doctest::Approx(0.125));
  auto bad = c;
  bad.population_size = 1;
  bad.elitism = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.elitism = 2;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.crossover_probability = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.mutation_rate = -0.1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.init_bit_probability = 2;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(GeneticSearch(c, GenomeLayout(4, 5)), ConfigError);
}

TEST_CASE("GA with zero generations evaluates only the initial population") {
  GAConfig c;
  c.population_size = 6;
  c.generations = 0;
  GeneticSearch ga(c, GenomeLayout{});
  const auto all = drive(ga, [](const CandidateArchitecture& a) { return -double(a.conv_cells); });
  CHECK(all.size() == 6);
  for (const auto& p : all) CHECK(*p.generation == 0);
}

TEST_CASE("GA with population 2 and 8 generations proposes exactly 18 candidates") {
  GAConfig c;
  c.seed = 17;
  GeneticSearch ga(c, GenomeLayout{});
  const auto all = drive(ga, [](const CandidateArchitecture& a) { return double(a.conv_cells + a.dense_cells); });
  CHECK(all.size() == 18);
  CHECK(*all.back().generation == 8);
}

TEST_CASE("GA: elitism keeps the generation best non-decreasing; genome length invariant") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    GAConfig c;
    c.population_size = 4;
    c.generations = 12;
    c.seed = seed;
    c.mutation_rate = 0.3;
    GeneticSearch ga(c, GenomeLayout{});
    const auto all = drive(ga, [](const CandidateArchitecture& a) {
      return -std::abs(a.conv_cells - 7.0) - std::abs(a.dense_cells - 3.0);
    });
    for (const auto& p : all) CHECK(p.genome->size() == 8);
    const auto& gb = ga.generation_best();
    REQUIRE(gb.size() == 13);
    for (std::size_t g = 1; g < gb.size(); ++g) CHECK(gb[g] >= gb[g - 1]);
    REQUIRE(ga.best().has_value());
    CHECK(*ga.best()->fitness == gb.back());
  }
}

TEST_CASE("GA is a pure function of config and responses") {
  GAConfig c;
  c.population_size = 5;
  c.generations = 6;
  c.seed = 1234;
  auto f = [](const CandidateArchitecture& a) { return std::sin(a.conv_cells * 1.3 + a.dense_cells); };
  GeneticSearch a(c, GenomeLayout{}), b(c, GenomeLayout{});
  const auto pa = drive(a, f);
  const auto pb = drive(b, f);
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(*pa[i].genome == *pb[i].genome);
}

TEST_CASE("GeneticSearch enforces ask/tell alternation") {
  GeneticSearch ga(GAConfig{}, GenomeLayout{});
  CHECK_THROWS_AS(ga.tell(std::vector<double>{1, 2}), ContractError);
  const auto batch = ga.ask();
  CHECK_THROWS_AS(ga.ask(), ContractError);
  CHECK_THROWS_AS(ga.tell(std::vector<double>{1}), ContractError);
  CHECK_NOTHROW(ga.tell(std::vector<double>{1, 2}));
}

TEST_CASE("ListSearch proposes once") {
  ListSearch s("grid", {{1, 1}, {2, 2}});
  CHECK(s.ask().size() == 2);
  s.tell(std::vector<double>{0, 0});
  CHECK(s.ask().empty());
}
