#include "strategies.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "error.hpp"

namespace cellnas {

double GAConfig::effective_mutation_rate() const {
  if (mutation_rate) return *mutation_rate;
  return genome_length == 0 ? 0.0 : 1.0 / static_cast<double>(genome_length);
}

void GAConfig::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (population_size < 2) throw ConfigError("ga population_size must be >= 2");
  if (genome_length < 1) throw ConfigError("ga genome_length must be >= 1");
  if (tournament_size < 1) throw ConfigError("ga tournament_size must be >= 1");
  if (elitism >= population_size) throw ConfigError("ga elitism must be < population_size");
  if (!prob(init_bit_probability)) throw ConfigError("ga init_bit_probability must be in [0,1]");
  if (!prob(crossover_probability)) throw ConfigError("ga crossover_probability must be in [0,1]");
  if (!prob(effective_mutation_rate())) throw ConfigError("ga mutation_rate must be in [0,1]");
}

std::vector<CandidateArchitecture> grid_enumerate(const GridConfig& config) {
  if (config.conv.is_range() || config.dense.is_range()) {
    throw ConfigError("grid search needs enumerated domains");
  }
  std::vector<CandidateArchitecture> out;
  out.reserve(config.conv.size() * config.dense.size());
  for (int c : config.conv.values()) {
    for (int d : config.dense.values()) out.push_back({c, d});
  }
  return out;
}

std::vector<CandidateArchitecture> random_sample(const RandomConfig& config) {
  Rng rng(config.seed);
  auto draw = [&] {
    const auto ci = rng.uniform_int(0, static_cast<std::int64_t>(config.conv.size()) - 1);
    const auto di = rng.uniform_int(0, static_cast<std::int64_t>(config.dense.size()) - 1);
    return CandidateArchitecture{config.conv.member_at(static_cast<std::size_t>(ci)),
                                 config.dense.member_at(static_cast<std::size_t>(di))};
  };
  std::vector<CandidateArchitecture> out;
  out.reserve(config.n_iterations);
  std::set<CandidateArchitecture> seen;
  for (std::size_t i = 0; i < config.n_iterations; ++i) {
    CandidateArchitecture c = draw();
    if (config.dedup) {
      for (std::size_t retry = 0; seen.contains(c) && retry < config.dedup_retry_cap; ++retry) {
        c = draw();
      }
      seen.insert(c);
    }
    out.push_back(c);
  }
  return out;
}

std::vector<Individual> ga_init(const GAConfig& config, Rng& rng) {
  std::vector<Individual> pop;
  pop.reserve(config.population_size);
  for (std::size_t i = 0; i < config.population_size; ++i) {
    std::vector<std::uint8_t> bits(config.genome_length);
    for (auto& b : bits) b = rng.bernoulli(config.init_bit_probability) ? 1 : 0;
    pop.push_back({Genome(std::move(bits)), std::nullopt});
  }
  return pop;
}

std::size_t ga_tournament(std::span<const Individual> population, std::size_t size, Rng& rng) {
  if (population.empty()) throw ContractError("tournament on an empty population");
  for (const auto& ind : population) {
    if (!ind.fitness) throw ContractError("tournament on an unevaluated individual");
  }
  std::size_t winner = 0;
  bool have = false;
  for (std::size_t i = 0; i < std::max<std::size_t>(size, 1); ++i) {
    const auto pick = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(population.size()) - 1));
    if (!have || *population[pick].fitness > *population[winner].fitness ||
        (*population[pick].fitness == *population[winner].fitness && pick < winner)) {
      winner = pick;
      have = true;
    }
  }
  return winner;
}

std::pair<std::size_t, std::size_t> ga_select(std::span<const Individual> population,
                                              std::size_t tournament_size, Rng& rng) {
  const auto first = ga_tournament(population, tournament_size, rng);
  const auto second = ga_tournament(population, tournament_size, rng);
  return {first, second};
}

std::pair<Genome, Genome> crossover_at(const Genome& a, const Genome& b, std::size_t cut) {
  if (a.size() != b.size()) throw CodecError("crossover of genomes with different lengths");
  if (cut > a.size()) throw RangeError("crossover cut beyond genome length");
  std::vector<std::uint8_t> x(a.bits().begin(), a.bits().begin() + static_cast<std::ptrdiff_t>(cut));
  std::vector<std::uint8_t> y(b.bits().begin(), b.bits().begin() + static_cast<std::ptrdiff_t>(cut));
  x.insert(x.end(), b.bits().begin() + static_cast<std::ptrdiff_t>(cut), b.bits().end());
  y.insert(y.end(), a.bits().begin() + static_cast<std::ptrdiff_t>(cut), a.bits().end());
  return {Genome(std::move(x)), Genome(std::move(y))};
}

std::pair<Genome, Genome> ga_crossover(const Genome& a, const Genome& b, double probability,
                                       Rng& rng) {
  if (a.size() != b.size()) throw CodecError("crossover of genomes with different lengths");
  if (a.size() < 2 || !rng.bernoulli(probability)) return {a, b};
  const auto cut = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(a.size()) - 1));
  return crossover_at(a, b, cut);
}

Genome ga_mutate(const Genome& genome, double rate, Rng& rng) {
  Genome out = genome;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (rng.bernoulli(rate)) out.flip(i);
  }
  return out;
}

// ---------------------------------------------------------------------------

ListSearch::ListSearch(std::string name, std::vector<CandidateArchitecture> candidates)
    : name_(std::move(name)), candidates_(std::move(candidates)) {}

std::vector<Proposal> ListSearch::ask() {
  if (asked_) return {};
  asked_ = true;
  std::vector<Proposal> out;
  out.reserve(candidates_.size());
  for (const auto& c : candidates_) out.push_back({c, std::nullopt, std::nullopt});
  return out;
}

void ListSearch::tell(std::span<const double> fitness) {
  if (fitness.size() != candidates_.size()) throw ContractError("tell with wrong batch size");
}

std::unique_ptr<SearchStrategy> make_grid_search(const GridConfig& config) {
  return std::make_unique<ListSearch>("grid", grid_enumerate(config));
}

std::unique_ptr<SearchStrategy> make_random_search(const RandomConfig& config) {
  return std::make_unique<ListSearch>("random", random_sample(config));
}

GeneticSearch::GeneticSearch(GAConfig config, GenomeLayout layout)
    : config_(std::move(config)), layout_(layout), rng_(config_.seed) {
  config_.validate();
  if (config_.genome_length != static_cast<std::size_t>(layout_.total_bits())) {
    throw ConfigError("ga genome_length " + std::to_string(config_.genome_length) +
                      " does not match genome layout of " + std::to_string(layout_.total_bits()) +
                      " bits");
  }
  population_ = ga_init(config_, rng_);
}

std::vector<Proposal> GeneticSearch::ask() {
  if (finished_) return {};
  if (awaiting_tell_) throw ContractError("ask before tell");
  awaiting_tell_ = true;
  std::vector<Proposal> out;
  out.reserve(population_.size());
  for (const auto& ind : population_) {
    out.push_back({decode_genome(ind.genome, layout_), ind.genome, generation_});
  }
  return out;
}

void GeneticSearch::tell(std::span<const double> fitness) {
  if (!awaiting_tell_) throw ContractError("tell without ask");
  if (fitness.size() != population_.size()) throw ContractError("tell with wrong batch size");
  awaiting_tell_ = false;
  double gen_best = fitness[0];
  for (std::size_t i = 0; i < population_.size(); ++i) {
    population_[i].fitness = fitness[i];
    gen_best = std::max(gen_best, fitness[i]);
    if (!best_ || fitness[i] > *best_->fitness) best_ = population_[i];
  }
  generation_best_.push_back(gen_best);
  if (generation_ >= config_.generations) {
    finished_ = true;
    return;
  }
  breed();
  ++generation_;
}

void GeneticSearch::breed() {
  // Elites: best by fitness, lower index first on ties.
  std::vector<std::size_t> order(population_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return *population_[x].fitness > *population_[y].fitness;
  });

  std::vector<Individual> next;
  next.reserve(config_.population_size);
  for (std::size_t i = 0; i < config_.elitism; ++i) {
    next.push_back({population_[order[i]].genome, std::nullopt});
  }
  const double rate = config_.effective_mutation_rate();
  while (next.size() < config_.population_size) {
    const auto [pa, pb] = ga_select(population_, config_.tournament_size, rng_);
    auto [ca, cb] = ga_crossover(population_[pa].genome, population_[pb].genome,
                                 config_.crossover_probability, rng_);
    next.push_back({ga_mutate(ca, rate, rng_), std::nullopt});
    if (next.size() < config_.population_size) {
      next.push_back({ga_mutate(cb, rate, rng_), std::nullopt});
    }
  }
  population_ = std::move(next);
}

}  // namespace cellnas
