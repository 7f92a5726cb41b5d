#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rng.hpp"
#include "space.hpp"

namespace cellnas {

struct GridConfig {
  IntDomain conv = IntDomain::enumerated("conv", {0, 2, 3, 4});
  IntDomain dense = IntDomain::enumerated("dense", {1, 2});
};

struct RandomConfig {
  IntDomain conv = IntDomain::range("conv", 2, 8);
  IntDomain dense = IntDomain::range("dense", 1, 4);
  std::size_t n_iterations = 5;
  std::uint64_t seed = 0;
  bool dedup = false;
  // Redraws per candidate before a duplicate is accepted.
  std::size_t dedup_retry_cap = 1000;
};

struct GAConfig {
  std::size_t population_size = 2;
  std::size_t generations = 8;
  std::size_t genome_length = 8;
  double init_bit_probability = 0.5;
  std::size_t tournament_size = 2;
  double crossover_probability = 0.9;
  // Per-bit flip probability; unset means 1 / genome_length.
  std::optional<double> mutation_rate;
  std::size_t elitism = 1;
  std::uint64_t seed = 0;

  double effective_mutation_rate() const;
  void validate() const;
};

struct Individual {
  Genome genome;
  std::optional<double> fitness;
};

// Row-major: conv outer, dense inner. Both domains must be enumerated.
std::vector<CandidateArchitecture> grid_enumerate(const GridConfig& config);

std::vector<CandidateArchitecture> random_sample(const RandomConfig& config);

std::vector<Individual> ga_init(const GAConfig& config, Rng& rng);

// One tournament: `size` uniform draws with replacement; the highest fitness
// wins, equal fitness goes to the lower population index.
std::size_t ga_tournament(std::span<const Individual> population, std::size_t size, Rng& rng);

// Two independent tournaments. With a population of 2 the parents may coincide.
std::pair<std::size_t, std::size_t> ga_select(std::span<const Individual> population,
                                              std::size_t tournament_size, Rng& rng);

// Single-point crossover at `cut` (first `cut` bits kept, rest swapped).
std::pair<Genome, Genome> crossover_at(const Genome& a, const Genome& b, std::size_t cut);

// With probability `probability`, crossover at a uniform cut in [1, L-1];
// otherwise copies of the parents.
std::pair<Genome, Genome> ga_crossover(const Genome& a, const Genome& b, double probability,
                                       Rng& rng);

Genome ga_mutate(const Genome& genome, double rate, Rng& rng);

// ---------------------------------------------------------------------------
// Ask/tell strategies. ask() returns the next batch to evaluate (empty when
// finished); tell() receives one fitness per proposal of that batch, in order.

struct Proposal {
  CandidateArchitecture candidate;
  std::optional<Genome> genome;
  std::optional<std::size_t> generation;
};

class SearchStrategy {
 public:
  virtual ~SearchStrategy() = default;
  virtual std::string name() const = 0;
  virtual std::vector<Proposal> ask() = 0;
  virtual void tell(std::span<const double> fitness) = 0;
};

// Evaluates a fixed candidate list as one batch. Grid and random search are
// both this shape once their candidates are generated.
class ListSearch final : public SearchStrategy {
 public:
  ListSearch(std::string name, std::vector<CandidateArchitecture> candidates);
  std::string name() const override { return name_; }
  std::vector<Proposal> ask() override;
  void tell(std::span<const double> fitness) override;

 private:
  std::string name_;
  std::vector<CandidateArchitecture> candidates_;
  bool asked_ = false;
};

std::unique_ptr<SearchStrategy> make_grid_search(const GridConfig& config);
std::unique_ptr<SearchStrategy> make_random_search(const RandomConfig& config);

class GeneticSearch final : public SearchStrategy {
 public:
  GeneticSearch(GAConfig config, GenomeLayout layout);

  std::string name() const override { return "ga"; }
  std::vector<Proposal> ask() override;
  void tell(std::span<const double> fitness) override;

  const std::vector<Individual>& population() const { return population_; }
  std::size_t generation() const { return generation_; }
  // Best individual ever evaluated (earliest wins ties).
  const std::optional<Individual>& best() const { return best_; }
  // Best fitness of each evaluated generation's population.
  const std::vector<double>& generation_best() const { return generation_best_; }

 private:
  void breed();

  GAConfig config_;
  GenomeLayout layout_;
  Rng rng_;
  std::vector<Individual> population_;
  std::size_t generation_ = 0;
  bool awaiting_tell_ = false;
  bool finished_ = false;
  std::optional<Individual> best_;
  std::vector<double> generation_best_;
};

}  // namespace cellnas
