#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cellnas {

// Integer domain of one search dimension: an explicit list of values, or an
// inclusive [lo, hi] range.
class IntDomain {
 public:
  enum class Kind { enumerated, range };

  static IntDomain enumerated(std::string name, std::vector<int> values);
  static IntDomain range(std::string name, int lo, int hi);

  const std::string& name() const { return name_; }
  Kind kind() const { return kind_; }
  bool is_range() const { return kind_ == Kind::range; }
  // Only meaningful for enumerated domains; ranges return an empty list.
  const std::vector<int>& values() const { return values_; }
  int lo() const { return lo_; }
  int hi() const { return hi_; }

  // All members in order (expands ranges).
  std::vector<int> members() const;
  std::size_t size() const;
  int member_at(std::size_t index) const;
  bool contains(int value) const;
  int max_value() const;

  friend bool operator==(const IntDomain&, const IntDomain&) = default;

 private:
  IntDomain() = default;

  std::string name_;
  Kind kind_ = Kind::range;
  std::vector<int> values_;
  int lo_ = 0;
  int hi_ = 0;
};

// Bit layout of a genome: a conv field followed by a dense field, each an
// unsigned integer stored most-significant-bit first.
class GenomeLayout {
 public:
  GenomeLayout() = default;
  GenomeLayout(int conv_bits, int dense_bits);

  int conv_bits() const { return conv_bits_; }
  int dense_bits() const { return dense_bits_; }
  int total_bits() const { return conv_bits_ + dense_bits_; }
  int conv_max() const { return (1 << conv_bits_) - 1; }
  int dense_max() const { return (1 << dense_bits_) - 1; }

  friend bool operator==(const GenomeLayout&, const GenomeLayout&) = default;

 private:
  int conv_bits_ = 4;
  int dense_bits_ = 4;
};

struct CandidateArchitecture {
  int conv_cells = 0;
  int dense_cells = 0;

  friend auto operator<=>(const CandidateArchitecture&, const CandidateArchitecture&) = default;
};

std::string to_string(const CandidateArchitecture& arch);

class Genome {
 public:
  Genome() = default;
  explicit Genome(std::vector<std::uint8_t> bits);

  // Parses a string of '0'/'1' characters; anything else is a CodecError.
  static Genome parse(std::string_view bitstring);

  std::size_t size() const { return bits_.size(); }
  const std::vector<std::uint8_t>& bits() const { return bits_; }
  std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
  void flip(std::size_t i) { bits_[i] ^= 1U; }
  std::string to_string() const;

  friend auto operator<=>(const Genome&, const Genome&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

struct SearchSpace {
  IntDomain conv_domain = IntDomain::enumerated("conv", {0, 2, 3, 4});
  IntDomain dense_domain = IntDomain::enumerated("dense", {1, 2});
  GenomeLayout genome_layout;

  // Checks that every domain value fits its genome field.
  void validate() const;
};

CandidateArchitecture decode_genome(const Genome& genome, const GenomeLayout& layout);
Genome encode_architecture(const CandidateArchitecture& arch, const GenomeLayout& layout);

// Pooling decision for each of n_cells consecutive conv cells starting at
// spatial size start_dim: a cell pools (and halves the size) iff the current
// size is at least 2.
std::vector<bool> plan_pooling(int start_dim, int n_cells);

// ---------------------------------------------------------------------------
// Canonical architecture plan

struct PlanConfig {
  int input_height = 32;
  int input_width = 32;
  int input_channels = 3;
  int num_classes = 10;
  int kernel = 3;
  int base_filters = 32;
  int cell_filters = 64;
  int dense_units = 512;
  double dropout_cell = 0.2;
  double dropout_head = 0.5;
};

namespace layer {
struct Conv {
  int filters;
  int kernel;
  int in_channels;
};
struct BatchNorm {
  int channels;
};
struct MaxPool {};
struct Dropout {
  double rate;
};
struct Flatten {};
struct Dense {
  std::int64_t in_units;
  std::int64_t out_units;
};
}  // namespace layer

using Layer = std::variant<layer::Conv, layer::BatchNorm, layer::MaxPool, layer::Dropout,
                           layer::Flatten, layer::Dense>;

std::string describe(const Layer& l);

struct ArchitecturePlan {
  int input_height = 32;
  int input_width = 32;
  int input_channels = 3;
  int num_classes = 10;
  std::vector<Layer> layers;
  std::vector<bool> pooling_flags;  // one per conv cell
};

// Activation shape between layers: spatial (h, w, c) before flatten, then a
// flat unit count.
struct TensorShape {
  bool flat = false;
  int height = 0;
  int width = 0;
  int channels = 0;
  std::int64_t units = 0;

  friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

// Output shape after each layer. Throws ContractError when a layer's declared
// input does not match its predecessor's output, a pool would reach size 0,
// or the head does not end in num_classes units.
std::vector<TensorShape> infer_shapes(const ArchitecturePlan& plan);

ArchitecturePlan build_plan(const CandidateArchitecture& arch, const PlanConfig& config = {});

std::uint64_t count_params(const ArchitecturePlan& plan);

// Parameters of the canonical plan for a candidate.
std::uint64_t candidate_params(const CandidateArchitecture& arch, const PlanConfig& config = {});

// Millions, truncated: one decimal at or above 1M ("4.2M"), two below ("0.58M").
std::string format_size_millions(std::uint64_t n);

}  // namespace cellnas
