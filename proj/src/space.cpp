#include "space.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "error.hpp"

namespace cellnas {

IntDomain IntDomain::enumerated(std::string name, std::vector<int> values) {
  if (values.empty()) throw ConfigError("domain '" + name + "' is empty");
  std::set<int> seen;
  for (int v : values) {
    if (v < 0) throw ConfigError("domain '" + name + "' has a negative value");
    if (!seen.insert(v).second) {
      throw ConfigError("domain '" + name + "' repeats value " + std::to_string(v));
    }
  }
  IntDomain d;
  d.name_ = std::move(name);
  d.kind_ = Kind::enumerated;
  d.values_ = std::move(values);
  return d;
}

IntDomain IntDomain::range(std::string name, int lo, int hi) {
  if (lo < 0) throw ConfigError("domain '" + name + "' has a negative bound");
  if (lo > hi) throw ConfigError("domain '" + name + "' has lo > hi");
  IntDomain d;
  d.name_ = std::move(name);
  d.kind_ = Kind::range;
  d.lo_ = lo;
  d.hi_ = hi;
  return d;
}

std::vector<int> IntDomain::members() const {
  if (kind_ == Kind::enumerated) return values_;
  std::vector<int> out;
  out.reserve(size());
  for (int v = lo_; v <= hi_; ++v) out.push_back(v);
  return out;
}

std::size_t IntDomain::size() const {
  return kind_ == Kind::enumerated ? values_.size() : static_cast<std::size_t>(hi_ - lo_) + 1;
}

int IntDomain::member_at(std::size_t index) const {
  if (index >= size()) throw RangeError("domain index out of range");
  return kind_ == Kind::enumerated ? values_[index] : lo_ + static_cast<int>(index);
}

bool IntDomain::contains(int value) const {
  if (kind_ == Kind::range) return value >= lo_ && value <= hi_;
  return std::find(values_.begin(), values_.end(), value) != values_.end();
}

int IntDomain::max_value() const {
  return kind_ == Kind::range ? hi_ : *std::max_element(values_.begin(), values_.end());
}

GenomeLayout::GenomeLayout(int conv_bits, int dense_bits)
    : conv_bits_(conv_bits), dense_bits_(dense_bits) {
  if (conv_bits < 1 || dense_bits < 1) throw ConfigError("genome field widths must be >= 1");
  if (conv_bits > 30 || dense_bits > 30) throw ConfigError("genome field widths must be <= 30");
}

std::string to_string(const CandidateArchitecture& arch) {
  return "(" + std::to_string(arch.conv_cells) + "," + std::to_string(arch.dense_cells) + ")";
}

Genome::Genome(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto b : bits_) {
    if (b > 1) throw CodecError("genome bits must be 0 or 1");
  }
}

Genome Genome::parse(std::string_view bitstring) {
  std::vector<std::uint8_t> bits;
  bits.reserve(bitstring.size());
  for (char c : bitstring) {
    if (c != '0' && c != '1') {
      throw CodecError(std::string("invalid genome character '") + c + "'");
    }
    bits.push_back(static_cast<std::uint8_t>(c - '0'));
  }
  return Genome(std::move(bits));
}

std::string Genome::to_string() const {
  std::string s;
  s.reserve(bits_.size());
  for (auto b : bits_) s.push_back(static_cast<char>('0' + b));
  return s;
}

void SearchSpace::validate() const {
  if (conv_domain.max_value() > genome_layout.conv_max()) {
    throw ConfigError("conv domain value " + std::to_string(conv_domain.max_value()) +
                      " does not fit in " + std::to_string(genome_layout.conv_bits()) + " bits");
  }
  if (dense_domain.max_value() > genome_layout.dense_max()) {
    throw ConfigError("dense domain value " + std::to_string(dense_domain.max_value()) +
                      " does not fit in " + std::to_string(genome_layout.dense_bits()) + " bits");
  }
}

namespace {

int read_field(const Genome& g, std::size_t offset, int width) {
  int value = 0;
  for (int i = 0; i < width; ++i) value = (value << 1) | g[offset + static_cast<std::size_t>(i)];
  return value;
}

void write_field(std::vector<std::uint8_t>& bits, int value, int width) {
  for (int i = width - 1; i >= 0; --i) bits.push_back(static_cast<std::uint8_t>((value >> i) & 1));
}

}  // namespace

CandidateArchitecture decode_genome(const Genome& genome, const GenomeLayout& layout) {
  if (genome.size() != static_cast<std::size_t>(layout.total_bits())) {
    throw CodecError("genome has " + std::to_string(genome.size()) + " bits, layout expects " +
                     std::to_string(layout.total_bits()));
  }
  return {read_field(genome, 0, layout.conv_bits()),
          read_field(genome, static_cast<std::size_t>(layout.conv_bits()), layout.dense_bits())};
}

Genome encode_architecture(const CandidateArchitecture& arch, const GenomeLayout& layout) {
  if (arch.conv_cells < 0 || arch.conv_cells > layout.conv_max()) {
    throw RangeError("conv_cells " + std::to_string(arch.conv_cells) + " exceeds " +
                     std::to_string(layout.conv_bits()) + "-bit field");
  }
  if (arch.dense_cells < 0 || arch.dense_cells > layout.dense_max()) {
    throw RangeError("dense_cells " + std::to_string(arch.dense_cells) + " exceeds " +
                     std::to_string(layout.dense_bits()) + "-bit field");
  }
  std::vector<std::uint8_t> bits;
  bits.reserve(static_cast<std::size_t>(layout.total_bits()));
  write_field(bits, arch.conv_cells, layout.conv_bits());
  write_field(bits, arch.dense_cells, layout.dense_bits());
  return Genome(std::move(bits));
}

std::vector<bool> plan_pooling(int start_dim, int n_cells) {
  std::vector<bool> flags;
  flags.reserve(static_cast<std::size_t>(std::max(n_cells, 0)));
  int dim = start_dim;
  for (int i = 0; i < n_cells; ++i) {
    const bool pool = dim >= 2;
    if (pool) dim /= 2;
    flags.push_back(pool);
  }
  return flags;
}

// ---------------------------------------------------------------------------

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

std::string describe(const Layer& l) {
  return std::visit(
      overloaded{
          [](const layer::Conv& c) {
            return "conv(" + std::to_string(c.filters) + ", " + std::to_string(c.kernel) + "x" +
                   std::to_string(c.kernel) + ", in=" + std::to_string(c.in_channels) + ")";
          },
          [](const layer::BatchNorm& b) { return "batchnorm(" + std::to_string(b.channels) + ")"; },
          [](const layer::MaxPool&) { return std::string("maxpool"); },
          [](const layer::Dropout& d) {
            std::ostringstream os;
            os << "dropout(" << d.rate << ")";
            return os.str();
          },
          [](const layer::Flatten&) { return std::string("flatten"); },
          [](const layer::Dense& d) {
            return "dense(" + std::to_string(d.in_units) + ", " + std::to_string(d.out_units) + ")";
          },
      },
      l);
}

std::vector<TensorShape> infer_shapes(const ArchitecturePlan& plan) {
  TensorShape cur{false, plan.input_height, plan.input_width, plan.input_channels, 0};
  std::vector<TensorShape> out;
  out.reserve(plan.layers.size());
  std::size_t index = 0;
  auto fail = [&](const std::string& why) {
    throw ContractError("layer " + std::to_string(index) + " (" + describe(plan.layers[index]) +
                        "): " + why);
  };
  for (; index < plan.layers.size(); ++index) {
    std::visit(overloaded{
                   [&](const layer::Conv& c) {
                     if (cur.flat) fail("convolution after flatten");
                     if (c.in_channels != cur.channels) fail("input channel mismatch");
                     cur.channels = c.filters;
                   },
                   [&](const layer::BatchNorm& b) {
                     if (cur.flat) fail("batchnorm after flatten");
                     if (b.channels != cur.channels) fail("channel mismatch");
                   },
                   [&](const layer::MaxPool&) {
                     if (cur.flat) fail("pooling after flatten");
                     if (cur.height < 2 || cur.width < 2) fail("pooling would reach size 0");
                     cur.height /= 2;
                     cur.width /= 2;
                   },
                   [&](const layer::Dropout&) {},
                   [&](const layer::Flatten&) {
                     if (cur.flat) fail("double flatten");
                     cur.units = static_cast<std::int64_t>(cur.height) * cur.width * cur.channels;
                     cur.flat = true;
                   },
                   [&](const layer::Dense& d) {
                     if (!cur.flat) fail("dense before flatten");
                     if (d.in_units != cur.units) fail("input unit mismatch");
                     cur.units = d.out_units;
                   },
               },
               plan.layers[index]);
    out.push_back(cur);
  }
  if (!cur.flat || cur.units != plan.num_classes) {
    throw ContractError("plan does not end in " + std::to_string(plan.num_classes) + " units");
  }
  return out;
}

ArchitecturePlan build_plan(const CandidateArchitecture& arch, const PlanConfig& config) {
  if (arch.conv_cells < 0 || arch.dense_cells < 0) {
    throw RangeError("cell counts must be non-negative");
  }
  ArchitecturePlan plan;
  plan.input_height = config.input_height;
  plan.input_width = config.input_width;
  plan.input_channels = config.input_channels;
  plan.num_classes = config.num_classes;

  auto& layers = plan.layers;
  layers.emplace_back(layer::Conv{config.base_filters, config.kernel, config.input_channels});
  layers.emplace_back(layer::BatchNorm{config.base_filters});
  layers.emplace_back(layer::MaxPool{});
  int dim = std::min(config.input_height, config.input_width) / 2;
  int channels = config.base_filters;
  int height = config.input_height / 2;
  int width = config.input_width / 2;

  plan.pooling_flags = plan_pooling(dim, arch.conv_cells);
  for (bool pool : plan.pooling_flags) {
    layers.emplace_back(layer::Conv{config.cell_filters, config.kernel, channels});
    layers.emplace_back(layer::BatchNorm{config.cell_filters});
    if (pool) {
      layers.emplace_back(layer::MaxPool{});
      height /= 2;
      width /= 2;
    }
    layers.emplace_back(layer::Dropout{config.dropout_cell});
    channels = config.cell_filters;
  }

  layers.emplace_back(layer::Flatten{});
  std::int64_t units = static_cast<std::int64_t>(height) * width * channels;
  for (int i = 0; i < arch.dense_cells; ++i) {
    layers.emplace_back(layer::Dense{units, config.dense_units});
    units = config.dense_units;
  }
  layers.emplace_back(layer::Dropout{config.dropout_head});
  layers.emplace_back(layer::Dense{units, config.num_classes});
  return plan;
}

std::uint64_t count_params(const ArchitecturePlan& plan) {
  std::uint64_t total = 0;
  for (const auto& l : plan.layers) {
    total += std::visit(
        overloaded{
            [](const layer::Conv& c) -> std::uint64_t {
              const auto k = static_cast<std::uint64_t>(c.kernel);
              return k * k * static_cast<std::uint64_t>(c.in_channels) *
                         static_cast<std::uint64_t>(c.filters) +
                     static_cast<std::uint64_t>(c.filters);
            },
            // gamma, beta, moving mean, moving variance
            [](const layer::BatchNorm& b) -> std::uint64_t {
              return 4 * static_cast<std::uint64_t>(b.channels);
            },
            [](const layer::Dense& d) -> std::uint64_t {
              return static_cast<std::uint64_t>(d.in_units) * static_cast<std::uint64_t>(d.out_units) +
                     static_cast<std::uint64_t>(d.out_units);
            },
            [](const auto&) -> std::uint64_t { return 0; },
        },
        l);
  }
  return total;
}

std::uint64_t candidate_params(const CandidateArchitecture& arch, const PlanConfig& config) {
  return count_params(build_plan(arch, config));
}

std::string format_size_millions(std::uint64_t n) {
  if (n >= 1'000'000) {
    return std::to_string(n / 1'000'000) + "." + std::to_string((n / 100'000) % 10) + "M";
  }
  const auto hundredths = n / 10'000;
  std::string frac = std::to_string(hundredths);
  if (frac.size() < 2) frac.insert(0, 2 - frac.size(), '0');
  return "0." + frac + "M";
}

}  // namespace cellnas
