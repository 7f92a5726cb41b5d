#include <doctest.h>

#include <map>
#include <variant>

#include "error.hpp"
#include "space.hpp"

using namespace cellnas;

namespace {

Genome bits(std::initializer_list<int> b) {
  std::vector<std::uint8_t> v;
  for (int x : b) v.push_back(static_cast<std::uint8_t>(x));
  return Genome(std::move(v));
}

// Unsigned binary value of a bit range, computed with powers of two.
int binary_oracle(const std::vector<std::uint8_t>& b, std::size_t from, std::size_t to) {
  int value = 0;
  int weight = 1;
  for (std::size_t i = to; i-- > from;) {
    value += b[i] * weight;
    weight *= 2;
  }
  return value;
}

// Layer-by-layer arithmetic straight from the training constants: 3x3
// kernels, 32 base filters, 64 per conv cell, 512 dense units, 10 classes,
// 4 batchnorm parameters per channel, pooling while the map is >= 2.
std::uint64_t params_oracle(int conv, int dense) {
  std::uint64_t total = (3 * 3 * 3 * 32 + 32) + 4 * 32;
  std::uint64_t dim = 32 / 2;
  std::uint64_t channels = 32;
  for (int i = 0; i < conv; ++i) {
    total += 3 * 3 * channels * 64 + 64 + 4 * 64;
    channels = 64;
    if (dim >= 2) dim /= 2;
  }
  std::uint64_t units = dim * dim * channels;
  for (int i = 0; i < dense; ++i) {
    total += units * 512 + 512;
    units = 512;
  }
  return total + units * 10 + 10;
}

}  // namespace

TEST_CASE("decode_genome examples") {
  const GenomeLayout layout;
  CHECK(decode_genome(bits({0, 0, 0, 0, 0, 0, 0, 0}), layout) == CandidateArchitecture{0, 0});
  CHECK(decode_genome(bits({1, 0, 1, 0, 0, 0, 0, 1}), layout) == CandidateArchitecture{10, 1});
  CHECK(decode_genome(bits({0, 1, 0, 0, 0, 0, 1, 1}), layout) == CandidateArchitecture{4, 3});
}

TEST_CASE("decode_genome rejects a length mismatch") {
  CHECK_THROWS_AS(decode_genome(Genome::parse("1010000"), GenomeLayout{}), CodecError);
  CHECK_THROWS_AS(decode_genome(Genome::parse("101000011"), GenomeLayout{}), CodecError);
}

TEST_CASE("Genome::parse rejects characters other than 0 and 1") {
  CHECK_THROWS_AS(Genome::parse("10a00001"), CodecError);
  CHECK(Genome::parse("10100001").to_string() == "10100001");
}

TEST_CASE("encode_architecture examples and range errors") {
  const GenomeLayout layout;
  CHECK(encode_architecture({0, 0}, layout).to_string() == "00000000");
  CHECK(encode_architecture({10, 1}, layout).to_string() == "10100001");
  CHECK(encode_architecture({15, 15}, layout).to_string() == "11111111");
  CHECK_THROWS_AS(encode_architecture({16, 0}, layout), RangeError);
  CHECK_THROWS_AS(encode_architecture({0, 16}, layout), RangeError);
  CHECK_THROWS_AS(encode_architecture({-1, 0}, layout), RangeError);
}

TEST_CASE("codec round trip and bounds over every 8-bit genome") {
  const GenomeLayout layout;
  for (int g = 0; g < 256; ++g) {
    std::vector<std::uint8_t> b;
    for (int i = 7; i >= 0; --i) b.push_back(static_cast<std::uint8_t>((g >> i) & 1));
    const Genome genome(b);
    const auto arch = decode_genome(genome, layout);
    CHECK(arch.conv_cells == binary_oracle(b, 0, 4));
    CHECK(arch.dense_cells == binary_oracle(b, 4, 8));
    CHECK(arch.conv_cells >= 0);
    CHECK(arch.conv_cells <= 15);
    CHECK(arch.dense_cells <= 15);
    CHECK(encode_architecture(arch, layout) == genome);
  }
}

TEST_CASE("uneven layouts split MSB-first at conv_bits") {
  const GenomeLayout layout(3, 5);
  CHECK(decode_genome(Genome::parse("10100001"), layout) == CandidateArchitecture{5, 1});
  CHECK(encode_architecture({7, 31}, layout).to_string() == "11111111");
  CHECK_THROWS_AS(GenomeLayout(0, 8), ConfigError);
}

TEST_CASE("plan_pooling examples") {
  CHECK(plan_pooling(16, 3) == std::vector<bool>{true, true, true});
  CHECK(plan_pooling(16, 7) == std::vector<bool>{true, true, true, true, false, false, false});
  CHECK(plan_pooling(1, 2) == std::vector<bool>{false, false});
  CHECK(plan_pooling(16, 0).empty());
}

TEST_CASE("plan_pooling: flags never turn back on, and 16 pools min(n, 4) times") {
  for (int start = 1; start <= 64; ++start) {
    for (int n = 0; n <= 12; ++n) {
      const auto flags = plan_pooling(start, n);
      REQUIRE(flags.size() == static_cast<std::size_t>(n));
      bool off = false;
      for (bool f : flags) {
        if (off) CHECK_FALSE(f);
        if (!f) off = true;
      }
      if (start == 16) {
        const auto pools = std::count(flags.begin(), flags.end(), true);
        CHECK(pools == std::min(n, 4));
      }
    }
  }
}

TEST_CASE("build_plan (0,1): base, flatten 8192, one dense cell, head") {
  const auto plan = build_plan({0, 1});
  REQUIRE(plan.layers.size() == 7);
  CHECK(std::get<layer::Conv>(plan.layers[0]).filters == 32);
  CHECK(std::get<layer::Conv>(plan.layers[0]).in_channels == 3);
  CHECK(std::holds_alternative<layer::BatchNorm>(plan.layers[1]));
  CHECK(std::holds_alternative<layer::MaxPool>(plan.layers[2]));
  CHECK(std::holds_alternative<layer::Flatten>(plan.layers[3]));
  CHECK(std::get<layer::Dense>(plan.layers[4]).in_units == 8192);
  CHECK(std::get<layer::Dense>(plan.layers[4]).out_units == 512);
  CHECK(std::get<layer::Dropout>(plan.layers[5]).rate == doctest::Approx(0.5));
  CHECK(std::get<layer::Dense>(plan.layers[6]).out_units == 10);
}

TEST_CASE("build_plan (2,1) flattens 4x4x64") {
  const auto plan = build_plan({2, 1});
  const auto shapes = infer_shapes(plan);
  auto flatten = std::find_if(plan.layers.begin(), plan.layers.end(),
                              [](const Layer& l) { return std::holds_alternative<layer::Flatten>(l); });
  REQUIRE(flatten != plan.layers.end());
  const auto idx = static_cast<std::size_t>(flatten - plan.layers.begin());
  CHECK(shapes[idx].units == 4 * 4 * 64);
  CHECK(plan.pooling_flags == std::vector<bool>{true, true});
  // Each conv cell ends with dropout 0.2.
  CHECK(std::get<layer::Dropout>(plan.layers[idx - 1]).rate == doctest::Approx(0.2));
}

TEST_CASE("build_plan (0,0) is base + flatten + classifier") {
  const auto plan = build_plan({0, 0});
  REQUIRE(plan.layers.size() == 6);
  CHECK(std::get<layer::Dense>(plan.layers[5]).in_units == 16 * 16 * 32);
  CHECK(count_params(plan) == params_oracle(0, 0));
}

TEST_CASE("every plan in a broad range chains shapes consistently") {
  for (int c = 0; c <= 15; ++c) {
    for (int d = 0; d <= 15; ++d) {
      const auto plan = build_plan({c, d});
      const auto shapes = infer_shapes(plan);
      for (const auto& s : shapes) {
        if (!s.flat) {
          CHECK(s.height >= 1);
          CHECK(s.width >= 1);
        }
      }
      // Every maxpool halves its input.
      for (std::size_t i = 0; i < plan.layers.size(); ++i) {
        if (!std::holds_alternative<layer::MaxPool>(plan.layers[i])) continue;
        const int in = i == 0 ? plan.input_height : shapes[i - 1].height;
        CHECK(shapes[i].height == in / 2);
      }
    }
  }
}

TEST_CASE("infer_shapes rejects broken chains") {
  auto plan = build_plan({1, 1});
  SUBCASE("channel mismatch") {
    std::get<layer::Conv>(plan.layers[3]).in_channels = 7;
    CHECK_THROWS_AS(infer_shapes(plan), ContractError);
  }
  SUBCASE("unit mismatch") {
    for (auto& l : plan.layers) {
      if (auto* d = std::get_if<layer::Dense>(&l); d && d->out_units == 10) d->in_units = 1;
    }
    CHECK_THROWS_AS(infer_shapes(plan), ContractError);
  }
  SUBCASE("pooling to zero") {
    ArchitecturePlan tiny;
    tiny.input_height = tiny.input_width = 1;
    tiny.layers = {layer::MaxPool{}, layer::Flatten{}, layer::Dense{3, 10}};
    CHECK_THROWS_AS(infer_shapes(tiny), ContractError);
  }
}

TEST_CASE("count_params examples") {
  CHECK(count_params(build_plan({0, 1})) == 4'200'970);
  CHECK(896 + 128 + 4'194'816 + 5'130 == 4'200'970);
  CHECK(count_params(build_plan({2, 1})) == 586'890);
  CHECK(count_params(build_plan({4, 2})) == 432'394);
  CHECK(count_params(build_plan({3, 1})) == 230'858);
  CHECK(count_params(build_plan({2, 2})) == 849'546);
}

TEST_CASE("count_params matches the layer arithmetic oracle") {
  for (int c = 0; c <= 15; ++c) {
    for (int d = 0; d <= 15; ++d) CHECK(count_params(build_plan({c, d})) == params_oracle(c, d));
  }
}

TEST_CASE("count_params strictly increases with dense cells") {
  for (int c = 0; c <= 15; ++c) {
    for (int d = 0; d < 15; ++d) {
      CHECK(candidate_params({c, d + 1}) > candidate_params({c, d}));
      // Past the first dense cell, each extra one is a 512x512 layer.
      if (d >= 1) CHECK(candidate_params({c, d + 1}) - candidate_params({c, d}) == 512 * 512 + 512);
    }
  }
}

TEST_CASE("format_size_millions truncates") {
  CHECK(format_size_millions(4'200'970) == "4.2M");
  CHECK(format_size_millions(169'738) == "0.16M");
  CHECK(format_size_millions(0) == "0.00M");
  CHECK(format_size_millions(999'999) == "0.99M");
  CHECK(format_size_millions(1'000'000) == "1.0M");
  CHECK(format_size_millions(12'345'678) == "12.3M");
  CHECK(format_size_millions(9'999) == "0.00M");
  CHECK(format_size_millions(10'000) == "0.01M");
}

TEST_CASE("all eight grid configurations reproduce the published sizes") {
  const std::map<CandidateArchitecture, std::string> published{
      {{0, 1}, "4.2M"},  {{0, 2}, "4.4M"},  {{2, 1}, "0.58M"}, {{2, 2}, "0.84M"},
      {{3, 1}, "0.23M"}, {{3, 2}, "0.49M"}, {{4, 1}, "0.16M"}, {{4, 2}, "0.43M"},
  };
  for (const auto& [arch, size] : published) {
    CHECK_MESSAGE(format_size_millions(candidate_params(arch)) == size, to_string(arch));
  }
}

TEST_CASE("IntDomain validation") {
  CHECK_THROWS_AS(IntDomain::enumerated("conv", {}), ConfigError);
  CHECK_THROWS_AS(IntDomain::enumerated("conv", {1, 2, 1}), ConfigError);
  CHECK_THROWS_AS(IntDomain::enumerated("conv", {-1}), ConfigError);
  CHECK_THROWS_AS(IntDomain::range("conv", 3, 2), ConfigError);
  const auto r = IntDomain::range("conv", 2, 8);
  CHECK(r.size() == 7);
  CHECK(r.members().front() == 2);
  CHECK(r.member_at(6) == 8);
  CHECK(r.contains(5));
  CHECK_FALSE(r.contains(9));
  const auto e = IntDomain::enumerated("conv", {0, 2, 3, 4});
  CHECK(e.max_value() == 4);
  CHECK_FALSE(e.contains(1));
}

TEST_CASE("SearchSpace::validate checks genome field capacity") {
  SearchSpace space;
  CHECK_NOTHROW(space.validate());
  space.conv_domain = IntDomain::range("conv", 0, 16);
  CHECK_THROWS_AS(space.validate(), ConfigError);
  space.genome_layout = GenomeLayout(5, 3);
  CHECK_NOTHROW(space.validate());
  space.dense_domain = IntDomain::enumerated("dense", {8});
  CHECK_THROWS_AS(space.validate(), ConfigError);
}
