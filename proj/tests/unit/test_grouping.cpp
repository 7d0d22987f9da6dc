#include <doctest.h>

#include <numeric>
#include <random>
#include <sstream>

#include "cgswap/error.hpp"
#include "cgswap/grouping.hpp"
#include "support.hpp"

using namespace cgswap;
using cgswap::testing::random_tensor;

namespace {

ChannelMask random_mask(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> bits(n);
  for (auto& b : bits) b = static_cast<std::uint8_t>(rng() & 1u);
  return ChannelMask(bits);
}

}  // namespace

TEST_SUITE("grouping") {
  TEST_CASE("gap is the spatial mean per channel") {
    const Tensor t = random_tensor(5, 7, 3, 1);
    const ChannelCode code = gap(t);
    REQUIRE(code.size() == 5);
    for (int c = 0; c < 5; ++c) {
      double s = 0.0;
      for (int y = 0; y < 7; ++y)
        for (int x = 0; x < 3; ++x) s += t.at(c, y, x);
      CHECK(code[c] == doctest::Approx(s / 21.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(gap(Tensor(3, 0, 0)), ArgumentError);
  }

  TEST_CASE("mask uses strict comparison, ties to texture") {
    CHECK(compute_mask({1, 3, 2}, {2, 1, 2}).bits()[0] == 0);
    const ChannelMask m = compute_mask({2, 1, 2}, {1, 3, 2});
    CHECK(std::vector<std::uint8_t>(m.bits().begin(), m.bits().end()) == std::vector<std::uint8_t>{1, 0, 0});
    CHECK(compute_mask({0.5, 0.5}, {0.5, 0.5}).count() == 0);
    CHECK_THROWS_AS(compute_mask({1, 2}, {1}), ArgumentError);
  }

  TEST_CASE("mask matches an elementwise loop and is permutation equivariant") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> d;
    ChannelCode s(512), t(512);
    for (int i = 0; i < 512; ++i) {
      s[i] = d(rng);
      t[i] = d(rng);
    }
    const ChannelMask m = compute_mask(s, t);
    for (int i = 0; i < 512; ++i) CHECK_EQ(m[i], s[i] > t[i]);

    std::vector<int> perm(512);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    ChannelCode ps(512), pt(512);
    for (int i = 0; i < 512; ++i) {
      ps[i] = s[perm[i]];
      pt[i] = t[perm[i]];
    }
    const ChannelMask pm = compute_mask(ps, pt);
    for (int i = 0; i < 512; ++i) CHECK_EQ(pm[i], m[perm[i]]);
  }

  TEST_CASE("scaling one code can flip bits") {
    const ChannelCode s{1.0, 2.0}, t{1.5, 1.5};
    CHECK(compute_mask(s, t).count() == 1);
    CHECK(compute_mask({2.0, 4.0}, t).count() == 2);
  }

  TEST_CASE("split is an exact partition") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const Tensor f = random_tensor(16, 5, 4, seed, -10.0f, 10.0f);
      const ChannelMask m = random_mask(16, seed + 100);
      const GroupedFeatures g = split(f, m);
      for (int c = 0; c < 16; ++c) {
        for (std::size_t k = 0; k < f.plane_size(); ++k) {
          const float s = g.surface.plane(c)[k], t = g.texture.plane(c)[k];
          REQUIRE(s + t == f.plane(c)[k]);
          REQUIRE((m[c] ? t : s) == 0.0f);
        }
      }
      const ChannelMask comp = m.complement();
      for (std::size_t c = 0; c < 16; ++c) REQUIRE(m[c] != comp[c]);
    }
  }

  TEST_CASE("degenerate masks") {
    const Tensor f = random_tensor(4, 3, 3, 2);
    const GroupedFeatures ones = split(f, ChannelMask(4, true));
    CHECK(ones.surface == f);
    CHECK(ones.texture == Tensor(4, 3, 3));
    const GroupedFeatures zeros = split(f, ChannelMask(4, false));
    CHECK(zeros.texture == f);
    CHECK_THROWS_AS(split(f, ChannelMask(5)), ArgumentError);
    CHECK_THROWS_AS(ChannelMask(std::vector<std::uint8_t>{0, 2}), ArgumentError);
  }

  TEST_CASE("code rate statistics") {
    ChannelMask m(512);
    for (int i = 0; i < 200; ++i) m.set(i * 2, true);
    const CodeRateStats s = code_rate_stats(m);
    CHECK(s.surface == 200);
    CHECK(s.texture == 312);
    CHECK(s.balance == 56.0);
    const CodeRateStats z = code_rate_stats(ChannelMask(10));
    CHECK(z.surface == 0);
    CHECK(z.balance == 5.0);

    double mean = 0.0, oracle = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const ChannelMask r = random_mask(64, seed);
      mean += code_rate_stats(r).balance;
      int ones = 0;
      for (std::size_t i = 0; i < 64; ++i) ones += r[i] ? 1 : 0;
      oracle += std::abs(ones - 32);
    }
    CHECK(mean == oracle);

    std::ostringstream row;
    write_code_rate_row(row, "img", s);
    CHECK(row.str() == "img,200,312,56\n");
  }

  TEST_CASE("fixed grouping blocks") {
    const auto g = fixed_grouping(8, 4);
    REQUIRE(g.size() == 2);
    for (std::size_t c = 0; c < 8; ++c) {
      CHECK(g[0][c] == (c < 4));
      CHECK(g[1][c] == (c >= 4));
    }
    const auto full = fixed_grouping(8, 8);
    REQUIRE(full.size() == 1);
    CHECK(full[0].count() == 8);
    const auto each = fixed_grouping(5, 1);
    CHECK(each.size() == 5);
    const auto ragged = fixed_grouping(10, 4);
    REQUIRE(ragged.size() == 3);
    CHECK(ragged[2].count() == 2);
    std::vector<int> cover(10, 0);
    for (const auto& m : ragged)
      for (std::size_t c = 0; c < 10; ++c) cover[c] += m[c];
    CHECK(std::all_of(cover.begin(), cover.end(), [](int v) { return v == 1; }));
    CHECK_THROWS_AS(fixed_grouping(8, 0), ArgumentError);
  }
}
