#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "cgswap/error.hpp"
#include "cgswap/swap.hpp"
#include "support.hpp"

using namespace cgswap;
using cgswap::testing::random_tensor;

namespace {

const Encoder& encoder() {
  static const Encoder enc = Encoder::random(21);
  return enc;
}

// Nested-loop argmax over centered windows, ties to the lowest index.
std::vector<std::int32_t> oracle_assignment(const FeatureMap& content, const PatchBank& bank) {
  const FeatureMap cc = center_channels(content);
  const int p = bank.patch_side();
  std::vector<std::int32_t> out;
  for (int y = 0; y + p <= content.height(); ++y) {
    for (int x = 0; x + p <= content.width(); ++x) {
      double best = -INFINITY;
      std::int32_t arg = 0;
      for (std::size_t j = 0; j < bank.size(); ++j) {
        const std::vector<float> s = bank.centered_patch(j);
        double score = 0.0;
        for (int c = 0; c < content.channels(); ++c)
          for (int dy = 0; dy < p; ++dy)
            for (int dx = 0; dx < p; ++dx)
              score += double(cc.at(c, y + dy, x + dx)) * s[(c * p + dy) * p + dx];
        if (score > best) {
          best = score;
          arg = static_cast<std::int32_t>(j);
        }
      }
      out.push_back(arg);
    }
  }
  return out;
}

// Places raw winning patches and divides by overlap counts.
FeatureMap oracle_reconstruct(const FeatureMap& content, const PatchBank& bank, const std::vector<std::int32_t>& a) {
  const int p = bank.patch_side();
  FeatureMap sum(content.channels(), content.height(), content.width());
  FeatureMap count(1, content.height(), content.width());
  const int gw = content.width() - p + 1;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int y = static_cast<int>(i) / gw, x = static_cast<int>(i) % gw;
    const std::vector<float> v = bank.patch(a[i]);
    for (int c = 0; c < content.channels(); ++c)
      for (int dy = 0; dy < p; ++dy)
        for (int dx = 0; dx < p; ++dx) sum.at(c, y + dy, x + dx) += v[(c * p + dy) * p + dx];
    for (int dy = 0; dy < p; ++dy)
      for (int dx = 0; dx < p; ++dx) count.at(0, y + dy, x + dx) += 1.0f;
  }
  for (int c = 0; c < sum.channels(); ++c)
    for (int y = 0; y < sum.height(); ++y)
      for (int x = 0; x < sum.width(); ++x) sum.at(c, y, x) /= count.at(0, y, x);
  return sum;
}

float max_abs_diff(const Tensor& a, const Tensor& b) {
  float m = 0.0f;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

}  // namespace

TEST_SUITE("swap") {
  TEST_CASE("centering") {
    const FeatureMap k = center_channels(Tensor(2, 3, 3, 5.0f));
    for (float v : k.values()) CHECK(v == 0.0f);
    const Tensor r = random_tensor(3, 6, 5, 1);
    const FeatureMap c = center_channels(r);
    for (int ch = 0; ch < 3; ++ch) {
      double s = 0.0;
      for (float v : c.plane(ch)) s += v;
      CHECK(std::abs(s / c.plane_size()) <= 1e-6);
    }
    const FeatureMap twice = center_channels(c);
    CHECK(max_abs_diff(twice, c) <= 1e-6f);
    CHECK_THROWS_AS(center_channels(Tensor()), ArgumentError);
  }

  TEST_CASE("patch extraction counts and origins") {
    CHECK(extract_patches(Tensor(2, 4, 4), 3).size() == 4);
    const Tensor whole = random_tensor(2, 3, 3, 2);
    const PatchBank one = extract_patches(whole, 3);
    REQUIRE(one.size() == 1);
    CHECK(one.patch(0) == std::vector<float>(whole.values().begin(), whole.values().end()));

    const Tensor f = random_tensor(3, 5, 7, 3);
    const PatchBank bank = extract_patches(f, 3);
    REQUIRE(bank.size() == 15);
    for (std::size_t j = 0; j < 15; ++j) {
      const PatchOrigin& o = bank.origin(j);
      CHECK(o.y == static_cast<int>(j) / 5);
      CHECK(o.x == static_cast<int>(j) % 5);
      const std::vector<float> v = bank.patch(j);
      CHECK(v[(2 * 3 + 1) * 3 + 2] == f.at(2, o.y + 1, o.x + 2));
    }
    CHECK_THROWS_AS(extract_patches(Tensor(1, 2, 5), 3), ArgumentError);
    CHECK_THROWS_AS(extract_patches(f, 3, 2), ArgumentError);
  }

  TEST_CASE("multi-scale bank sizes and provenance") {
    const Image style = cgswap::testing::gradient_image(256, 256, 4);
    const std::vector<double> single{1.0};
    CHECK(build_multiscale_bank(style, single, encoder(), 3).size() == 900);
    const std::vector<double> two{1.0, 0.5};
    const PatchBank bank = build_multiscale_bank(style, two, encoder(), 3);
    CHECK(bank.size() == 1096);
    std::set<std::tuple<double, int, int>> seen;
    for (std::size_t j = 0; j < bank.size(); ++j) {
      const auto& o = bank.origin(j);
      seen.insert({o.scale, o.y, o.x});
    }
    CHECK(seen.size() == bank.size());
    CHECK(bank.origin(899).scale == 1.0);
    CHECK(bank.origin(900).scale == 0.5);
    const std::vector<double> tiny{1.0, 0.1};
    try {
      build_multiscale_bank(style, tiny, encoder(), 3);
      FAIL("expected ArgumentError");
    } catch (const ArgumentError& e) {
      CHECK(std::string(e.what()).find("0.1") != std::string::npos);
    }
  }

  TEST_CASE("upcc is an unnormalized inner product") {
    const std::vector<float> p{1.0f, -1.0f}, q{2.0f, -2.0f}, z{0.0f, 0.0f};
    CHECK(upcc_score(p, q) == 4.0);
    CHECK(upcc_score(p, p) == 2.0);
    CHECK(upcc_score(p, z) == 0.0);
    const Tensor a = random_tensor(1, 1, 27, 5), b = random_tensor(1, 1, 27, 6);
    double s = 0.0;
    for (int i = 0; i < 27; ++i) s += double(a.values()[i]) * b.values()[i];
    CHECK(upcc_score(a.values(), b.values()) == doctest::Approx(s).epsilon(1e-12));
    CHECK_THROWS_AS(upcc_score(p, std::vector<float>{1.0f}), ArgumentError);
  }

  TEST_CASE("single patch bank and all-zero content") {
    const Tensor s = random_tensor(4, 3, 3, 7);
    const PatchBank bank = extract_patches(s, 3);
    const SwapResult r = swap_bruteforce(Tensor(4, 3, 3, 0.3f), bank);
    CHECK(r.assignment == std::vector<std::int32_t>{0});
    CHECK(r.swapped == s);

    const PatchBank many = extract_patches(random_tensor(4, 6, 6, 8), 3);
    const SwapResult z = swap_bruteforce(Tensor(4, 5, 5), many);
    for (auto a : z.assignment) CHECK(a == 0);
    const SwapResult za = swap_accelerated(Tensor(4, 5, 5), many);
    CHECK(za.assignment == z.assignment);
    CHECK_THROWS_AS(swap_bruteforce(Tensor(3, 5, 5), many), ArgumentError);
    CHECK_THROWS_AS(swap_accelerated(Tensor(4, 2, 5), many), ArgumentError);
  }

  TEST_CASE("brute force matches the nested-loop oracle") {
    const Tensor content = random_tensor(8, 16, 16, 9);
    const PatchBank bank = extract_patches(random_tensor(8, 4, 7, 10), 3);
    REQUIRE(bank.size() == 10);
    const PatchBank bigger = extract_patches(random_tensor(8, 6, 7, 11), 3);
    for (const PatchBank* b : {&bank, &bigger}) {
      const SwapResult r = swap_bruteforce(content, *b);
      CHECK(r.assignment == oracle_assignment(content, *b));
      CHECK(max_abs_diff(r.swapped, oracle_reconstruct(content, *b, r.assignment)) <= 1e-6f);
      CHECK(r.grid_height == 14);
      CHECK(r.grid_width == 14);
    }
  }

  TEST_CASE("accelerated swap agrees with brute force") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 10; ++trial) {
      const int h = 4 + static_cast<int>(rng() % 8), w = 4 + static_cast<int>(rng() % 8);
      const Tensor content = random_tensor(8, 16, 16, 100 + trial);
      const PatchBank bank = extract_patches(random_tensor(8, h, w, 200 + trial), 3);
      const SwapResult a = swap_bruteforce(content, bank);
      const SwapResult b = swap_accelerated(content, bank);
      REQUIRE(a.assignment.size() == b.assignment.size());
      for (std::size_t i = 0; i < a.assignment.size(); ++i) {
        if (a.top2_gap[i] > 1e-4) CHECK(a.assignment[i] == b.assignment[i]);
      }
      CHECK(max_abs_diff(a.swapped, b.swapped) <= 1e-4f);
    }
  }

  TEST_CASE("constant patches reconstruct a constant map") {
    PatchBank bank(3);
    bank.add_source(1.0, Tensor(2, 4, 4, 1.5f));
    const SwapResult r = swap_accelerated(random_tensor(2, 9, 8, 13), bank);
    for (float v : r.swapped.values()) CHECK(v == doctest::Approx(1.5f));
  }

  TEST_CASE("swapping against its own bank can change the map") {
    // columns 1 1 2 2 -6: window 0 matches window 1 better than itself
    Tensor f(1, 3, 5);
    const float cols[5] = {1, 1, 2, 2, -6};
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 5; ++x) f.at(0, y, x) = cols[x];
    const PatchBank own = extract_patches(f, 3);
    const SwapResult r = swap_bruteforce(f, own);
    CHECK(r.assignment[0] == 1);
    CHECK(r.best_score[0] == doctest::Approx(21.0));
    CHECK(max_abs_diff(r.swapped, f) > 0.1f);
    CHECK(swap_accelerated(f, own).assignment == r.assignment);
  }

  TEST_CASE("masked channels do not affect assignments") {
    const Tensor content = random_tensor(6, 8, 8, 14);
    const Tensor style = random_tensor(6, 7, 7, 15);
    ChannelMask m(6);
    m.set(1, true);
    m.set(4, true);
    const auto a = swap_accelerated(select_channels(content, m), extract_patches(select_channels(style, m), 3));
    const auto b = swap_bruteforce(select_channels(content, m), extract_patches(select_channels(style, m), 3));
    CHECK(a.assignment == b.assignment);
    for (int c : {0, 2, 3, 5})
      for (float v : a.swapped.plane(c)) CHECK(v == 0.0f);
  }

  TEST_CASE("grouped swap with one full group equals the full swap") {
    const Tensor content = random_tensor(8, 9, 9, 16);
    const std::vector<ScaledFeature> style{{1.0, random_tensor(8, 8, 8, 17)}, {0.5, random_tensor(8, 5, 5, 18)}};
    const auto full = swap_accelerated(content, build_bank(style, 3));
    const auto groups = fixed_grouping(8, 8);
    CHECK(max_abs_diff(swap_grouped(content, style, groups, 3), full.swapped) <= 1e-6f);
    const auto halves = fixed_grouping(8, 4);
    const FeatureMap g = swap_grouped(content, style, halves, 3);
    FeatureMap manual = swap_accelerated(select_channels(content, halves[0]),
                                         build_bank(select_channels(style, halves[0]), 3)).swapped;
    manual += swap_accelerated(select_channels(content, halves[1]),
                               build_bank(select_channels(style, halves[1]), 3)).swapped;
    CHECK(max_abs_diff(g, manual) <= 1e-6f);
  }

  TEST_CASE("assignment csv") {
    const PatchBank bank = extract_patches(random_tensor(2, 4, 4, 19), 3);
    const SwapResult r = swap_bruteforce(random_tensor(2, 4, 3, 20), bank);
    std::ostringstream out;
    write_assignment_csv(out, r, bank);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "location,y,x,bank_index,scale,origin_y,origin_x");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 2);
  }
}
