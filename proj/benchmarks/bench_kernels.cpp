#include <benchmark/benchmark.h>

#include <random>

#include "cgswap/decomposer.hpp"
#include "cgswap/nn.hpp"
#include "cgswap/swap.hpp"
#include "cgswap/vgg.hpp"

using namespace cgswap;

namespace {

Tensor noise(int c, int h, int w, std::uint64_t seed) {
  Tensor t(c, h, w);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> d(0.0f, 1.0f);
  for (float& v : t.values()) v = d(rng);
  return t;
}

Image noise_image(int h, int w, std::uint64_t seed) {
  Image img(h, w, 3);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> d(0.0f, 1.0f);
  for (float& v : img.values()) v = d(rng);
  return img;
}

// content side s, bank from a style map of the same side, 64 channels
void BM_SwapBruteforce(benchmark::State& state) {
  const int s = static_cast<int>(state.range(0));
  const Tensor content = noise(64, s, s, 1);
  const PatchBank bank = extract_patches(noise(64, s, s, 2), 3);
  for (auto _ : state) benchmark::DoNotOptimize(swap_bruteforce(content, bank));
  state.counters["patches"] = static_cast<double>(bank.size());
}
BENCHMARK(BM_SwapBruteforce)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_SwapAccelerated(benchmark::State& state) {
  const int s = static_cast<int>(state.range(0));
  const Tensor content = noise(64, s, s, 1);
  const PatchBank bank = extract_patches(noise(64, s, s, 2), 3);
  for (auto _ : state) benchmark::DoNotOptimize(swap_accelerated(content, bank));
  state.counters["patches"] = static_cast<double>(bank.size());
}
BENCHMARK(BM_SwapAccelerated)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_SwapAcceleratedRelu4(benchmark::State& state) {
  const int s = static_cast<int>(state.range(0));
  const Tensor content = noise(512, s, s, 3);
  const PatchBank bank = extract_patches(noise(512, s, s, 4), 3);
  for (auto _ : state) benchmark::DoNotOptimize(swap_accelerated(content, bank));
}
BENCHMARK(BM_SwapAcceleratedRelu4)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_Conv3x3(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0)), s = static_cast<int>(state.range(1));
  std::mt19937_64 rng(5);
  nn::Conv2d conv("bench", c, c, 3, nn::Padding::reflect);
  conv.init_he(rng);
  const Tensor x = noise(c, s, s, 6);
  for (auto _ : state) benchmark::DoNotOptimize(conv.forward(x));
  state.counters["GMAC/s"] = benchmark::Counter(9.0 * c * c * s * s * 1e-9, benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_Conv3x3)->Args({64, 256})->Args({256, 64})->Args({512, 32})->Unit(benchmark::kMillisecond);

void BM_Encode(benchmark::State& state) {
  const int s = static_cast<int>(state.range(0));
  static const Encoder enc = Encoder::random(0);
  const Image img = noise_image(s, s, 7);
  for (auto _ : state) benchmark::DoNotOptimize(enc.encode(img));
}
BENCHMARK(BM_Encode)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_DecomposeClassical(benchmark::State& state) {
  const int s = static_cast<int>(state.range(0));
  const Image img = noise_image(s, s, 8);
  const FilterSpec f = default_illumination_filter(s, s);
  for (auto _ : state) benchmark::DoNotOptimize(decompose_classical(img, f));
}
BENCHMARK(BM_DecomposeClassical)->Arg(512)->Arg(1024)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
