#pragma once

#include <ostream>
#include <vector>

#include "cgswap/image.hpp"
#include "cgswap/pipeline.hpp"

namespace cgswap {

struct BenchColumn {
  int size = 0;
  StageTimings median;
  std::vector<StageTimings> runs;
};

struct BenchReport {
  std::vector<BenchColumn> columns;
  int runs = 0;
};

/// Reference totals (seconds) printed next to the measurements.
inline constexpr double kReferenceTotal512 = 0.71;
inline constexpr double kReferenceTotal1024 = 1.67;

/// Deterministic smooth colour pattern with fine noise; bench fallback input.
Image synthetic_image(int height, int width, std::uint64_t seed);

/// Times the full flow (fusion on by default in `options`) at size x size,
/// `runs` times per size, stages run serially. Medians per stage.
BenchReport run_bench(const Stylizer& stylizer, const Image& content, const Image& style,
                      const std::vector<int>& sizes, int runs, const StylizeOptions& options);

/// Three rows (Retinex, CGPS, total) by one column per size.
void write_bench_table(std::ostream& out, const BenchReport& report);
/// size,stage,median_seconds
void write_bench_csv(std::ostream& out, const BenchReport& report);

}  // namespace cgswap
