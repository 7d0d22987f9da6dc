#include "cgswap/bench.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include "cgswap/error.hpp"

namespace cgswap {

Image synthetic_image(int height, int width, std::uint64_t seed) {
  Image img(height, width, 3);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> noise(-0.05f, 0.05f);
  std::uniform_real_distribution<double> phase(0.0, 6.283185307179586);
  const double p[3] = {phase(rng), phase(rng), phase(rng)};
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double u = static_cast<double>(x) / width, v = static_cast<double>(y) / height;
      for (int c = 0; c < 3; ++c) {
        const double base = 0.5 + 0.35 * std::sin(6.0 * u + 4.0 * v + p[c]) * std::cos(5.0 * v - 3.0 * u + p[c]);
        img.at(y, x, c) = std::clamp(static_cast<float>(base) + noise(rng), 0.0f, 1.0f);
      }
    }
  }
  return img;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

BenchReport run_bench(const Stylizer& stylizer, const Image& content, const Image& style,
                      const std::vector<int>& sizes, int runs, const StylizeOptions& options) {
  if (runs < 1) throw ArgumentError("bench needs at least one run");
  if (sizes.empty()) throw ArgumentError("bench needs at least one size");
  BenchReport report;
  report.runs = runs;
  for (int size : sizes) {
    if (size < Encoder::kMinInputSide) throw ArgumentError("bench size must be >= 32");
    const Image c = resize_to(to_rgb(content), size, size);
    const Image s = resize_to(to_rgb(style), size, size);
    BenchColumn col;
    col.size = size;
    std::vector<double> retinex, cgps, total;
    for (int r = 0; r < runs; ++r) {
      const StageTimings t = stylizer.run(c, s, options).timings;
      col.runs.push_back(t);
      retinex.push_back(t.retinex);
      cgps.push_back(t.cgps);
      total.push_back(t.total);
    }
    col.median = {median(retinex), median(cgps), median(total)};
    report.columns.push_back(std::move(col));
  }
  return report;
}

void write_bench_table(std::ostream& out, const BenchReport& report) {
  auto header = [](int size) { return std::to_string(size) + "x" + std::to_string(size); };
  out << "Execution time (seconds, median of " << report.runs << " runs)\n";
  out << std::left << std::setw(18) << "Method";
  for (const auto& col : report.columns) out << std::right << std::setw(12) << header(col.size);
  out << '\n';
  const std::array<std::pair<const char*, double StageTimings::*>, 3> rows{
      {{"Ours (Retinex)", &StageTimings::retinex}, {"Ours (CGPS)", &StageTimings::cgps},
       {"Ours (total)", &StageTimings::total}}};
  out << std::fixed << std::setprecision(3);
  for (const auto& [name, field] : rows) {
    out << std::left << std::setw(18) << name;
    for (const auto& col : report.columns) out << std::right << std::setw(12) << col.median.*field;
    out << '\n';
  }
  out << "Reference total (GPU): " << std::setprecision(2) << kReferenceTotal512 << " s @512, "
      << kReferenceTotal1024 << " s @1024\n";
  out.unsetf(std::ios::floatfield);
}

void write_bench_csv(std::ostream& out, const BenchReport& report) {
  out << "size,stage,median_seconds\n" << std::setprecision(9);
  for (const auto& col : report.columns) {
    out << col.size << ",retinex," << col.median.retinex << '\n';
    out << col.size << ",cgps," << col.median.cgps << '\n';
    out << col.size << ",total," << col.median.total << '\n';
  }
}

}  // namespace cgswap
