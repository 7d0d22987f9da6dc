#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "cgswap/grouping.hpp"
#include "cgswap/image.hpp"
#include "cgswap/tensor.hpp"
#include "cgswap/vgg.hpp"

namespace cgswap {

/// A feature map tagged with the style scale it was encoded at.
struct ScaledFeature {
  double scale = 1.0;
  FeatureMap feature;
};

struct PatchOrigin {
  int source = 0;  // index into the bank's sources, in insertion order
  double scale = 1.0;
  int y = 0;
  int x = 0;
};

/// Every p x p window (stride 1, no padding) of one or more style feature
/// maps. Patches are ordered by source (insertion order), then row-major by
/// window origin. Each source keeps its raw values, used to rebuild swapped
/// features, and a channel-centered copy, used for scoring.
class PatchBank {
 public:
  struct Source {
    double scale;
    FeatureMap values;
    FeatureMap centered;
  };

  explicit PatchBank(int patch_side);

  /// Appends all windows of `feature`. Channel count must match earlier
  /// sources.
  void add_source(double scale, FeatureMap feature);

  std::size_t size() const noexcept { return origins_.size(); }
  bool empty() const noexcept { return origins_.empty(); }
  int patch_side() const noexcept { return side_; }
  int channels() const noexcept { return channels_; }
  std::size_t patch_length() const noexcept {
    return static_cast<std::size_t>(channels_) * side_ * side_;
  }

  const PatchOrigin& origin(std::size_t j) const { return origins_.at(j); }
  const std::vector<Source>& sources() const noexcept { return sources_; }

  /// Channel-major C x p x p copies.
  std::vector<float> patch(std::size_t j) const;
  std::vector<float> centered_patch(std::size_t j) const;

 private:
  int side_;
  int channels_ = 0;
  std::vector<Source> sources_;
  std::vector<PatchOrigin> origins_;
};

struct SwapResult {
  FeatureMap swapped;
  /// Chosen bank index per content window, row-major over the
  /// (h - p + 1) x (w - p + 1) window grid.
  std::vector<std::int32_t> assignment;
  std::vector<double> best_score;
  /// Best minus runner-up score per window (brute force only; +inf for a
  /// single-patch bank).
  std::vector<double> top2_gap;
  int grid_height = 0;
  int grid_width = 0;
  /// Candidates re-scored in double precision (accelerated path only).
  std::size_t rescored = 0;
};

/// Subtracts each channel's spatial mean.
FeatureMap center_channels(const FeatureMap& feature);

/// Single-source bank at scale 1. Only stride 1 is supported.
PatchBank extract_patches(const FeatureMap& feature, int patch_side, int stride = 1);

PatchBank build_bank(std::span<const ScaledFeature> features, int patch_side);

/// relu4_1 features of the style image at each scale, in the given order.
/// Throws ArgumentError naming the scale when a resized image is too small
/// to encode.
std::vector<ScaledFeature> encode_multiscale(const Image& style, std::span<const double> scales,
                                             const Encoder& encoder);

PatchBank build_multiscale_bank(const Image& style, std::span<const double> scales,
                                const Encoder& encoder, int patch_side);

/// Un-normalized inner product of two centered patches, double accumulation.
double upcc_score(std::span<const float> content_patch, std::span<const float> style_patch);

/// Exhaustive argmax per window (ties to the lowest bank index), then
/// overlap-averaged placement of the winning raw patches.
SwapResult swap_bruteforce(const FeatureMap& content, const PatchBank& bank);

/// Brute-force decision for one window of an already-centered content map.
struct WindowMatch {
  std::int32_t index = 0;
  double score = 0.0;
  double gap = 0.0;
};
WindowMatch match_window_bruteforce(const FeatureMap& centered_content, const PatchBank& bank, int y, int x);

/// Correlation of all content windows with the stacked style kernel as one
/// GEMM, one-hot selection of the maximum, and transposed-convolution
/// placement with overlap averaging. Float GEMM scores are screened with a
/// rounding-error bound; every candidate inside the bound is re-scored in
/// double precision, so assignments equal swap_bruteforce exactly.
SwapResult swap_accelerated(const FeatureMap& content, const PatchBank& bank);

/// Independent swap per channel group (each group's content and bank keep
/// only that group's channels); the per-group results are summed.
FeatureMap swap_grouped(const FeatureMap& content, std::span<const ScaledFeature> style,
                        std::span<const ChannelMask> groups, int patch_side);

/// Applies `mask` to every scale of a multi-scale style feature set.
std::vector<ScaledFeature> select_channels(std::span<const ScaledFeature> style, const ChannelMask& mask);

/// CSV: location,y,x,bank_index,scale,origin_y,origin_x
void write_assignment_csv(std::ostream& out, const SwapResult& result, const PatchBank& bank);

}  // namespace cgswap
