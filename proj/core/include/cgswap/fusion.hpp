#pragma once

#include <string>

#include "cgswap/image.hpp"

namespace cgswap {

enum class FusionMode {
  verbatim,  // 1 / (1 + exp(-cw * delta) + epsilon)
  shifted,   // 1 / (1 + exp(-(cw - tau) * delta))
};

struct FusionConfig {
  double delta = 15.0;
  double epsilon = 0.0;
  double tau = 0.6;
  FusionMode mode = FusionMode::shifted;

  void validate() const;
};

std::string to_string(FusionMode mode);
FusionMode parse_fusion_mode(const std::string& name);

/// cw = 1 - luminance(texture) (pixel range [0, 1], so Max = 1).
WeightMap complementary_weights(const Image& texture);

/// Sigmoid-style activation of the complementary weights.
WeightMap activate_weights(const WeightMap& weights, const FusionConfig& config);

/// texture + activated * surface, weights broadcast over channels, clamped.
Image fuse(const Image& texture, const Image& surface, const WeightMap& activated);

/// fuse() with the surface term additionally scaled by `alpha` (relaxation
/// factor knob for the fusion ablation).
Image fuse_relaxed(const Image& texture, const Image& surface, const WeightMap& activated, double alpha);

}  // namespace cgswap
