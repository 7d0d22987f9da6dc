#pragma once

#include <cstdint>
#include <filesystem>

#include "cgswap/filters.hpp"
#include "cgswap/image.hpp"
#include "cgswap/nn.hpp"
#include "cgswap/safetensors.hpp"

namespace cgswap {

/// Retinex split S = R * L.
///
/// `illumination` has the channel count of the source (a single luminance
/// plane broadcast) and lies in [floor, 1]. `reflectance` is non-negative
/// and may exceed 1; clamp it before display or encoding.
struct DecompositionPair {
  Image illumination;
  Image reflectance;
  float floor = 0.01f;
};

inline constexpr float kDefaultIlluminationFloor = 0.01f;

/// Gaussian with sigma = 25 px at a 512 px long side, scaled with the image.
FilterSpec default_illumination_filter(int height, int width);

/// L = clamp(smooth(luminance(S)), floor, 1) broadcast over channels,
/// R = S / L. Reconstruction R * L equals S up to float rounding.
DecompositionPair decompose_classical(const Image& image, const FilterSpec& smoothing,
                                      float floor = kDefaultIlluminationFloor);

/// Decomposition network with the published Decom-Net layout:
/// [max(RGB), R, G, B] -> 9x9 conv (64) -> 5 x (3x3 conv + ReLU) -> 3x3 conv (4)
/// -> sigmoid; channels 0..2 are reflectance, channel 3 illumination.
///
/// Tensor names: shallow.{weight,bias}, activated_{1..5}.{weight,bias},
/// recon.{weight,bias}; weights are out x in x k x k.
class DecomNet {
 public:
  static constexpr int kFeatures = 64;
  static constexpr int kDepth = 5;

  static DecomNet from_dict(const TensorDict& dict);
  static DecomNet load(const std::filesystem::path& path);
  static DecomNet random(std::uint64_t seed);

  TensorDict to_dict() const;

  DecompositionPair decompose(const Image& image) const;

  /// Direct access for constructing analytic test networks.
  nn::Sequential& layers() noexcept { return net_; }

 private:
  DecomNet();
  nn::Sequential net_;
};

/// Loads weights from `weights` and runs DecomNet. Missing or incompatible
/// weights raise ConfigError.
DecompositionPair decompose_learned(const Image& image, const std::filesystem::path& weights);

}  // namespace cgswap
