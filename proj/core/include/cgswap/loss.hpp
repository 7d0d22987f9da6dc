#pragma once

#include <array>

#include "cgswap/image.hpp"
#include "cgswap/tensor.hpp"
#include "cgswap/vgg.hpp"

namespace cgswap {

/// Reconstruction loss weights. The perceptual weights default to 1 for
/// conv1_1..conv4_1 and the total-variation weight to 1e-6.
struct LossWeights {
  std::array<double, kVggTapCount> perceptual{1.0, 1.0, 1.0, 1.0};
  double tv = 1e-6;

  void validate() const;
};

struct LossBreakdown {
  double pixel = 0.0;
  std::array<double, kVggTapCount> perceptual{};  // already weighted
  double tv = 0.0;                                // already weighted
  double total = 0.0;
};

/// Sum of |horizontal| + |vertical| neighbour differences over all planes.
double total_variation(const Tensor& image);

/// Squared L2 pixel term + weighted squared L2 perceptual terms + weighted
/// total variation of the reconstruction.
LossBreakdown compute_loss(const Image& input, const Image& reconstruction, const Encoder& encoder,
                           const LossWeights& weights);

/// Tensor form used by training. `input_features` must hold every tap with a
/// non-zero weight. When `grad` is non-null it receives dLoss/dreconstruction.
LossBreakdown reconstruction_loss(const Tensor& input, const LayerActivations& input_features,
                                  const Tensor& reconstruction, const Encoder& encoder,
                                  const LossWeights& weights, Tensor* grad);

}  // namespace cgswap
