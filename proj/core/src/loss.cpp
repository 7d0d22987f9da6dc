#include "cgswap/loss.hpp"

#include <cmath>

#include "cgswap/error.hpp"

namespace cgswap {

void LossWeights::validate() const {
  for (double w : perceptual) {
    if (!std::isfinite(w) || w < 0.0) throw ArgumentError("perceptual weights must be finite and >= 0");
  }
  if (!std::isfinite(tv) || tv < 0.0) throw ArgumentError("tv weight must be finite and >= 0");
}

double total_variation(const Tensor& t) {
  double s = 0.0;
  for (int c = 0; c < t.channels(); ++c) {
    for (int y = 0; y < t.height(); ++y) {
      for (int x = 0; x < t.width(); ++x) {
        if (x + 1 < t.width()) s += std::fabs(static_cast<double>(t.at(c, y, x + 1)) - t.at(c, y, x));
        if (y + 1 < t.height()) s += std::fabs(static_cast<double>(t.at(c, y + 1, x)) - t.at(c, y, x));
      }
    }
  }
  return s;
}

namespace {

void add_tv_gradient(const Tensor& t, float weight, Tensor& grad) {
  auto sign = [](float d) { return d > 0.0f ? 1.0f : (d < 0.0f ? -1.0f : 0.0f); };
  for (int c = 0; c < t.channels(); ++c) {
    for (int y = 0; y < t.height(); ++y) {
      for (int x = 0; x < t.width(); ++x) {
        if (x + 1 < t.width()) {
          const float s = weight * sign(t.at(c, y, x + 1) - t.at(c, y, x));
          grad.at(c, y, x + 1) += s;
          grad.at(c, y, x) -= s;
        }
        if (y + 1 < t.height()) {
          const float s = weight * sign(t.at(c, y + 1, x) - t.at(c, y, x));
          grad.at(c, y + 1, x) += s;
          grad.at(c, y, x) -= s;
        }
      }
    }
  }
}

}  // namespace

LossBreakdown reconstruction_loss(const Tensor& input, const LayerActivations& input_features,
                                  const Tensor& reconstruction, const Encoder& encoder,
                                  const LossWeights& weights, Tensor* grad) {
  weights.validate();
  if (!input.same_shape(reconstruction)) throw ArgumentError("loss requires equal image shapes");
  LossBreakdown out;

  if (grad) *grad = Tensor(reconstruction.channels(), reconstruction.height(), reconstruction.width());
  for (std::size_t i = 0; i < input.size(); ++i) {
    const double d = static_cast<double>(reconstruction.values()[i]) - input.values()[i];
    out.pixel += d * d;
    if (grad) grad->values()[i] = static_cast<float>(2.0 * d);
  }

  if (reconstruction.channels() != 3) throw ArgumentError("perceptual loss expects RGB images");
  LayerSet active;
  for (int i = 0; i < kVggTapCount; ++i) {
    if (weights.perceptual[i] > 0.0) active.insert(static_cast<VggLayer>(i));
  }
  if (!active.empty()) {
    Encoder::Trace trace;
    const LayerActivations rec_feats = encoder.forward(reconstruction, active, grad ? &trace : nullptr);
    std::array<Tensor, kVggTapCount> tap_grads;
    for (int i = 0; i < kVggTapCount; ++i) {
      const auto l = static_cast<VggLayer>(i);
      if (!active.contains(l)) continue;
      const FeatureMap& a = input_features.at(l);
      const FeatureMap& b = rec_feats.at(l);
      if (!a.same_shape(b)) throw ArgumentError("input features do not match reconstruction size");
      const double w = weights.perceptual[i];
      double s = 0.0;
      if (grad) tap_grads[i] = Tensor(b.channels(), b.height(), b.width());
      for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = static_cast<double>(b.values()[k]) - a.values()[k];
        s += d * d;
        if (grad) tap_grads[i].values()[k] = static_cast<float>(2.0 * w * d);
      }
      out.perceptual[i] = w * s;
    }
    if (grad) *grad += encoder.backward_input(trace, tap_grads);
  }

  out.tv = weights.tv * total_variation(reconstruction);
  if (grad && weights.tv > 0.0) add_tv_gradient(reconstruction, static_cast<float>(weights.tv), *grad);

  out.total = out.pixel + out.tv;
  for (double p : out.perceptual) out.total += p;
  return out;
}

LossBreakdown compute_loss(const Image& input, const Image& reconstruction, const Encoder& encoder,
                           const LossWeights& weights) {
  if (!input.same_shape(reconstruction)) throw ArgumentError("loss requires equal image shapes");
  const Tensor a = to_tensor(to_rgb(input));
  const Tensor b = to_tensor(to_rgb(reconstruction));
  bool any = false;
  for (double w : weights.perceptual) any = any || w > 0.0;
  LayerActivations feats;
  if (any) feats = encoder.forward(a, LayerSet::all());

  LossBreakdown out = reconstruction_loss(a, feats, b, encoder, weights, nullptr);
  if (input.channels() == 1) {
    // The pixel and tv terms are defined on the image as given, not on its
    // RGB broadcast.
    const Tensor a1 = to_tensor(input);
    const Tensor b1 = to_tensor(reconstruction);
    out.pixel = 0.0;
    for (std::size_t i = 0; i < a1.size(); ++i) {
      const double d = static_cast<double>(b1.values()[i]) - a1.values()[i];
      out.pixel += d * d;
    }
    weights.validate();
    out.tv = weights.tv * total_variation(b1);
    out.total = out.pixel + out.tv;
    for (double p : out.perceptual) out.total += p;
  }
  return out;
}

}  // namespace cgswap
