#include "cgswap/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "cgswap/error.hpp"

namespace cgswap {

void FusionConfig::validate() const {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ArgumentError("fusion delta must be positive");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ArgumentError("fusion epsilon must be >= 0");
  if (!(tau >= 0.0 && tau <= 1.0)) throw ArgumentError("fusion tau must lie in [0, 1]");
}

std::string to_string(FusionMode mode) { return mode == FusionMode::verbatim ? "verbatim" : "shifted"; }

FusionMode parse_fusion_mode(const std::string& name) {
  if (name == "verbatim") return FusionMode::verbatim;
  if (name == "shifted") return FusionMode::shifted;
  throw ArgumentError("unknown fusion mode: " + name + " (expected verbatim or shifted)");
}

WeightMap complementary_weights(const Image& texture) {
  const Image lum = to_luminance(texture);
  WeightMap w(lum.height(), lum.width());
  for (int y = 0; y < lum.height(); ++y) {
    for (int x = 0; x < lum.width(); ++x) w.at(y, x) = std::clamp(1.0f - lum.at(y, x, 0), 0.0f, 1.0f);
  }
  return w;
}

WeightMap activate_weights(const WeightMap& weights, const FusionConfig& config) {
  config.validate();
  WeightMap out(weights.height(), weights.width());
  for (std::size_t i = 0; i < out.values().size(); ++i) {
    const double cw = weights.values()[i];
    const double v = config.mode == FusionMode::verbatim
                         ? 1.0 / (1.0 + std::exp(-cw * config.delta) + config.epsilon)
                         : 1.0 / (1.0 + std::exp(-(cw - config.tau) * config.delta));
    out.values()[i] = static_cast<float>(v);
  }
  return out;
}

Image fuse_relaxed(const Image& texture, const Image& surface, const WeightMap& activated, double alpha) {
  if (!texture.same_shape(surface)) throw ArgumentError("texture and surface images differ in shape");
  if (activated.height() != texture.height() || activated.width() != texture.width()) {
    throw ArgumentError("weight map does not match image size");
  }
  Image out(texture.height(), texture.width(), texture.channels());
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      const double w = alpha * activated.at(y, x);
      for (int c = 0; c < out.channels(); ++c) {
        out.at(y, x, c) = static_cast<float>(texture.at(y, x, c) + w * surface.at(y, x, c));
      }
    }
  }
  clamp01(out);
  return out;
}

Image fuse(const Image& texture, const Image& surface, const WeightMap& activated) {
  return fuse_relaxed(texture, surface, activated, 1.0);
}

}  // namespace cgswap
