#include "cgswap/decomposer.hpp"

#include <algorithm>
#include <cmath>

#include "cgswap/error.hpp"
#include "cgswap/tensor.hpp"

namespace cgswap {

FilterSpec default_illumination_filter(int height, int width) {
  const double sigma = 25.0 * std::max(height, width) / 512.0;
  return FilterSpec::gaussian(std::max(sigma, 0.5));
}

DecompositionPair decompose_classical(const Image& image, const FilterSpec& smoothing, float floor) {
  if (image.empty()) throw ArgumentError("cannot decompose an empty image");
  if (!(floor > 0.0f) || floor > 0.1f) throw ArgumentError("illumination floor must lie in (0, 0.1]");
  const Image lum = apply_filter(to_luminance(image), smoothing);

  DecompositionPair pair;
  pair.floor = floor;
  pair.illumination = Image(image.height(), image.width(), image.channels());
  pair.reflectance = Image(image.height(), image.width(), image.channels());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const float l = std::clamp(lum.at(y, x, 0), floor, 1.0f);
      for (int c = 0; c < image.channels(); ++c) {
        pair.illumination.at(y, x, c) = l;
        pair.reflectance.at(y, x, c) = image.at(y, x, c) / l;
      }
    }
  }
  return pair;
}

DecomNet::DecomNet() {
  net_.emplace<nn::Conv2d>("shallow", 4, kFeatures, 9, nn::Padding::zeros);
  for (int i = 1; i <= kDepth; ++i) {
    net_.emplace<nn::Conv2d>("activated_" + std::to_string(i), kFeatures, kFeatures, 3, nn::Padding::zeros);
    net_.emplace<nn::ReLU>();
  }
  net_.emplace<nn::Conv2d>("recon", kFeatures, 4, 3, nn::Padding::zeros);
}

DecomNet DecomNet::from_dict(const TensorDict& dict) {
  DecomNet net;
  for (nn::Parameter* p : net.net_.parameters()) {
    p->value = dict.require(p->name, p->shape).values;
  }
  return net;
}

DecomNet DecomNet::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError("Decom-Net weights not found at '" + path.string() +
                      "'; provide a converted weight file or use the classical decomposer "
                      "(decomposer = classical, or decom_fallback = true)");
  }
  return from_dict(read_tensor_dict(path));
}

DecomNet DecomNet::random(std::uint64_t seed) {
  DecomNet net;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < net.net_.size(); ++i) {
    if (auto* conv = dynamic_cast<nn::Conv2d*>(&net.net_[i])) conv->init_he(rng);
  }
  return net;
}

TensorDict DecomNet::to_dict() const {
  TensorDict dict;
  for (const nn::Parameter* p : net_.parameters()) dict.tensors[p->name] = {p->shape, p->value};
  dict.metadata["architecture"] = "decomnet";
  return dict;
}

DecompositionPair DecomNet::decompose(const Image& image) const {
  if (image.empty()) throw ArgumentError("cannot decompose an empty image");
  const Image rgb = to_rgb(image);
  Tensor input(4, rgb.height(), rgb.width());
  for (int y = 0; y < rgb.height(); ++y) {
    for (int x = 0; x < rgb.width(); ++x) {
      float m = 0.0f;
      for (int c = 0; c < 3; ++c) {
        input.at(c + 1, y, x) = rgb.at(y, x, c);
        m = std::max(m, rgb.at(y, x, c));
      }
      input.at(0, y, x) = m;
    }
  }
  const Tensor out = net_.forward(input);
  auto sigmoid = [](float v) { return 1.0f / (1.0f + std::exp(-v)); };

  DecompositionPair pair;
  pair.floor = kDefaultIlluminationFloor;
  pair.illumination = Image(image.height(), image.width(), image.channels());
  pair.reflectance = Image(image.height(), image.width(), image.channels());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const float l = sigmoid(out.at(3, y, x));
      float r[3];
      for (int c = 0; c < 3; ++c) r[c] = sigmoid(out.at(c, y, x));
      if (image.channels() == 1) {
        pair.reflectance.at(y, x, 0) = (r[0] + r[1] + r[2]) / 3.0f;
        pair.illumination.at(y, x, 0) = l;
      } else {
        for (int c = 0; c < 3; ++c) {
          pair.reflectance.at(y, x, c) = r[c];
          pair.illumination.at(y, x, c) = l;
        }
      }
    }
  }
  return pair;
}

DecompositionPair decompose_learned(const Image& image, const std::filesystem::path& weights) {
  return DecomNet::load(weights).decompose(image);
}

}  // namespace cgswap
