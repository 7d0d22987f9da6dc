#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cgswap/image.hpp"
#include "cgswap/nn.hpp"
#include "cgswap/safetensors.hpp"
#include "cgswap/tensor.hpp"

namespace cgswap {

/// Encoder taps (post-ReLU activations), shallow to deep.
enum class VggLayer { conv1_1 = 0, conv2_1 = 1, conv3_1 = 2, conv4_1 = 3 };

inline constexpr int kVggTapCount = 4;
inline constexpr std::array<int, kVggTapCount> kVggTapChannels{64, 128, 256, 512};
inline constexpr std::array<int, kVggTapCount> kVggTapStride{1, 2, 4, 8};

std::string_view layer_name(VggLayer layer);
VggLayer parse_layer(std::string_view name);

class LayerSet {
 public:
  LayerSet() = default;
  LayerSet(std::initializer_list<VggLayer> layers) {
    for (VggLayer l : layers) bits_.set(static_cast<int>(l));
  }
  static LayerSet all() { return {VggLayer::conv1_1, VggLayer::conv2_1, VggLayer::conv3_1, VggLayer::conv4_1}; }

  void insert(VggLayer l) { bits_.set(static_cast<int>(l)); }
  bool contains(VggLayer l) const { return bits_.test(static_cast<int>(l)); }
  bool empty() const { return bits_.none(); }
  int deepest() const;

 private:
  std::bitset<kVggTapCount> bits_;
};

struct LayerActivations {
  std::array<std::optional<FeatureMap>, kVggTapCount> maps;

  bool has(VggLayer l) const { return maps[static_cast<int>(l)].has_value(); }
  /// Throws ArgumentError when the layer was not computed.
  const FeatureMap& at(VggLayer l) const;
  FeatureMap& at(VggLayer l);
};

/// VGG-19 up to relu4_1, frozen.
///
/// Weight names follow conv{block}_{index}.{weight,bias} for the nine
/// convolutions conv1_1 .. conv4_1, plus optional preprocess.mean and
/// preprocess.std (length 3) applied to the [0,1] RGB input. Without them
/// ImageNet statistics are used.
class Encoder {
 public:
  static constexpr int kMinInputSide = 32;

  struct Trace {
    std::array<std::vector<Tensor>, kVggTapCount> segments;
    int depth = 0;
  };

  static Encoder from_dict(const TensorDict& dict);
  static Encoder load(const std::filesystem::path& path);
  /// Seeded He-normal weights; stand-in when no pretrained file exists.
  static Encoder random(std::uint64_t seed);

  TensorDict to_dict() const;

  /// Throws ArgumentError for inputs smaller than kMinInputSide.
  LayerActivations encode(const Image& image, LayerSet layers = LayerSet::all()) const;

  /// Forward from an unnormalized 3 x H x W tensor in image range.
  LayerActivations forward(const Tensor& rgb, LayerSet layers, Trace* trace = nullptr) const;

  /// Gradient at the rgb input given gradients at the tapped activations.
  /// Empty tensors in `grads` contribute nothing.
  Tensor backward_input(const Trace& trace, const std::array<Tensor, kVggTapCount>& grads) const;

  std::uint64_t checksum() const;
  std::vector<const nn::Parameter*> parameters() const;

 private:
  Encoder();
  std::array<nn::Sequential, kVggTapCount> segments_;
  std::array<float, 3> mean_{0.485f, 0.456f, 0.406f};
  std::array<float, 3> std_{0.229f, 0.224f, 0.225f};
};

/// Mirror of the encoder: nearest upsampling + 3x3 reflect-padded
/// convolutions. relu2_1 and relu1_1 activations of the content image are
/// concatenated before the dec2_2 and dec1_2 stages.
class Decoder {
 public:
  struct Trace {
    std::array<std::vector<Tensor>, 3> stages;
  };

  static Decoder from_dict(const TensorDict& dict);
  static Decoder load(const std::filesystem::path& path);
  static Decoder random(std::uint64_t seed);

  TensorDict to_dict() const;

  /// Raw (unclamped) output. Null skips are replaced by zeros. With skips,
  /// intermediate maps are cropped to the skip sizes so the output matches
  /// the encoded image; without, the output is 8x the feature size.
  Tensor forward(const FeatureMap& feature, const FeatureMap* skip2, const FeatureMap* skip1,
                 Trace* trace = nullptr) const;

  /// Accumulates parameter gradients. Cropped regions receive zero gradient.
  void backward(const Trace& trace, const Tensor& grad_output);

  std::vector<nn::Parameter*> parameters();
  std::vector<const nn::Parameter*> parameters() const;
  void zero_grad();

 private:
  Decoder();
  std::array<nn::Sequential, 3> stages_;
};

/// Decodes a relu4_1 feature map to an image clamped to [0, 1].
/// `skip` may be null; when given it must hold conv1_1 and conv2_1.
Image decode(const FeatureMap& feature, const Decoder& decoder, const LayerActivations* skip);

}  // namespace cgswap
