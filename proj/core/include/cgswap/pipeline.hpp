#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cgswap/config.hpp"
#include "cgswap/decomposer.hpp"
#include "cgswap/fusion.hpp"
#include "cgswap/grouping.hpp"
#include "cgswap/image.hpp"
#include "cgswap/swap.hpp"
#include "cgswap/vgg.hpp"

namespace cgswap {

enum class DecomposerKind { classical, learned };
/// shared: the content-derived mask groups both F_C and F_S.
/// independent: the style image is decomposed too and gets its own mask.
enum class StyleMaskMode { shared, independent };

std::string to_string(DecomposerKind kind);
DecomposerKind parse_decomposer(const std::string& name);
std::string to_string(StyleMaskMode mode);
StyleMaskMode parse_style_mask(const std::string& name);

struct StylizeOptions {
  DecomposerKind decomposer = DecomposerKind::classical;
  std::vector<double> scales{1.0, 2.0 / 3.0};
  int patch = 3;
  bool fuse = false;
  FusionConfig fusion;
  StyleMaskMode style_mask = StyleMaskMode::shared;
  float illumination_floor = kDefaultIlluminationFloor;
  /// Also decode I_LS and I_RS when fusion is off.
  bool decode_parts = false;

  void validate() const;
};

struct StylizeConfig {
  std::filesystem::path content;
  std::filesystem::path style;
  std::filesystem::path output;
  StylizeOptions options;
  /// The literal "random" selects seeded random weights.
  std::filesystem::path encoder_weights = "weights/vgg19_conv4_1.wt";
  std::filesystem::path decoder_weights = "weights/decoder.wt";
  std::filesystem::path decomnet_weights = "weights/decomnet.wt";
  /// Use the classical decomposer when the learned weights cannot be loaded.
  bool decom_fallback = false;
  std::uint64_t seed = 0;
  bool emit_intermediates = false;
  bool resize = true;
  int max_side = 1024;

  /// Overrides fields from config keys (see README for the key list).
  void apply(const ConfigFile& file);
  void validate() const;
};

struct StageTimings {
  double retinex = 0.0;  // decomposition
  double cgps = 0.0;     // encode, group, swap, decode, fuse
  double total = 0.0;    // independent wall clock around both
};

struct StylizeResult {
  Image output;
  DecompositionPair decomposition;
  ChannelMask mask;        // content mask (surface = 1)
  ChannelMask style_mask;  // equals `mask` in shared mode
  SwapResult surface_swap;
  SwapResult texture_swap;
  std::size_t bank_size = 0;  // patches per group bank
  std::optional<Image> surface_image;  // I_LS
  std::optional<Image> texture_image;  // I_RS
  StageTimings timings;
  /// Set when decom_fallback replaced a failed learned decomposer.
  bool used_fallback = false;
};

class Stylizer {
 public:
  Stylizer(Encoder encoder, Decoder decoder, std::optional<DecomNet> decomnet = std::nullopt);

  /// Inputs must already be RGB and at least 32 px on each side.
  StylizeResult run(const Image& content, const Image& style, const StylizeOptions& options) const;

  const Encoder& encoder() const noexcept { return encoder_; }
  const Decoder& decoder() const noexcept { return decoder_; }

 private:
  DecompositionPair decompose(const Image& image, const StylizeOptions& options) const;

  Encoder encoder_;
  Decoder decoder_;
  std::optional<DecomNet> decomnet_;
};

/// RGB conversion and, when `resize` is set, downscaling so the larger side
/// is at most `max_side`.
Image prepare_input(const Image& image, bool resize, int max_side);

/// Throws Error unless every value is finite and in [0, 1].
void validate_output(const Image& image);

Encoder load_encoder(const std::filesystem::path& path, std::uint64_t seed);
Decoder load_decoder(const std::filesystem::path& path, std::uint64_t seed);

/// Full run from files: loads inputs and weights, stylizes, validates and
/// writes the output (plus _L, _R, _LS, _RS images with emit_intermediates).
/// Failures are raised as StageError naming the stage.
StylizeResult stylize(const StylizeConfig& config);

}  // namespace cgswap
