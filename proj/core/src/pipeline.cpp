#include "cgswap/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>

#include "cgswap/error.hpp"
#include "cgswap/tensor.hpp"

namespace cgswap {

namespace fs = std::filesystem;

std::string to_string(DecomposerKind kind) {
  return kind == DecomposerKind::classical ? "classical" : "learned";
}

DecomposerKind parse_decomposer(const std::string& name) {
  if (name == "classical") return DecomposerKind::classical;
  if (name == "learned") return DecomposerKind::learned;
  throw ConfigError("unknown decomposer '" + name + "' (classical|learned)");
}

std::string to_string(StyleMaskMode mode) {
  return mode == StyleMaskMode::shared ? "shared" : "independent";
}

StyleMaskMode parse_style_mask(const std::string& name) {
  if (name == "shared") return StyleMaskMode::shared;
  if (name == "independent") return StyleMaskMode::independent;
  throw ConfigError("unknown style_mask '" + name + "' (shared|independent)");
}

void StylizeOptions::validate() const {
  if (patch < 1) throw ConfigError("patch side must be >= 1");
  if (scales.empty()) throw ConfigError("scales must not be empty");
  for (double s : scales) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("scales must be positive");
  }
  if (!(illumination_floor > 0.0f) || illumination_floor > 0.1f) {
    throw ConfigError("illumination floor must lie in (0, 0.1]");
  }
  try {
    fusion.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
}

void StylizeConfig::apply(const ConfigFile& f) {
  f.require_known({"content", "style", "output", "decomposer", "scales", "patch", "fuse", "fusion_mode",
                   "fusion_delta", "fusion_epsilon", "fusion_tau", "style_mask", "illumination_floor",
                   "encoder_weights", "decoder_weights", "decomnet_weights", "decom_fallback", "seed", "emit_intermediates",
                   "resize", "max_side"});
  content = f.get_path("content", content);
  style = f.get_path("style", style);
  output = f.get_path("output", output);
  if (auto v = f.get("decomposer")) options.decomposer = parse_decomposer(*v);
  options.scales = f.get_doubles("scales", options.scales);
  options.patch = f.get_int("patch", options.patch);
  options.fuse = f.get_bool("fuse", options.fuse);
  if (auto v = f.get("fusion_mode")) options.fusion.mode = parse_fusion_mode(*v);
  options.fusion.delta = f.get_double("fusion_delta", options.fusion.delta);
  options.fusion.epsilon = f.get_double("fusion_epsilon", options.fusion.epsilon);
  options.fusion.tau = f.get_double("fusion_tau", options.fusion.tau);
  if (auto v = f.get("style_mask")) options.style_mask = parse_style_mask(*v);
  options.illumination_floor = static_cast<float>(f.get_double("illumination_floor", options.illumination_floor));
  auto weights_path = [&](const char* key, const fs::path& fallback) {
    auto v = f.get(key);
    if (v && *v == "random") return fs::path("random");
    return f.get_path(key, fallback);
  };
  encoder_weights = weights_path("encoder_weights", encoder_weights);
  decoder_weights = weights_path("decoder_weights", decoder_weights);
  decomnet_weights = weights_path("decomnet_weights", decomnet_weights);
  decom_fallback = f.get_bool("decom_fallback", decom_fallback);
  seed = static_cast<std::uint64_t>(f.get_double("seed", static_cast<double>(seed)));
  emit_intermediates = f.get_bool("emit_intermediates", emit_intermediates);
  resize = f.get_bool("resize", resize);
  max_side = f.get_int("max_side", max_side);
}

void StylizeConfig::validate() const {
  if (content.empty() || style.empty() || output.empty()) {
    throw ConfigError("content, style and output paths are required");
  }
  if (max_side < Encoder::kMinInputSide) throw ConfigError("max_side must be >= 32");
  options.validate();
}

Image prepare_input(const Image& image, bool resize_input, int max_side) {
  Image rgb = to_rgb(image);
  const int longest = std::max(rgb.height(), rgb.width());
  if (resize_input && longest > max_side) {
    const double s = static_cast<double>(max_side) / longest;
    const int h = std::max(1, static_cast<int>(std::lround(rgb.height() * s)));
    const int w = std::max(1, static_cast<int>(std::lround(rgb.width() * s)));
    rgb = resize_to(rgb, h, w);
  }
  return rgb;
}

void validate_output(const Image& image) {
  if (!in_unit_range(image)) throw Error("output contains non-finite or out-of-range values");
}

Encoder load_encoder(const fs::path& path, std::uint64_t seed) {
  if (path == "random") return Encoder::random(seed);
  return Encoder::load(path);
}

Decoder load_decoder(const fs::path& path, std::uint64_t seed) {
  if (path == "random") return Decoder::random(seed + 1);
  return Decoder::load(path);
}

Stylizer::Stylizer(Encoder encoder, Decoder decoder, std::optional<DecomNet> decomnet)
    : encoder_(std::move(encoder)), decoder_(std::move(decoder)), decomnet_(std::move(decomnet)) {}

DecompositionPair Stylizer::decompose(const Image& image, const StylizeOptions& options) const {
  if (options.decomposer == DecomposerKind::learned) {
    if (!decomnet_) throw ConfigError("learned decomposer selected but no Decom-Net weights were loaded");
    return decomnet_->decompose(image);
  }
  return decompose_classical(image, default_illumination_filter(image.height(), image.width()),
                             options.illumination_floor);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <class F>
auto stage(const char* name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

Image clamped(const Image& image) {
  Image out = image;
  clamp01(out);
  return out;
}

ChannelMask mask_from(const DecompositionPair& pair, const Encoder& encoder) {
  const LayerSet deep{VggLayer::conv4_1};
  const FeatureMap f_l = encoder.encode(pair.illumination, deep).at(VggLayer::conv4_1);
  const FeatureMap f_r = encoder.encode(clamped(pair.reflectance), deep).at(VggLayer::conv4_1);
  return compute_mask(gap(f_l), gap(f_r));
}

}  // namespace

StylizeResult Stylizer::run(const Image& content, const Image& style, const StylizeOptions& options) const {
  options.validate();
  StylizeResult result;
  const auto t_total = Clock::now();

  auto t0 = Clock::now();
  result.decomposition = stage("decompose", [&] { return decompose(content, options); });
  result.timings.retinex = seconds_since(t0);

  t0 = Clock::now();
  const LayerSet content_layers{VggLayer::conv1_1, VggLayer::conv2_1, VggLayer::conv4_1};
  const LayerActivations content_feats = stage("encode", [&] { return encoder_.encode(content, content_layers); });
  const FeatureMap& f_c = content_feats.at(VggLayer::conv4_1);

  result.mask = stage("group", [&] { return mask_from(result.decomposition, encoder_); });
  result.style_mask = result.mask;
  if (options.style_mask == StyleMaskMode::independent) {
    result.style_mask = stage("group", [&] { return mask_from(decompose(style, options), encoder_); });
  }

  const std::vector<ScaledFeature> style_feats =
      stage("encode", [&] { return encode_multiscale(style, options.scales, encoder_); });
  const GroupedFeatures content_groups = split(f_c, result.mask);

  stage("swap", [&] {
    const PatchBank surface_bank =
        build_bank(select_channels(style_feats, result.style_mask), options.patch);
    const PatchBank texture_bank =
        build_bank(select_channels(style_feats, result.style_mask.complement()), options.patch);
    result.bank_size = surface_bank.size();
    result.surface_swap = swap_accelerated(content_groups.surface, surface_bank);
    result.texture_swap = swap_accelerated(content_groups.texture, texture_bank);
    return 0;
  });

  stage("decode", [&] {
    if (options.fuse || options.decode_parts) {
      result.surface_image = decode(result.surface_swap.swapped, decoder_, &content_feats);
      result.texture_image = decode(result.texture_swap.swapped, decoder_, &content_feats);
    }
    if (!options.fuse) {
      FeatureMap combined = result.surface_swap.swapped;
      combined += result.texture_swap.swapped;
      result.output = decode(combined, decoder_, &content_feats);
    }
    return 0;
  });

  if (options.fuse) {
    stage("fuse", [&] {
      const WeightMap w = activate_weights(complementary_weights(*result.texture_image), options.fusion);
      result.output = fuse(*result.texture_image, *result.surface_image, w);
      return 0;
    });
  }
  result.timings.cgps = seconds_since(t0);
  result.timings.total = seconds_since(t_total);
  return result;
}

StylizeResult stylize(const StylizeConfig& config) {
  config.validate();
  const Image content = stage("load", [&] {
    return prepare_input(load_image(config.content), config.resize, config.max_side);
  });
  const Image style = stage("load", [&] {
    return prepare_input(load_image(config.style), config.resize, config.max_side);
  });

  StylizeOptions options = config.options;
  bool fell_back = false;
  Stylizer stylizer = stage("weights", [&] {
    std::optional<DecomNet> net;
    if (options.decomposer == DecomposerKind::learned) {
      try {
        net = config.decomnet_weights == "random" ? DecomNet::random(config.seed + 2)
                                                  : DecomNet::load(config.decomnet_weights);
      } catch (const ConfigError&) {
        if (!config.decom_fallback) throw;
        options.decomposer = DecomposerKind::classical;
        fell_back = true;
      }
    }
    return Stylizer(load_encoder(config.encoder_weights, config.seed),
                    load_decoder(config.decoder_weights, config.seed), std::move(net));
  });

  options.decode_parts = options.decode_parts || config.emit_intermediates;
  StylizeResult result = stylizer.run(content, style, options);
  result.used_fallback = fell_back;

  stage("validate", [&] {
    validate_output(result.output);
    return 0;
  });
  stage("write", [&] {
    save_image(result.output, config.output);
    if (config.emit_intermediates) {
      const fs::path dir = config.output.parent_path();
      const std::string stem = config.output.stem().string();
      auto emit = [&](const Image& img, const char* suffix) {
        save_image(clamped(img), dir / (stem + suffix + ".png"));
      };
      emit(result.decomposition.illumination, "_L");
      emit(result.decomposition.reflectance, "_R");
      emit(*result.surface_image, "_LS");
      emit(*result.texture_image, "_RS");
    }
    return 0;
  });
  return result;
}

}  // namespace cgswap
