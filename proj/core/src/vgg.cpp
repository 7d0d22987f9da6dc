#include "cgswap/vgg.hpp"

#include <algorithm>

#include "cgswap/error.hpp"

namespace cgswap {

namespace {

constexpr std::array<std::string_view, kVggTapCount> kTapNames{"conv1_1", "conv2_1", "conv3_1", "conv4_1"};

Tensor leading_channels(const Tensor& t, int channels) {
  Tensor out(channels, t.height(), t.width());
  std::copy_n(t.data(), out.size(), out.data());
  return out;
}

void conv(nn::Sequential& seq, const char* name, int in, int out, nn::Padding pad) {
  seq.emplace<nn::Conv2d>(name, in, out, 3, pad);
  seq.emplace<nn::ReLU>();
}

template <class Net>
void load_params(Net& params, const TensorDict& dict) {
  for (nn::Parameter* p : params) p->value = dict.require(p->name, p->shape).values;
}

}  // namespace

std::string_view layer_name(VggLayer layer) { return kTapNames[static_cast<int>(layer)]; }

VggLayer parse_layer(std::string_view name) {
  for (int i = 0; i < kVggTapCount; ++i) {
    if (kTapNames[i] == name) return static_cast<VggLayer>(i);
  }
  throw ArgumentError("unknown encoder layer: " + std::string(name));
}

int LayerSet::deepest() const {
  for (int i = kVggTapCount - 1; i >= 0; --i) {
    if (bits_.test(i)) return i;
  }
  return -1;
}

const FeatureMap& LayerActivations::at(VggLayer l) const {
  const auto& m = maps[static_cast<int>(l)];
  if (!m) throw ArgumentError("activation " + std::string(layer_name(l)) + " was not computed");
  return *m;
}

FeatureMap& LayerActivations::at(VggLayer l) {
  auto& m = maps[static_cast<int>(l)];
  if (!m) throw ArgumentError("activation " + std::string(layer_name(l)) + " was not computed");
  return *m;
}

// ---------------------------------------------------------------- Encoder

Encoder::Encoder() {
  constexpr auto Z = nn::Padding::zeros;
  conv(segments_[0], "conv1_1", 3, 64, Z);

  conv(segments_[1], "conv1_2", 64, 64, Z);
  segments_[1].emplace<nn::MaxPool2>();
  conv(segments_[1], "conv2_1", 64, 128, Z);

  conv(segments_[2], "conv2_2", 128, 128, Z);
  segments_[2].emplace<nn::MaxPool2>();
  conv(segments_[2], "conv3_1", 128, 256, Z);

  conv(segments_[3], "conv3_2", 256, 256, Z);
  conv(segments_[3], "conv3_3", 256, 256, Z);
  conv(segments_[3], "conv3_4", 256, 256, Z);
  segments_[3].emplace<nn::MaxPool2>();
  conv(segments_[3], "conv4_1", 256, 512, Z);
}

Encoder Encoder::from_dict(const TensorDict& dict) {
  Encoder enc;
  for (auto& seg : enc.segments_) {
    auto params = seg.parameters();
    load_params(params, dict);
  }
  if (dict.contains("preprocess.mean")) {
    const auto& m = dict.require("preprocess.mean", {3}).values;
    std::copy_n(m.begin(), 3, enc.mean_.begin());
  }
  if (dict.contains("preprocess.std")) {
    const auto& s = dict.require("preprocess.std", {3}).values;
    std::copy_n(s.begin(), 3, enc.std_.begin());
    for (float v : enc.std_) {
      if (!(v > 0.0f)) throw ConfigError("preprocess.std must be positive in " + dict.source);
    }
  }
  return enc;
}

Encoder Encoder::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError("encoder weights not found at '" + path.string() +
                      "'; convert VGG-19 weights with tools/convert_vgg19.py or run "
                      "`cgswap init-weights` for a seeded stand-in");
  }
  return from_dict(read_tensor_dict(path));
}

Encoder Encoder::random(std::uint64_t seed) {
  Encoder enc;
  std::mt19937_64 rng(seed);
  for (auto& seg : enc.segments_) {
    for (std::size_t i = 0; i < seg.size(); ++i) {
      if (auto* c = dynamic_cast<nn::Conv2d*>(&seg[i])) c->init_he(rng);
    }
  }
  return enc;
}

TensorDict Encoder::to_dict() const {
  TensorDict dict;
  for (const nn::Parameter* p : parameters()) dict.tensors[p->name] = {p->shape, p->value};
  dict.tensors["preprocess.mean"] = {{3}, {mean_.begin(), mean_.end()}};
  dict.tensors["preprocess.std"] = {{3}, {std_.begin(), std_.end()}};
  dict.metadata["architecture"] = "vgg19-relu4_1";
  return dict;
}

LayerActivations Encoder::encode(const Image& image, LayerSet layers) const {
  if (image.height() < kMinInputSide || image.width() < kMinInputSide) {
    throw ArgumentError("encoder input must be at least " + std::to_string(kMinInputSide) +
                        " px per side, got " + std::to_string(image.height()) + "x" +
                        std::to_string(image.width()));
  }
  return forward(to_tensor(to_rgb(image)), layers);
}

LayerActivations Encoder::forward(const Tensor& rgb, LayerSet layers, Trace* trace) const {
  if (rgb.channels() != 3) throw ArgumentError("encoder expects 3 input channels");
  if (layers.empty()) throw ArgumentError("no encoder layers requested");
  Tensor x = rgb;
  for (int c = 0; c < 3; ++c) {
    const float inv = 1.0f / std_[c];
    for (float& v : x.plane(c)) v = (v - mean_[c]) * inv;
  }
  LayerActivations acts;
  const int depth = layers.deepest();
  if (trace) trace->depth = depth;
  for (int i = 0; i <= depth; ++i) {
    x = trace ? segments_[i].forward(x, trace->segments[i]) : segments_[i].forward(x);
    if (layers.contains(static_cast<VggLayer>(i))) acts.maps[i] = x;
  }
  return acts;
}

Tensor Encoder::backward_input(const Trace& trace, const std::array<Tensor, kVggTapCount>& grads) const {
  Tensor g;
  for (int i = trace.depth; i >= 0; --i) {
    if (!grads[i].empty()) {
      if (g.empty()) {
        g = grads[i];
      } else {
        g += grads[i];
      }
    }
    if (g.empty()) continue;
    g = segments_[i].backward_input(trace.segments[i], g);
  }
  if (g.empty()) throw ArgumentError("backward_input called without any gradient");
  for (int c = 0; c < 3; ++c) {
    const float inv = 1.0f / std_[c];
    for (float& v : g.plane(c)) v *= inv;
  }
  return g;
}

std::vector<const nn::Parameter*> Encoder::parameters() const {
  std::vector<const nn::Parameter*> out;
  for (const auto& seg : segments_) {
    for (const nn::Parameter* p : seg.parameters()) out.push_back(p);
  }
  return out;
}

std::uint64_t Encoder::checksum() const {
  const auto params = parameters();
  return nn::checksum(params);
}

// ---------------------------------------------------------------- Decoder

Decoder::Decoder() {
  constexpr auto R = nn::Padding::reflect;
  conv(stages_[0], "dec4_1", 512, 256, R);
  stages_[0].emplace<nn::Upsample2>();
  conv(stages_[0], "dec3_4", 256, 256, R);
  conv(stages_[0], "dec3_3", 256, 256, R);
  conv(stages_[0], "dec3_2", 256, 256, R);
  conv(stages_[0], "dec3_1", 256, 128, R);
  stages_[0].emplace<nn::Upsample2>();

  conv(stages_[1], "dec2_2", 256, 128, R);
  conv(stages_[1], "dec2_1", 128, 64, R);
  stages_[1].emplace<nn::Upsample2>();

  conv(stages_[2], "dec1_2", 128, 64, R);
  stages_[2].emplace<nn::Conv2d>("dec1_1", 64, 3, 3, R);
}

Decoder Decoder::from_dict(const TensorDict& dict) {
  Decoder dec;
  auto params = dec.parameters();
  load_params(params, dict);
  return dec;
}

Decoder Decoder::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError("decoder weights not found at '" + path.string() +
                      "'; train one with `cgswap train` or run `cgswap init-weights`");
  }
  return from_dict(read_tensor_dict(path));
}

Decoder Decoder::random(std::uint64_t seed) {
  Decoder dec;
  std::mt19937_64 rng(seed);
  for (auto& st : dec.stages_) {
    for (std::size_t i = 0; i < st.size(); ++i) {
      if (auto* c = dynamic_cast<nn::Conv2d*>(&st[i])) c->init_he(rng);
    }
  }
  return dec;
}

TensorDict Decoder::to_dict() const {
  TensorDict dict;
  for (const nn::Parameter* p : parameters()) dict.tensors[p->name] = {p->shape, p->value};
  dict.metadata["architecture"] = "vgg19-relu4_1-decoder-skip";
  return dict;
}

Tensor Decoder::forward(const FeatureMap& feature, const FeatureMap* skip2, const FeatureMap* skip1,
                        Trace* trace) const {
  if (feature.channels() != kVggTapChannels[3]) {
    throw ArgumentError("decoder expects a " + std::to_string(kVggTapChannels[3]) +
                        "-channel relu4_1 feature, got " + std::to_string(feature.channels()));
  }
  if (feature.height() < 1 || feature.width() < 1) throw ArgumentError("decoder input is empty");
  if (skip2 && skip2->channels() != kVggTapChannels[1]) throw ArgumentError("conv2_1 skip has wrong channel count");
  if (skip1 && skip1->channels() != kVggTapChannels[0]) throw ArgumentError("conv1_1 skip has wrong channel count");

  auto run = [&](int i, const Tensor& x) {
    return trace ? stages_[i].forward(x, trace->stages[i]) : stages_[i].forward(x);
  };
  auto join = [](Tensor x, const FeatureMap* skip, int channels) {
    if (skip) {
      if (skip->height() > x.height() || skip->width() > x.width() ||
          skip->height() < x.height() - 8 || skip->width() < x.width() - 8) {
        throw ArgumentError("skip activation does not match decoder feature size");
      }
      return concat_channels(crop_spatial(x, skip->height(), skip->width()), *skip);
    }
    return concat_channels(x, Tensor(channels, x.height(), x.width()));
  };

  Tensor x = run(0, feature);
  x = run(1, join(std::move(x), skip2, kVggTapChannels[1]));
  return run(2, join(std::move(x), skip1, kVggTapChannels[0]));
}

void Decoder::backward(const Trace& trace, const Tensor& grad_output) {
  Tensor g = stages_[2].backward(trace.stages[2], grad_output, true);
  g = stages_[1].backward(trace.stages[1], leading_channels(g, 64), true);
  stages_[0].backward(trace.stages[0], leading_channels(g, 128), false);
}

std::vector<nn::Parameter*> Decoder::parameters() {
  std::vector<nn::Parameter*> out;
  for (auto& st : stages_) {
    for (nn::Parameter* p : st.parameters()) out.push_back(p);
  }
  return out;
}

std::vector<const nn::Parameter*> Decoder::parameters() const {
  std::vector<const nn::Parameter*> out;
  for (const auto& st : stages_) {
    for (const nn::Parameter* p : st.parameters()) out.push_back(p);
  }
  return out;
}

void Decoder::zero_grad() {
  for (nn::Parameter* p : parameters()) p->zero_grad();
}

Image decode(const FeatureMap& feature, const Decoder& decoder, const LayerActivations* skip) {
  const FeatureMap* s2 = skip ? &skip->at(VggLayer::conv2_1) : nullptr;
  const FeatureMap* s1 = skip ? &skip->at(VggLayer::conv1_1) : nullptr;
  return to_image(decoder.forward(feature, s2, s1));
}

}  // namespace cgswap
