#include "cgswap/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "cgswap/error.hpp"

namespace cgswap {

ChannelMask::ChannelMask(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto& b : bits_) {
    if (b > 1) throw ArgumentError("channel mask entries must be 0 or 1");
  }
}

ChannelMask ChannelMask::complement() const {
  ChannelMask out(size());
  for (std::size_t i = 0; i < size(); ++i) out.set(i, !(*this)[i]);
  return out;
}

std::size_t ChannelMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

ChannelCode gap(const FeatureMap& feature) {
  if (feature.plane_size() == 0) throw ArgumentError("global average pooling of an empty feature map");
  ChannelCode code(feature.channels());
  for (int c = 0; c < feature.channels(); ++c) {
    double s = 0.0;
    for (float v : feature.plane(c)) s += v;
    code[c] = s / static_cast<double>(feature.plane_size());
  }
  return code;
}

ChannelMask compute_mask(const ChannelCode& surface_code, const ChannelCode& texture_code) {
  if (surface_code.size() != texture_code.size()) {
    throw ArgumentError("channel codes differ in length: " + std::to_string(surface_code.size()) +
                        " vs " + std::to_string(texture_code.size()));
  }
  ChannelMask mask(surface_code.size());
  for (std::size_t i = 0; i < surface_code.size(); ++i) mask.set(i, surface_code[i] > texture_code[i]);
  return mask;
}

FeatureMap select_channels(const FeatureMap& feature, const ChannelMask& mask) {
  if (mask.size() != static_cast<std::size_t>(feature.channels())) {
    throw ArgumentError("mask length " + std::to_string(mask.size()) + " does not match " +
                        std::to_string(feature.channels()) + " channels");
  }
  FeatureMap out(feature.channels(), feature.height(), feature.width());
  for (int c = 0; c < feature.channels(); ++c) {
    if (mask[c]) std::copy(feature.plane(c).begin(), feature.plane(c).end(), out.plane(c).begin());
  }
  return out;
}

GroupedFeatures split(const FeatureMap& feature, const ChannelMask& mask) {
  return {select_channels(feature, mask), select_channels(feature, mask.complement())};
}

CodeRateStats code_rate_stats(const ChannelMask& mask) {
  CodeRateStats s;
  s.surface = mask.count();
  s.texture = mask.size() - s.surface;
  s.balance = std::fabs(static_cast<double>(s.surface) - static_cast<double>(mask.size()) / 2.0);
  return s;
}

std::vector<ChannelMask> fixed_grouping(int channels, int group_size) {
  if (group_size < 1) throw ArgumentError("group size must be >= 1");
  if (channels < 1) throw ArgumentError("channel count must be >= 1");
  std::vector<ChannelMask> groups;
  for (int start = 0; start < channels; start += group_size) {
    ChannelMask m(static_cast<std::size_t>(channels));
    for (int c = start; c < std::min(channels, start + group_size); ++c) m.set(c, true);
    groups.push_back(std::move(m));
  }
  return groups;
}

void write_code_rate_row(std::ostream& out, const std::string& id, const CodeRateStats& stats) {
  out << id << ',' << stats.surface << ',' << stats.texture << ',' << stats.balance << '\n';
}

}  // namespace cgswap
