#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cgswap/tensor.hpp"

namespace cgswap {

/// Per-channel summary (spatial mean) of a feature map.
using ChannelCode = std::vector<double>;

/// Binary surface (1) / texture (0) assignment per channel.
class ChannelMask {
 public:
  ChannelMask() = default;
  explicit ChannelMask(std::size_t channels, bool value = false) : bits_(channels, value ? 1 : 0) {}
  explicit ChannelMask(std::vector<std::uint8_t> bits);

  std::size_t size() const noexcept { return bits_.size(); }
  bool operator[](std::size_t i) const noexcept { return bits_[i] != 0; }
  void set(std::size_t i, bool v) noexcept { bits_[i] = v ? 1 : 0; }

  ChannelMask complement() const;
  std::size_t count() const;
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  bool operator==(const ChannelMask&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
};

struct CodeRateStats {
  std::size_t surface = 0;
  std::size_t texture = 0;
  double balance = 0.0;  // |surface - channels/2|
};

/// Spatial global average pooling.
ChannelCode gap(const FeatureMap& feature);

/// m[i] = 1 iff surface_code[i] > texture_code[i]; ties go to texture.
ChannelMask compute_mask(const ChannelCode& surface_code, const ChannelCode& texture_code);

struct GroupedFeatures {
  FeatureMap surface;
  FeatureMap texture;
};

/// surface = feature * m, texture = feature * (1 - m), channel-wise.
GroupedFeatures split(const FeatureMap& feature, const ChannelMask& mask);

/// Keeps only the channels selected by `mask`, zeroing the rest.
FeatureMap select_channels(const FeatureMap& feature, const ChannelMask& mask);

CodeRateStats code_rate_stats(const ChannelMask& mask);

/// Contiguous channel blocks of `group_size` (last block may be shorter).
std::vector<ChannelMask> fixed_grouping(int channels, int group_size);

/// CSV row: id,surface,texture,balance
void write_code_rate_row(std::ostream& out, const std::string& id, const CodeRateStats& stats);

}  // namespace cgswap
