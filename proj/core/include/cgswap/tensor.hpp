#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cgswap/image.hpp"

namespace cgswap {

/// Planar C x H x W float tensor. Used for encoder activations (FeatureMap)
/// and for intermediate network values.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int channels, int height, int width, float fill = 0.0f);

  int channels() const noexcept { return channels_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept {
    return static_cast<std::size_t>(height_) * width_;
  }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float& at(int c, int y, int x) noexcept {
    return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
  }
  const float& at(int c, int y, int x) const noexcept {
    return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
  }

  std::span<float> plane(int c) noexcept {
    return std::span<float>(data_).subspan(c * plane_size(), plane_size());
  }
  std::span<const float> plane(int c) const noexcept {
    return std::span<const float>(data_).subspan(c * plane_size(), plane_size());
  }

  float* data() noexcept { return data_.data(); }
  const float* data() const noexcept { return data_.data(); }
  std::span<float> values() noexcept { return data_; }
  std::span<const float> values() const noexcept { return data_; }

  bool same_shape(const Tensor& other) const noexcept {
    return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
  }

  bool operator==(const Tensor&) const = default;

  Tensor& operator+=(const Tensor& other);

 private:
  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

/// Encoder activations, C x h x w.
using FeatureMap = Tensor;

/// Interleaved image to planar tensor (no value change).
Tensor to_tensor(const Image& image);

/// Planar 1- or 3-channel tensor to image; values are clamped to [0, 1].
Image to_image(const Tensor& tensor);

/// Top-left crop of the spatial extent.
Tensor crop_spatial(const Tensor& tensor, int height, int width);

/// Channel concatenation; spatial sizes must match.
Tensor concat_channels(const Tensor& a, const Tensor& b);

bool all_finite(const Tensor& tensor);

}  // namespace cgswap
