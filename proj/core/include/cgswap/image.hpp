#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace cgswap {

/// Interleaved H x W x C float image, C in {1, 3}.
///
/// Public operations keep every value finite and inside [0, 1]. The one
/// exception is the reflectance of a decomposition, which is stored in an
/// Image but may exceed 1 (see DecompositionPair).
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels, float fill = 0.0f);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(height_) * width_;
  }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float& at(int y, int x, int c) noexcept {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  float at(int y, int x, int c) const noexcept {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  std::span<float> values() noexcept { return data_; }
  std::span<const float> values() const noexcept { return data_; }

  bool same_shape(const Image& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_ &&
           channels_ == other.channels_;
  }

  bool operator==(const Image&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

/// Single-channel spatial weights in [0, 1].
class WeightMap {
 public:
  WeightMap() = default;
  WeightMap(int height, int width, float fill = 0.0f);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }

  float& at(int y, int x) noexcept {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  float at(int y, int x) const noexcept {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }

  std::span<float> values() noexcept { return data_; }
  std::span<const float> values() const noexcept { return data_; }

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

/// Reads PNG/JPEG (8 or 16 bit) and normalizes to [0, 1]; alpha is dropped.
Image load_image(const std::filesystem::path& path);

/// Writes an 8-bit raster. Format is chosen from the extension.
void save_image(const Image& image, const std::filesystem::path& path);

/// Bilinear resize with half-pixel centers and edge clamping. Output size is
/// round(scale * input) per axis.
Image resize(const Image& image, double scale);

/// Resize to an explicit output size.
Image resize_to(const Image& image, int height, int width);

/// BT.601 luminance; identity on single-channel input.
Image to_luminance(const Image& image);

/// Repeats a single-channel image into 3 channels; identity on 3 channels.
Image to_rgb(const Image& image);

/// Clamps every value into [0, 1] in place. NaN becomes 0.
void clamp01(Image& image);

/// True iff every value is finite and inside [0, 1].
bool in_unit_range(const Image& image);

/// Crops the top-left height x width window.
Image crop(const Image& image, int y0, int x0, int height, int width);

}  // namespace cgswap
