#include "cgswap/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "cgswap/error.hpp"

namespace cgswap {

Tensor::Tensor(int channels, int height, int width, float fill)
    : channels_(channels), height_(height), width_(width) {
  if (channels < 0 || height < 0 || width < 0) {
    throw ArgumentError("tensor dimensions must be non-negative");
  }
  data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (!same_shape(other)) throw ArgumentError("tensor shape mismatch in +=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor to_tensor(const Image& image) {
  Tensor t(image.channels(), image.height(), image.width());
  for (int c = 0; c < image.channels(); ++c) {
    for (int y = 0; y < image.height(); ++y) {
      for (int x = 0; x < image.width(); ++x) t.at(c, y, x) = image.at(y, x, c);
    }
  }
  return t;
}

Image to_image(const Tensor& tensor) {
  if (tensor.channels() != 1 && tensor.channels() != 3) {
    throw ArgumentError("only 1- or 3-channel tensors convert to images");
  }
  Image image(tensor.height(), tensor.width(), tensor.channels());
  for (int c = 0; c < tensor.channels(); ++c) {
    for (int y = 0; y < tensor.height(); ++y) {
      for (int x = 0; x < tensor.width(); ++x) image.at(y, x, c) = tensor.at(c, y, x);
    }
  }
  clamp01(image);
  return image;
}

Tensor crop_spatial(const Tensor& tensor, int height, int width) {
  if (height > tensor.height() || width > tensor.width()) {
    throw ArgumentError("crop larger than tensor");
  }
  if (height == tensor.height() && width == tensor.width()) return tensor;
  Tensor out(tensor.channels(), height, width);
  for (int c = 0; c < tensor.channels(); ++c) {
    for (int y = 0; y < height; ++y) {
      std::copy_n(&tensor.at(c, y, 0), width, &out.at(c, y, 0));
    }
  }
  return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw ArgumentError("concat requires equal spatial size");
  }
  Tensor out(a.channels() + b.channels(), a.height(), a.width());
  std::copy(a.values().begin(), a.values().end(), out.data());
  std::copy(b.values().begin(), b.values().end(), out.data() + a.size());
  return out;
}

bool all_finite(const Tensor& tensor) {
  return std::all_of(tensor.values().begin(), tensor.values().end(),
                     [](float v) { return std::isfinite(v); });
}

}  // namespace cgswap
