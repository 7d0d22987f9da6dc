#include "cgswap/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "cgswap/error.hpp"

namespace cgswap {

Image::Image(int height, int width, int channels, float fill)
    : height_(height), width_(width), channels_(channels) {
  if (height < 0 || width < 0) throw ArgumentError("image dimensions must be non-negative");
  if (channels != 1 && channels != 3) throw ArgumentError("image channels must be 1 or 3");
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

WeightMap::WeightMap(int height, int width, float fill) : height_(height), width_(width) {
  if (height < 0 || width < 0) throw ArgumentError("weight map dimensions must be non-negative");
  data_.assign(static_cast<std::size_t>(height) * width, fill);
}

Image load_image(const std::filesystem::path& path) {
  {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot read image file: " + path.string());
  }
  cv::Mat mat;
  try {
    mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  } catch (const cv::Exception& e) {
    throw FormatError("cannot decode image " + path.string() + ": " + e.what());
  }
  if (mat.empty()) throw FormatError("unsupported or corrupt image: " + path.string());

  double denom = 0.0;
  switch (mat.depth()) {
    case CV_8U: denom = 255.0; break;
    case CV_16U: denom = 65535.0; break;
    default: throw FormatError("unsupported pixel depth in " + path.string());
  }
  const int src_channels = mat.channels();
  if (src_channels != 1 && src_channels != 3 && src_channels != 4) {
    throw FormatError("unsupported channel count in " + path.string());
  }
  cv::Mat as_float;
  mat.convertTo(as_float, CV_32F, 1.0 / denom);

  const int out_channels = src_channels == 1 ? 1 : 3;
  Image image(as_float.rows, as_float.cols, out_channels);
  for (int y = 0; y < as_float.rows; ++y) {
    const float* row = as_float.ptr<float>(y);
    for (int x = 0; x < as_float.cols; ++x) {
      const float* px = row + static_cast<std::ptrdiff_t>(x) * src_channels;
      if (out_channels == 1) {
        image.at(y, x, 0) = px[0];
      } else {
        // OpenCV stores BGR(A).
        image.at(y, x, 0) = px[2];
        image.at(y, x, 1) = px[1];
        image.at(y, x, 2) = px[0];
      }
    }
  }
  clamp01(image);
  return image;
}

void save_image(const Image& image, const std::filesystem::path& path) {
  if (image.empty()) throw ArgumentError("cannot save an empty image");
  const int type = image.channels() == 1 ? CV_8UC1 : CV_8UC3;
  cv::Mat mat(image.height(), image.width(), type);
  for (int y = 0; y < image.height(); ++y) {
    auto* row = mat.ptr<unsigned char>(y);
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < image.channels(); ++c) {
        const float v = std::clamp(image.at(y, x, c), 0.0f, 1.0f);
        const int dst = image.channels() == 1 ? c : 2 - c;
        row[x * image.channels() + dst] =
            static_cast<unsigned char>(std::lround(v * 255.0f));
      }
    }
  }
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), mat);
  } catch (const cv::Exception& e) {
    throw FormatError("cannot encode image " + path.string() + ": " + e.what());
  }
  if (!ok) throw IoError("cannot write image file: " + path.string());
}

Image resize_to(const Image& image, int height, int width) {
  if (height < 1 || width < 1) throw ArgumentError("resize would produce an empty image");
  if (image.empty()) throw ArgumentError("cannot resize an empty image");
  if (height == image.height() && width == image.width()) return image;

  const int channels = image.channels();
  Image out(height, width, channels);
  const double ry = static_cast<double>(image.height()) / height;
  const double rx = static_cast<double>(image.width()) / width;

  struct Tap {
    int i0, i1;
    float w1;
  };
  auto taps = [](int n_out, int n_in, double ratio) {
    std::vector<Tap> t(n_out);
    for (int i = 0; i < n_out; ++i) {
      double src = (i + 0.5) * ratio - 0.5;
      src = std::clamp(src, 0.0, static_cast<double>(n_in - 1));
      const int i0 = static_cast<int>(std::floor(src));
      const int i1 = std::min(i0 + 1, n_in - 1);
      t[i] = {i0, i1, static_cast<float>(src - i0)};
    }
    return t;
  };
  const auto ty = taps(height, image.height(), ry);
  const auto tx = taps(width, image.width(), rx);

  for (int y = 0; y < height; ++y) {
    const Tap& a = ty[y];
    for (int x = 0; x < width; ++x) {
      const Tap& b = tx[x];
      for (int c = 0; c < channels; ++c) {
        const float top = image.at(a.i0, b.i0, c) * (1 - b.w1) + image.at(a.i0, b.i1, c) * b.w1;
        const float bot = image.at(a.i1, b.i0, c) * (1 - b.w1) + image.at(a.i1, b.i1, c) * b.w1;
        out.at(y, x, c) = top * (1 - a.w1) + bot * a.w1;
      }
    }
  }
  clamp01(out);
  return out;
}

Image resize(const Image& image, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ArgumentError("resize scale must be positive");
  const int h = static_cast<int>(std::lround(scale * image.height()));
  const int w = static_cast<int>(std::lround(scale * image.width()));
  if (h < 1 || w < 1) {
    throw ArgumentError("resize scale " + std::to_string(scale) + " yields an empty image");
  }
  return resize_to(image, h, w);
}

Image to_luminance(const Image& image) {
  if (image.channels() == 1) return image;
  Image out(image.height(), image.width(), 1);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      out.at(y, x, 0) = 0.299f * image.at(y, x, 0) + 0.587f * image.at(y, x, 1) +
                        0.114f * image.at(y, x, 2);
    }
  }
  clamp01(out);
  return out;
}

Image to_rgb(const Image& image) {
  if (image.channels() == 3) return image;
  Image out(image.height(), image.width(), 3);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const float v = image.at(y, x, 0);
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = v;
    }
  }
  return out;
}

void clamp01(Image& image) {
  for (float& v : image.values()) {
    v = std::isnan(v) ? 0.0f : std::clamp(v, 0.0f, 1.0f);
  }
}

bool in_unit_range(const Image& image) {
  return std::all_of(image.values().begin(), image.values().end(),
                     [](float v) { return std::isfinite(v) && v >= 0.0f && v <= 1.0f; });
}

Image crop(const Image& image, int y0, int x0, int height, int width) {
  if (y0 < 0 || x0 < 0 || height < 1 || width < 1 || y0 + height > image.height() ||
      x0 + width > image.width()) {
    throw ArgumentError("crop window outside image");
  }
  Image out(height, width, image.channels());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < image.channels(); ++c) out.at(y, x, c) = image.at(y0 + y, x0 + x, c);
    }
  }
  return out;
}

}  // namespace cgswap
