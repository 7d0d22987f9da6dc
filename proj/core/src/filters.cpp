#include "cgswap/filters.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "cgswap/error.hpp"

namespace cgswap {

namespace {

int reflect101(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

std::vector<double> gaussian_taps(double sigma, int size) {
  const int r = size / 2;
  std::vector<double> taps(size);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    taps[i + r] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += taps[i + r];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

Image gaussian_filter(const Image& image, const FilterSpec& spec) {
  const auto taps = gaussian_taps(spec.sigma, spec.size);
  const int r = spec.size / 2;
  const int h = image.height(), w = image.width(), ch = image.channels();
  std::vector<double> tmp(static_cast<std::size_t>(h) * w * ch);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int k = -r; k <= r; ++k) acc += taps[k + r] * image.at(y, reflect101(x + k, w), c);
        tmp[(static_cast<std::size_t>(y) * w + x) * ch + c] = acc;
      }
    }
  }
  Image out(h, w, ch);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int k = -r; k <= r; ++k) {
          acc += taps[k + r] * tmp[(static_cast<std::size_t>(reflect101(y + k, h)) * w + x) * ch + c];
        }
        out.at(y, x, c) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

Image bilateral_filter(const Image& image, const FilterSpec& spec) {
  const int r = spec.size / 2;
  const int h = image.height(), w = image.width(), ch = image.channels();
  const double inv_s = 1.0 / (2.0 * spec.sigma * spec.sigma);
  const double inv_r = 1.0 / (2.0 * spec.range_sigma * spec.range_sigma);
  std::vector<double> spatial(static_cast<std::size_t>(spec.size) * spec.size);
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) spatial[(dy + r) * spec.size + dx + r] = std::exp(-(dy * dy + dx * dx) * inv_s);
  }
  Image out(h, w, ch);
  std::vector<double> acc(ch);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::fill(acc.begin(), acc.end(), 0.0);
      double norm = 0.0;
      for (int yy = std::max(0, y - r); yy <= std::min(h - 1, y + r); ++yy) {
        for (int xx = std::max(0, x - r); xx <= std::min(w - 1, x + r); ++xx) {
          double d2 = 0.0;
          for (int c = 0; c < ch; ++c) {
            const double d = image.at(yy, xx, c) - image.at(y, x, c);
            d2 += d * d;
          }
          const double wgt = spatial[(yy - y + r) * spec.size + xx - x + r] * std::exp(-d2 * inv_r);
          norm += wgt;
          for (int c = 0; c < ch; ++c) acc[c] += wgt * image.at(yy, xx, c);
        }
      }
      for (int c = 0; c < ch; ++c) out.at(y, x, c) = static_cast<float>(acc[c] / norm);
    }
  }
  return out;
}

// Box mean over clipped (2r+1)^2 windows via a summed-area table.
std::vector<double> box_mean(const std::vector<double>& src, int h, int w, int r) {
  std::vector<double> sat(static_cast<std::size_t>(h + 1) * (w + 1), 0.0);
  for (int y = 0; y < h; ++y) {
    double row = 0.0;
    for (int x = 0; x < w; ++x) {
      row += src[static_cast<std::size_t>(y) * w + x];
      sat[static_cast<std::size_t>(y + 1) * (w + 1) + x + 1] = sat[static_cast<std::size_t>(y) * (w + 1) + x + 1] + row;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - r), y1 = std::min(h, y + r + 1);
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(0, x - r), x1 = std::min(w, x + r + 1);
      const double s = sat[static_cast<std::size_t>(y1) * (w + 1) + x1] - sat[static_cast<std::size_t>(y0) * (w + 1) + x1] -
                       sat[static_cast<std::size_t>(y1) * (w + 1) + x0] + sat[static_cast<std::size_t>(y0) * (w + 1) + x0];
      out[static_cast<std::size_t>(y) * w + x] = s / ((y1 - y0) * (x1 - x0));
    }
  }
  return out;
}

// Self-guided filter applied channel by channel.
Image guided_filter(const Image& image, const FilterSpec& spec) {
  const int r = spec.size / 2;
  const int h = image.height(), w = image.width(), ch = image.channels();
  const std::size_t n = static_cast<std::size_t>(h) * w;
  Image out(h, w, ch);
  std::vector<double> p(n), pp(n);
  for (int c = 0; c < ch; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = image.values()[i * ch + c];
      pp[i] = p[i] * p[i];
    }
    const auto mean = box_mean(p, h, w, r);
    const auto mean_sq = box_mean(pp, h, w, r);
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double var = std::max(0.0, mean_sq[i] - mean[i] * mean[i]);
      a[i] = var / (var + spec.epsilon);
      b[i] = mean[i] - a[i] * mean[i];
    }
    const auto ma = box_mean(a, h, w, r);
    const auto mb = box_mean(b, h, w, r);
    for (std::size_t i = 0; i < n; ++i) out.values()[i * ch + c] = static_cast<float>(ma[i] * p[i] + mb[i]);
  }
  return out;
}

}  // namespace

FilterSpec FilterSpec::gaussian(double sigma) {
  return gaussian(sigma, 2 * static_cast<int>(std::ceil(3.0 * sigma)) + 1);
}

FilterSpec FilterSpec::gaussian(double sigma, int size) {
  FilterSpec s;
  s.kind = FilterKind::gaussian;
  s.sigma = sigma;
  s.size = size;
  return s;
}

FilterSpec FilterSpec::bilateral(int size, double spatial_sigma, double range_sigma) {
  FilterSpec s;
  s.kind = FilterKind::bilateral;
  s.size = size;
  s.sigma = spatial_sigma;
  s.range_sigma = range_sigma;
  return s;
}

FilterSpec FilterSpec::guided(int radius, double epsilon) {
  FilterSpec s;
  s.kind = FilterKind::guided;
  s.size = 2 * radius + 1;
  s.epsilon = epsilon;
  return s;
}

void FilterSpec::validate() const {
  if (size < 3 || size % 2 == 0) {
    throw ArgumentError("filter size must be odd and >= 3, got " + std::to_string(size));
  }
  switch (kind) {
    case FilterKind::gaussian:
      if (!(sigma > 0.0)) throw ArgumentError("gaussian sigma must be positive");
      break;
    case FilterKind::bilateral:
      if (!(sigma > 0.0) || !(range_sigma > 0.0)) throw ArgumentError("bilateral sigmas must be positive");
      break;
    case FilterKind::guided:
      if (!(epsilon > 0.0)) throw ArgumentError("guided filter epsilon must be positive");
      break;
  }
}

std::string to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::gaussian: return "gaussian";
    case FilterKind::bilateral: return "bilateral";
    case FilterKind::guided: return "guided";
  }
  return "unknown";
}

FilterKind parse_filter_kind(const std::string& name) {
  if (name == "gaussian") return FilterKind::gaussian;
  if (name == "bilateral") return FilterKind::bilateral;
  if (name == "guided") return FilterKind::guided;
  throw ArgumentError("unknown filter kind: " + name);
}

Image apply_filter(const Image& image, const FilterSpec& spec) {
  spec.validate();
  if (image.empty()) throw ArgumentError("cannot filter an empty image");
  Image out;
  switch (spec.kind) {
    case FilterKind::gaussian: out = gaussian_filter(image, spec); break;
    case FilterKind::bilateral: out = bilateral_filter(image, spec); break;
    case FilterKind::guided: out = guided_filter(image, spec); break;
  }
  clamp01(out);
  return out;
}

Image texture_residual(const Image& image, const Image& filtered) {
  if (!image.same_shape(filtered)) throw ArgumentError("residual requires equal shapes");
  Image out(image.height(), image.width(), image.channels());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.values()[i] = image.values()[i] - filtered.values()[i] + 0.5f;
  }
  clamp01(out);
  return out;
}

}  // namespace cgswap
