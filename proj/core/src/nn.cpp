#include "cgswap/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <cblas.h>

#include "cgswap/error.hpp"

namespace cgswap::nn {

namespace {

// Upper bound on im2col scratch (floats) per tile.
constexpr std::size_t kColBudget = std::size_t{1} << 20;
// Layers this thin on either side skip im2col in the forward pass.
constexpr int kDirectMaxChannels = 4;

int pad_index(int i, int n, Padding padding) {
  if (i >= 0 && i < n) return i;
  if (padding == Padding::zeros) return -1;
  if (n == 1) return 0;
  // Reflect without repeating the edge sample.
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

struct ConvGeometry {
  int in, k, pad, height, width;
  std::vector<std::vector<int>> xmap;  // [kx][x] -> source column or -1
  Padding padding;

  ConvGeometry(int in_channels, int kernel, int h, int w, Padding p)
      : in(in_channels), k(kernel), pad(kernel / 2), height(h), width(w), padding(p) {
    xmap.assign(k, std::vector<int>(w));
    for (int kx = 0; kx < k; ++kx) {
      for (int x = 0; x < w; ++x) xmap[kx][x] = pad_index(x + kx - pad, w, p);
    }
  }

  int rows_per_tile() const {
    const std::size_t per_row = static_cast<std::size_t>(in) * k * k * width;
    return static_cast<int>(std::clamp<std::size_t>(kColBudget / std::max<std::size_t>(per_row, 1),
                                                    1, static_cast<std::size_t>(height)));
  }
};

// dst[c * ld_dst + r] = src[r * ld_src + c], in cache-sized blocks.
void transpose(const float* src, std::size_t rows, std::size_t cols, std::size_t ld_src, float* dst,
               std::size_t ld_dst) {
  constexpr std::size_t kBlock = 32;
  for (std::size_t r0 = 0; r0 < rows; r0 += kBlock) {
    const std::size_t r1 = std::min(rows, r0 + kBlock);
    for (std::size_t c0 = 0; c0 < cols; c0 += kBlock) {
      const std::size_t c1 = std::min(cols, c0 + kBlock);
      for (std::size_t r = r0; r < r1; ++r) {
        for (std::size_t c = c0; c < c1; ++c) dst[c * ld_dst + r] = src[r * ld_src + c];
      }
    }
  }
}

// Channels-last copy: out[p * C + c] = t(c, p).
std::vector<float> to_pixel_major(const Tensor& t) {
  const std::size_t hw = t.plane_size();
  std::vector<float> out(hw * t.channels());
  transpose(t.data(), t.channels(), hw, hw, out.data(), t.channels());
  return out;
}

// Pixel-major patches for rows [r0, r1): col[p][(ky * k + kx) * C + c].
void im2col(const float* hwc, const ConvGeometry& g, int r0, int r1, float* col) {
  const std::size_t K = static_cast<std::size_t>(g.in) * g.k * g.k;
  for (int y = r0; y < r1; ++y) {
    for (int x = 0; x < g.width; ++x) {
      float* dst = col + (static_cast<std::size_t>(y - r0) * g.width + x) * K;
      for (int ky = 0; ky < g.k; ++ky) {
        const int sy = pad_index(y + ky - g.pad, g.height, g.padding);
        for (int kx = 0; kx < g.k; ++kx, dst += g.in) {
          const int sx = g.xmap[kx][x];
          if (sy < 0 || sx < 0) {
            std::fill_n(dst, g.in, 0.0f);
          } else {
            std::memcpy(dst, hwc + (static_cast<std::size_t>(sy) * g.width + sx) * g.in, sizeof(float) * g.in);
          }
        }
      }
    }
  }
}

void col2im_add(const float* col, const ConvGeometry& g, int r0, int r1, float* grad_hwc) {
  const std::size_t K = static_cast<std::size_t>(g.in) * g.k * g.k;
  for (int y = r0; y < r1; ++y) {
    for (int x = 0; x < g.width; ++x) {
      const float* src = col + (static_cast<std::size_t>(y - r0) * g.width + x) * K;
      for (int ky = 0; ky < g.k; ++ky) {
        const int sy = pad_index(y + ky - g.pad, g.height, g.padding);
        for (int kx = 0; kx < g.k; ++kx, src += g.in) {
          const int sx = g.xmap[kx][x];
          if (sy < 0 || sx < 0) continue;
          float* dst = grad_hwc + (static_cast<std::size_t>(sy) * g.width + sx) * g.in;
          for (int c = 0; c < g.in; ++c) dst[c] += src[c];
        }
      }
    }
  }
}

// out(o) += w(o, c, ky, kx) * shifted in(c), one row at a time.
void direct_conv(const Tensor& input, const ConvGeometry& g, const std::vector<float>& weight, int out_channels,
                 Tensor& out) {
  const int w = g.width;
  const int lo = std::min(w, g.pad), hi = std::max(lo, w - g.pad);
  for (int o = 0; o < out_channels; ++o) {
    float* dst_plane = out.plane(o).data();
    for (int c = 0; c < g.in; ++c) {
      const float* src_plane = input.plane(c).data();
      for (int ky = 0; ky < g.k; ++ky) {
        for (int kx = 0; kx < g.k; ++kx) {
          const float wv = weight[((static_cast<std::size_t>(o) * g.in + c) * g.k + ky) * g.k + kx];
          const int* xm = g.xmap[kx].data();
          const int shift = kx - g.pad;
          for (int y = 0; y < g.height; ++y) {
            const int sy = pad_index(y + ky - g.pad, g.height, g.padding);
            if (sy < 0) continue;
            const float* src = src_plane + static_cast<std::size_t>(sy) * w;
            float* dst = dst_plane + static_cast<std::size_t>(y) * w;
            for (int x = 0; x < lo; ++x) {
              if (xm[x] >= 0) dst[x] += wv * src[xm[x]];
            }
            const float* s = src + shift;
            for (int x = lo; x < hi; ++x) dst[x] += wv * s[x];
            for (int x = hi; x < w; ++x) {
              if (xm[x] >= 0) dst[x] += wv * src[xm[x]];
            }
          }
        }
      }
    }
  }
}

}  // namespace

void Parameter::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0f); }

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(std::string name, int in_channels, int out_channels, int kernel, Padding padding)
    : in_(in_channels), out_(out_channels), k_(kernel), padding_(padding) {
  if (in_channels < 1 || out_channels < 1 || kernel < 1 || kernel % 2 == 0) {
    throw ArgumentError("conv " + name + ": invalid geometry");
  }
  const std::size_t wn = static_cast<std::size_t>(out_) * in_ * k_ * k_;
  weight_ = {name + ".weight", {out_, in_, k_, k_}, std::vector<float>(wn), std::vector<float>(wn)};
  bias_ = {name + ".bias", {out_}, std::vector<float>(out_), std::vector<float>(out_)};
}

void Conv2d::init_he(std::mt19937_64& rng) {
  std::normal_distribution<float> dist(0.0f, std::sqrt(2.0f / static_cast<float>(in_ * k_ * k_)));
  for (float& w : weight_.value) w = dist(rng);
  std::fill(bias_.value.begin(), bias_.value.end(), 0.0f);
}

std::vector<float> Conv2d::tap_major_weight() const {
  const int taps = k_ * k_;
  std::vector<float> w(weight_.value.size());
  for (int o = 0; o < out_; ++o) {
    for (int c = 0; c < in_; ++c) {
      for (int t = 0; t < taps; ++t) {
        w[(static_cast<std::size_t>(o) * taps + t) * in_ + c] = weight_.value[(static_cast<std::size_t>(o) * in_ + c) * taps + t];
      }
    }
  }
  return w;
}

Tensor Conv2d::forward(const Tensor& input) const {
  if (input.channels() != in_) {
    throw ArgumentError(weight_.name + ": expected " + std::to_string(in_) + " input channels, got " +
                        std::to_string(input.channels()));
  }
  const int h = input.height();
  const int w = input.width();
  Tensor out(out_, h, w);
  if (h == 0 || w == 0) return out;
  const ConvGeometry g(in_, k_, h, w, padding_);
  if (std::min(in_, out_) <= kDirectMaxChannels) {
    for (int o = 0; o < out_; ++o) {
      auto plane = out.plane(o);
      std::fill(plane.begin(), plane.end(), bias_.value[o]);
    }
    direct_conv(input, g, weight_.value, out_, out);
    return out;
  }
  const int K = in_ * k_ * k_;
  const int tile = g.rows_per_tile();
  const std::vector<float> hwc = to_pixel_major(input);
  const std::vector<float> wt = tap_major_weight();
  std::vector<float> col(static_cast<std::size_t>(K) * tile * w);
  std::vector<float> res(static_cast<std::size_t>(out_) * tile * w);
  for (int r0 = 0; r0 < h; r0 += tile) {
    const int r1 = std::min(h, r0 + tile);
    const int n = (r1 - r0) * w;
    im2col(hwc.data(), g, r0, r1, col.data());
    cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasTrans, n, out_, K, 1.0f, col.data(), K, wt.data(), K, 0.0f,
                res.data(), out_);
    transpose(res.data(), n, out_, out_, out.data() + static_cast<std::size_t>(r0) * w, out.plane_size());
  }
  for (int o = 0; o < out_; ++o) {
    const float b = bias_.value[o];
    if (b == 0.0f) continue;
    for (float& v : out.plane(o)) v += b;
  }
  return out;
}

Tensor Conv2d::backward_impl(const Tensor& input, const Tensor& grad_output,
                             std::vector<float>* weight_grad, std::vector<float>* bias_grad,
                             bool input_grad) const {
  const int h = input.height();
  const int w = input.width();
  if (grad_output.channels() != out_ || grad_output.height() != h || grad_output.width() != w) {
    throw ArgumentError(weight_.name + ": gradient shape mismatch");
  }
  Tensor grad_input;
  if (input_grad) grad_input = Tensor(in_, h, w);
  if (h == 0 || w == 0) return grad_input;

  const ConvGeometry g(in_, k_, h, w, padding_);
  const int K = in_ * k_ * k_;
  const int taps = k_ * k_;
  const int tile = g.rows_per_tile();
  std::vector<float> col(static_cast<std::size_t>(K) * tile * w);
  const std::vector<float> gout = to_pixel_major(grad_output);

  if (bias_grad) {
    for (int o = 0; o < out_; ++o) {
      double s = 0.0;
      for (float v : grad_output.plane(o)) s += v;
      (*bias_grad)[o] += static_cast<float>(s);
    }
  }
  std::vector<float> hwc, wt, dwt, grad_hwc;
  if (weight_grad) {
    hwc = to_pixel_major(input);
    dwt.assign(static_cast<std::size_t>(out_) * K, 0.0f);
  }
  if (input_grad) {
    wt = tap_major_weight();
    grad_hwc.assign(static_cast<std::size_t>(in_) * h * w, 0.0f);
  }
  for (int r0 = 0; r0 < h; r0 += tile) {
    const int r1 = std::min(h, r0 + tile);
    const int n = (r1 - r0) * w;
    const float* gt = gout.data() + static_cast<std::size_t>(r0) * w * out_;
    if (weight_grad) {
      im2col(hwc.data(), g, r0, r1, col.data());
      cblas_sgemm(CblasRowMajor, CblasTrans, CblasNoTrans, out_, K, n, 1.0f, gt, out_, col.data(), K, 1.0f,
                  dwt.data(), K);
    }
    if (input_grad) {
      cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, n, K, out_, 1.0f, gt, out_, wt.data(), K, 0.0f,
                  col.data(), K);
      col2im_add(col.data(), g, r0, r1, grad_hwc.data());
    }
  }
  if (weight_grad) {
    for (int o = 0; o < out_; ++o) {
      for (int c = 0; c < in_; ++c) {
        for (int t = 0; t < taps; ++t) {
          (*weight_grad)[(static_cast<std::size_t>(o) * in_ + c) * taps + t] +=
              dwt[(static_cast<std::size_t>(o) * taps + t) * in_ + c];
        }
      }
    }
  }
  if (input_grad) {
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    transpose(grad_hwc.data(), hw, in_, in_, grad_input.data(), hw);
  }
  return grad_input;
}

Tensor Conv2d::backward_input(const Tensor& input, const Tensor& grad_output) const {
  return backward_impl(input, grad_output, nullptr, nullptr, true);
}

Tensor Conv2d::backward(const Tensor& input, const Tensor& grad_output, bool need_input_grad) {
  return backward_impl(input, grad_output, &weight_.grad, &bias_.grad, need_input_grad);
}

// ---------------------------------------------------------------- ReLU

Tensor ReLU::forward(const Tensor& input) const {
  Tensor out = input;
  for (float& v : out.values()) v = v > 0.0f ? v : 0.0f;
  return out;
}

Tensor ReLU::backward_input(const Tensor& input, const Tensor& grad_output) const {
  Tensor g = grad_output;
  auto in = input.values();
  auto gv = g.values();
  for (std::size_t i = 0; i < gv.size(); ++i) {
    if (!(in[i] > 0.0f)) gv[i] = 0.0f;
  }
  return g;
}

// ---------------------------------------------------------------- MaxPool2

Tensor MaxPool2::forward(const Tensor& input) const {
  const int oh = (input.height() + 1) / 2;
  const int ow = (input.width() + 1) / 2;
  Tensor out(input.channels(), oh, ow);
  for (int c = 0; c < input.channels(); ++c) {
    for (int y = 0; y < oh; ++y) {
      const int y1 = std::min(2 * y + 2, input.height());
      for (int x = 0; x < ow; ++x) {
        const int x1 = std::min(2 * x + 2, input.width());
        float m = input.at(c, 2 * y, 2 * x);
        for (int yy = 2 * y; yy < y1; ++yy) {
          for (int xx = 2 * x; xx < x1; ++xx) m = std::max(m, input.at(c, yy, xx));
        }
        out.at(c, y, x) = m;
      }
    }
  }
  return out;
}

Tensor MaxPool2::backward_input(const Tensor& input, const Tensor& grad_output) const {
  Tensor g(input.channels(), input.height(), input.width());
  for (int c = 0; c < input.channels(); ++c) {
    for (int y = 0; y < grad_output.height(); ++y) {
      const int y1 = std::min(2 * y + 2, input.height());
      for (int x = 0; x < grad_output.width(); ++x) {
        const int x1 = std::min(2 * x + 2, input.width());
        int by = 2 * y, bx = 2 * x;
        float m = input.at(c, by, bx);
        for (int yy = 2 * y; yy < y1; ++yy) {
          for (int xx = 2 * x; xx < x1; ++xx) {
            if (input.at(c, yy, xx) > m) {
              m = input.at(c, yy, xx);
              by = yy;
              bx = xx;
            }
          }
        }
        g.at(c, by, bx) += grad_output.at(c, y, x);
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------- Upsample2

Tensor Upsample2::forward(const Tensor& input) const {
  Tensor out(input.channels(), input.height() * 2, input.width() * 2);
  for (int c = 0; c < input.channels(); ++c) {
    for (int y = 0; y < out.height(); ++y) {
      const float* src = &input.at(c, y / 2, 0);
      float* dst = &out.at(c, y, 0);
      for (int x = 0; x < out.width(); ++x) dst[x] = src[x / 2];
    }
  }
  return out;
}

Tensor Upsample2::backward_input(const Tensor& input, const Tensor& grad_output) const {
  Tensor g(input.channels(), input.height(), input.width());
  for (int c = 0; c < input.channels(); ++c) {
    for (int y = 0; y < grad_output.height(); ++y) {
      for (int x = 0; x < grad_output.width(); ++x) g.at(c, y / 2, x / 2) += grad_output.at(c, y, x);
    }
  }
  return g;
}

// ---------------------------------------------------------------- Sequential

Tensor Sequential::forward(const Tensor& input) const {
  Tensor x = input;
  for (const auto& layer : layers_) x = layer->forward(x);
  return x;
}

Tensor Sequential::forward(const Tensor& input, std::vector<Tensor>& trace) const {
  trace.clear();
  trace.reserve(layers_.size());
  Tensor x = input;
  for (const auto& layer : layers_) {
    trace.push_back(x);
    x = layer->forward(trace.back());
  }
  return x;
}

Tensor Sequential::backward_input(const std::vector<Tensor>& trace, const Tensor& grad_output) const {
  if (trace.size() != layers_.size()) throw ArgumentError("trace does not match network depth");
  Tensor g = grad_output;
  for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i]->backward_input(trace[i], g);
  return g;
}

Tensor Sequential::backward(const std::vector<Tensor>& trace, const Tensor& grad_output,
                            bool need_input_grad) {
  if (trace.size() != layers_.size()) throw ArgumentError("trace does not match network depth");
  Tensor g = grad_output;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    g = layers_[i]->backward(trace[i], g, need_input_grad || i > 0);
  }
  return g;
}

std::vector<Parameter*> Sequential::parameters() {
  std::vector<Parameter*> out;
  for (auto& layer : layers_) {
    for (Parameter* p : layer->parameters()) out.push_back(p);
  }
  return out;
}

std::vector<const Parameter*> Sequential::parameters() const {
  std::vector<const Parameter*> out;
  for (const auto& layer : layers_) {
    for (const Parameter* p : static_cast<const Layer&>(*layer).parameters()) out.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------- Adam

Adam::Adam(double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), b1_(beta1), b2_(beta2), eps_(epsilon) {
  if (!(learning_rate > 0.0)) throw ArgumentError("learning rate must be positive");
}

void Adam::step(std::span<Parameter* const> params, float grad_scale) {
  if (m_.empty()) {
    for (Parameter* p : params) {
      m_.emplace_back(p->value.size(), 0.0f);
      v_.emplace_back(p->value.size(), 0.0f);
    }
  }
  if (m_.size() != params.size()) throw ArgumentError("Adam parameter set changed between steps");
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  const float step_size = static_cast<float>(lr_ * std::sqrt(c2) / c1);
  const float b1 = static_cast<float>(b1_), b2 = static_cast<float>(b2_);
  const float eps = static_cast<float>(eps_ * std::sqrt(c2));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const float g = p.grad[j] * grad_scale;
      m[j] = b1 * m[j] + (1.0f - b1) * g;
      v[j] = b2 * v[j] + (1.0f - b2) * g * g;
      p.value[j] -= step_size * m[j] / (std::sqrt(v[j]) + eps);
    }
  }
}

std::uint64_t checksum(std::span<const Parameter* const> params) {
  std::uint64_t h = 1469598103934665603ull;
  for (const Parameter* p : params) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(p->value.data());
    for (std::size_t i = 0; i < p->value.size() * sizeof(float); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  }
  return h;
}

}  // namespace cgswap::nn
