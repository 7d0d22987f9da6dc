#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cgswap/tensor.hpp"

// Minimal single-sample CNN building blocks: just enough to run a VGG-19
// encoder, train its mirror decoder and evaluate a Decom-Net style network.
namespace cgswap::nn {

enum class Padding { zeros, reflect };

struct Parameter {
  std::string name;
  std::vector<std::int64_t> shape;
  std::vector<float> value;
  std::vector<float> grad;

  void zero_grad();
};

class Layer {
 public:
  virtual ~Layer() = default;

  virtual Tensor forward(const Tensor& input) const = 0;

  /// Gradient with respect to the layer input only.
  virtual Tensor backward_input(const Tensor& input, const Tensor& grad_output) const = 0;

  /// Accumulates parameter gradients (if any) and returns the input
  /// gradient, or an empty tensor when `need_input_grad` is false.
  virtual Tensor backward(const Tensor& input, const Tensor& grad_output, bool need_input_grad) {
    return need_input_grad ? backward_input(input, grad_output) : Tensor{};
  }

  virtual std::vector<Parameter*> parameters() { return {}; }
  virtual std::vector<const Parameter*> parameters() const { return {}; }
};

/// k x k convolution, stride 1, "same" output size.
class Conv2d final : public Layer {
 public:
  Conv2d(std::string name, int in_channels, int out_channels, int kernel, Padding padding);

  Tensor forward(const Tensor& input) const override;
  Tensor backward_input(const Tensor& input, const Tensor& grad_output) const override;
  Tensor backward(const Tensor& input, const Tensor& grad_output, bool need_input_grad) override;

  std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
  std::vector<const Parameter*> parameters() const override { return {&weight_, &bias_}; }

  Parameter& weight() noexcept { return weight_; }
  Parameter& bias() noexcept { return bias_; }
  const Parameter& weight() const noexcept { return weight_; }
  const Parameter& bias() const noexcept { return bias_; }

  int in_channels() const noexcept { return in_; }
  int out_channels() const noexcept { return out_; }
  int kernel() const noexcept { return k_; }

  /// He-normal weights, zero bias.
  void init_he(std::mt19937_64& rng);

 private:
  std::vector<float> tap_major_weight() const;
  Tensor backward_impl(const Tensor& input, const Tensor& grad_output,
                       std::vector<float>* weight_grad, std::vector<float>* bias_grad,
                       bool input_grad) const;

  int in_;
  int out_;
  int k_;
  Padding padding_;
  Parameter weight_;  // out x in x k x k
  Parameter bias_;
};

class ReLU final : public Layer {
 public:
  Tensor forward(const Tensor& input) const override;
  Tensor backward_input(const Tensor& input, const Tensor& grad_output) const override;
};

/// 2x2 max pooling, stride 2, ceil mode (partial windows at odd borders).
class MaxPool2 final : public Layer {
 public:
  Tensor forward(const Tensor& input) const override;
  Tensor backward_input(const Tensor& input, const Tensor& grad_output) const override;
};

/// Nearest-neighbour 2x upsampling.
class Upsample2 final : public Layer {
 public:
  Tensor forward(const Tensor& input) const override;
  Tensor backward_input(const Tensor& input, const Tensor& grad_output) const override;
};

class Sequential {
 public:
  Sequential() = default;
  Sequential(Sequential&&) = default;
  Sequential& operator=(Sequential&&) = default;

  template <class L, class... Args>
  L& emplace(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  Tensor forward(const Tensor& input) const;
  /// Records the input of every layer into `trace` for backward().
  Tensor forward(const Tensor& input, std::vector<Tensor>& trace) const;

  Tensor backward_input(const std::vector<Tensor>& trace, const Tensor& grad_output) const;
  Tensor backward(const std::vector<Tensor>& trace, const Tensor& grad_output,
                  bool need_input_grad);

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

  std::size_t size() const noexcept { return layers_.size(); }
  Layer& operator[](std::size_t i) { return *layers_[i]; }
  const Layer& operator[](std::size_t i) const { return *layers_[i]; }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

/// Standard Adam with bias correction.
class Adam {
 public:
  explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                double epsilon = 1e-8);

  /// Applies one update using each parameter's accumulated gradient scaled
  /// by `grad_scale` (use 1/batch to average), then leaves gradients as-is.
  void step(std::span<Parameter* const> params, float grad_scale = 1.0f);

  long steps() const noexcept { return t_; }

 private:
  double lr_, b1_, b2_, eps_;
  long t_ = 0;
  std::vector<std::vector<float>> m_, v_;
};

/// FNV-1a over parameter bytes; used to prove frozen weights stay frozen.
std::uint64_t checksum(std::span<const Parameter* const> params);

}  // namespace cgswap::nn
