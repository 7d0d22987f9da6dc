#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>

#include "cgswap/error.hpp"
#include "cgswap/nn.hpp"
#include "cgswap/safetensors.hpp"
#include "support.hpp"

using namespace cgswap;
using namespace cgswap::nn;
using cgswap::testing::random_tensor;
using cgswap::testing::TempDir;

namespace {

int padded(int i, int n, Padding p) {
  if (i >= 0 && i < n) return i;
  if (p == Padding::zeros) return -1;
  if (n == 1) return 0;
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
  return i;
}

// Textbook direct convolution in double precision.
Tensor naive_conv(const Tensor& x, const Conv2d& conv, Padding pad) {
  const int k = conv.kernel(), r = k / 2, in = conv.in_channels();
  const auto& w = conv.weight().value;
  Tensor out(conv.out_channels(), x.height(), x.width());
  for (int o = 0; o < conv.out_channels(); ++o) {
    for (int y = 0; y < x.height(); ++y) {
      for (int xx = 0; xx < x.width(); ++xx) {
        double acc = conv.bias().value[o];
        for (int c = 0; c < in; ++c) {
          for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
              const int sy = padded(y + ky - r, x.height(), pad), sx = padded(xx + kx - r, x.width(), pad);
              if (sy < 0 || sx < 0) continue;
              acc += static_cast<double>(w[((static_cast<std::size_t>(o) * in + c) * k + ky) * k + kx]) * x.at(c, sy, sx);
            }
          }
        }
        out.at(o, y, xx) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a.values()[i]) * b.values()[i];
  return s;
}

// Central differences of <gout, f(x)> with respect to every entry of x.
Tensor numeric_input_grad(const std::function<Tensor(const Tensor&)>& f, Tensor x, const Tensor& gout, float h) {
  Tensor g(x.channels(), x.height(), x.width());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const float keep = x.values()[i];
    x.values()[i] = keep + h;
    const double up = dot(gout, f(x));
    x.values()[i] = keep - h;
    const double down = dot(gout, f(x));
    x.values()[i] = keep;
    g.values()[i] = static_cast<float>((up - down) / (2.0 * h));
  }
  return g;
}

void check_close(const Tensor& a, const Tensor& b, double tol) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a.values()[i] == doctest::Approx(b.values()[i]).epsilon(tol).scale(1.0));
}

}  // namespace

TEST_SUITE("nn") {
  TEST_CASE("convolution matches the direct oracle") {
    std::mt19937_64 rng(3);
    struct Case {
      int in, out, k, h, w;
    };
    for (Padding pad : {Padding::zeros, Padding::reflect}) {
      for (Case c : {Case{3, 16, 3, 9, 11}, Case{8, 6, 3, 7, 5}, Case{16, 2, 3, 6, 6}, Case{4, 8, 9, 12, 10},
                     Case{5, 7, 1, 4, 4}, Case{6, 12, 3, 1, 5}}) {
        Conv2d conv("t", c.in, c.out, c.k, pad);
        conv.init_he(rng);
        for (float& b : conv.bias().value) b = std::uniform_real_distribution<float>(-0.5f, 0.5f)(rng);
        const Tensor x = random_tensor(c.in, c.h, c.w, rng());
        check_close(conv.forward(x), naive_conv(x, conv, pad), 1e-4);
      }
    }
  }

  TEST_CASE("convolution gradients agree with finite differences") {
    std::mt19937_64 rng(5);
    for (Padding pad : {Padding::zeros, Padding::reflect}) {
      for (auto [in, out] : {std::pair{3, 5}, std::pair{6, 7}}) {
        Conv2d conv("g", in, out, 3, pad);
        conv.init_he(rng);
        const Tensor x = random_tensor(in, 5, 6, rng());
        const Tensor gout = random_tensor(out, 5, 6, rng());
        const Tensor analytic = conv.backward_input(x, gout);
        const Tensor numeric = numeric_input_grad([&](const Tensor& t) { return conv.forward(t); }, x, gout, 1e-2f);
        check_close(analytic, numeric, 2e-3);

        conv.weight().zero_grad();
        conv.bias().zero_grad();
        const Tensor via_backward = conv.backward(x, gout, true);
        check_close(via_backward, analytic, 1e-6);
        for (std::size_t j = 0; j < conv.weight().value.size(); j += 7) {
          float& wj = conv.weight().value[j];
          const float keep = wj;
          wj = keep + 1e-2f;
          const double up = dot(gout, conv.forward(x));
          wj = keep - 1e-2f;
          const double down = dot(gout, conv.forward(x));
          wj = keep;
          CHECK(conv.weight().grad[j] == doctest::Approx((up - down) / 2e-2).epsilon(2e-3).scale(1.0));
        }
        double bias_sum = 0;
        for (int y = 0; y < 5; ++y) {
          for (int x0 = 0; x0 < 6; ++x0) bias_sum += gout.at(1, y, x0);
        }
        CHECK(conv.bias().grad[1] == doctest::Approx(bias_sum).epsilon(1e-5));
      }
    }
  }

  TEST_CASE("pointwise and resampling layers agree with finite differences") {
    // distinct values 0.02 apart, none near zero: no relu kinks or pooling ties within h
    Tensor x(3, 5, 7);
    std::vector<float> vals;
    for (std::size_t i = 0; i < x.size(); ++i) vals.push_back(0.02f * static_cast<float>(i) - 0.51f);
    std::shuffle(vals.begin(), vals.end(), std::mt19937_64(21));
    std::copy(vals.begin(), vals.end(), x.values().begin());
    ReLU relu;
    MaxPool2 pool;
    Upsample2 up;
    const Tensor g_relu = random_tensor(3, 5, 7, 22);
    check_close(relu.backward_input(x, g_relu),
                numeric_input_grad([&](const Tensor& t) { return relu.forward(t); }, x, g_relu, 1e-3f), 1e-3);
    const Tensor g_pool = random_tensor(3, 3, 4, 23);
    check_close(pool.backward_input(x, g_pool),
                numeric_input_grad([&](const Tensor& t) { return pool.forward(t); }, x, g_pool, 1e-3f), 1e-3);
    const Tensor g_up = random_tensor(3, 10, 14, 24);
    check_close(up.backward_input(x, g_up),
                numeric_input_grad([&](const Tensor& t) { return up.forward(t); }, x, g_up, 1e-2f), 1e-3);
  }

  TEST_CASE("max pooling uses ceil mode") {
    Tensor x(1, 3, 3);
    for (int i = 0; i < 9; ++i) x.values()[i] = static_cast<float>(i);
    const Tensor y = MaxPool2().forward(x);
    REQUIRE(y.height() == 2);
    CHECK(y.at(0, 0, 0) == 4.0f);
    CHECK(y.at(0, 0, 1) == 5.0f);
    CHECK(y.at(0, 1, 1) == 8.0f);
  }

  TEST_CASE("sequential backward chains layer gradients") {
    std::mt19937_64 rng(8);
    Sequential net;
    net.emplace<Conv2d>("a", 2, 4, 3, Padding::reflect).init_he(rng);
    net.emplace<ReLU>();
    net.emplace<MaxPool2>();
    net.emplace<Upsample2>();
    net.emplace<Conv2d>("b", 4, 3, 3, Padding::zeros).init_he(rng);
    const Tensor x = random_tensor(2, 6, 6, 30);
    std::vector<Tensor> trace;
    const Tensor y = net.forward(x, trace);
    CHECK(trace.size() == net.size());
    const Tensor gout = random_tensor(y.channels(), y.height(), y.width(), 31);
    check_close(net.backward_input(trace, gout),
                numeric_input_grad([&](const Tensor& t) { return net.forward(t); }, x, gout, 1e-3f), 5e-3);
    CHECK(net.parameters().size() == 4);
  }

  TEST_CASE("adam first step moves by the learning rate against the gradient") {
    Parameter p{"p", {3}, {1.0f, -2.0f, 0.5f}, {0.3f, -4.0f, 0.0f}};
    Adam adam(0.1);
    std::vector<Parameter*> ps{&p};
    adam.step(ps);
    CHECK(p.value[0] == doctest::Approx(0.9f).epsilon(1e-5));
    CHECK(p.value[1] == doctest::Approx(-1.9f).epsilon(1e-5));
    CHECK(p.value[2] == 0.5f);
    CHECK(adam.steps() == 1);
    CHECK_THROWS_AS(Adam(0.0), ArgumentError);
  }

  TEST_CASE("adam minimizes a quadratic") {
    Parameter p{"p", {2}, {3.0f, -1.0f}, {0.0f, 0.0f}};
    std::vector<Parameter*> ps{&p};
    Adam adam(0.05);
    for (int i = 0; i < 500; ++i) {
      p.grad = {2 * (p.value[0] - 1.0f), 2 * (p.value[1] + 2.0f)};
      adam.step(ps);
    }
    CHECK(p.value[0] == doctest::Approx(1.0f).epsilon(1e-2));
    CHECK(p.value[1] == doctest::Approx(-2.0f).epsilon(1e-2));
  }

  TEST_CASE("checksum tracks parameter values") {
    Parameter p{"p", {2}, {1.0f, 2.0f}, {0.0f, 0.0f}};
    const std::vector<const Parameter*> ps{&p};
    const auto before = checksum(ps);
    CHECK(checksum(ps) == before);
    p.value[1] = 2.5f;
    CHECK(checksum(ps) != before);
  }

  TEST_CASE("tensor dictionary round trip") {
    TempDir dir("st");
    TensorDict d;
    d.tensors["a.weight"] = {{2, 3}, {1, 2, 3, 4, 5, 6}};
    d.tensors["b"] = {{1}, {-0.25f}};
    d.metadata["note"] = "x";
    write_tensor_dict(dir / "sub" / "t.wt", d);
    const TensorDict r = read_tensor_dict(dir / "sub" / "t.wt");
    CHECK(r.tensors.at("a.weight").values == d.tensors.at("a.weight").values);
    CHECK(r.tensors.at("a.weight").shape == d.tensors.at("a.weight").shape);
    CHECK(r.metadata.at("note") == "x");
    CHECK(r.require("b", {1}).values[0] == -0.25f);
    CHECK_THROWS_AS(r.require("b", {2}), ConfigError);
    CHECK_THROWS_AS(r.require("missing", {1}), ConfigError);
  }

  TEST_CASE("tensor dictionary reads half and double precision") {
    TempDir dir("st16");
    const std::string header =
        R"({"h":{"dtype":"F16","shape":[2],"data_offsets":[0,4]},"d":{"dtype":"F64","shape":[1],"data_offsets":[4,12]}})";
    std::ofstream out(dir / "mixed.wt", std::ios::binary);
    const std::uint64_t n = header.size();
    out.write(reinterpret_cast<const char*>(&n), 8);
    out << header;
    const std::uint16_t halves[2] = {0x3C00, 0xC000};  // 1.0, -2.0
    out.write(reinterpret_cast<const char*>(halves), 4);
    const double d = 0.125;
    out.write(reinterpret_cast<const char*>(&d), 8);
    out.close();
    const TensorDict r = read_tensor_dict(dir / "mixed.wt");
    CHECK(r.tensors.at("h").values == std::vector<float>{1.0f, -2.0f});
    CHECK(r.tensors.at("d").values == std::vector<float>{0.125f});
  }

  TEST_CASE("tensor dictionary format errors") {
    TempDir dir("stbad");
    CHECK_THROWS_AS(read_tensor_dict(dir / "none.wt"), ConfigError);
    std::ofstream(dir / "short.wt") << "abc";
    CHECK_THROWS_AS(read_tensor_dict(dir / "short.wt"), FormatError);
    {
      std::ofstream out(dir / "json.wt", std::ios::binary);
      const std::string header = "{not json";
      const std::uint64_t n = header.size();
      out.write(reinterpret_cast<const char*>(&n), 8);
      out << header;
    }
    CHECK_THROWS_AS(read_tensor_dict(dir / "json.wt"), FormatError);
    TensorDict bad;
    bad.tensors["x"] = {{3}, {1.0f}};
    CHECK_THROWS_AS(write_tensor_dict(dir / "bad.wt", bad), ArgumentError);
  }
}
