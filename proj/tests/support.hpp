#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "cgswap/image.hpp"
#include "cgswap/tensor.hpp"

namespace cgswap::testing {

inline Image random_image(int h, int w, int c, std::uint64_t seed) {
  Image img(h, w, c);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> d(0.0f, 1.0f);
  for (float& v : img.values()) v = d(rng);
  return img;
}

inline Tensor random_tensor(int c, int h, int w, std::uint64_t seed, float lo = -1.0f, float hi = 1.0f) {
  Tensor t(c, h, w);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> d(lo, hi);
  for (float& v : t.values()) v = d(rng);
  return t;
}

/// Smooth colour gradient with a little structure; usable as a photo stand-in.
inline Image gradient_image(int h, int w, std::uint64_t seed) {
  Image img(h, w, 3);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> d(-0.03f, 0.03f);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float u = static_cast<float>(x) / w, v = static_cast<float>(y) / h;
      img.at(y, x, 0) = std::clamp(0.2f + 0.6f * u + d(rng), 0.0f, 1.0f);
      img.at(y, x, 1) = std::clamp(0.8f - 0.5f * v + d(rng), 0.0f, 1.0f);
      img.at(y, x, 2) = std::clamp(0.3f + 0.4f * u * v + ((x / 8 + y / 8) % 2 ? 0.2f : 0.0f), 0.0f, 1.0f);
    }
  }
  return img;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("cgswap_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::filesystem::path data_dir() { return CGSWAP_DATA_DIR; }

}  // namespace cgswap::testing
