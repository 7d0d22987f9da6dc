#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <vector>

#include "cgswap/config.hpp"
#include "cgswap/loss.hpp"
#include "cgswap/vgg.hpp"

namespace cgswap {

/// Blocking FIFO with a fixed capacity; push blocks while full, pop blocks
/// while empty. close() releases every waiter; pop then drains what is left
/// and returns nullopt once empty.
template <class T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

  bool push(T value) {
    std::unique_lock lock(mutex_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) return false;
    items_.push_back(std::move(value));
    not_empty_.notify_one();
    return true;
  }

  std::optional<T> pop() {
    std::unique_lock lock(mutex_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T value = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return value;
  }

  void close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    not_full_.notify_all();
    not_empty_.notify_all();
  }

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return items_.size();
  }

 private:
  const std::size_t capacity_;
  mutable std::mutex mutex_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
  std::deque<T> items_;
  bool closed_ = false;
};

struct TrainConfig {
  int batch_size = 16;
  double learning_rate = 1e-4;
  int epochs = 5;
  std::filesystem::path photo_root;
  std::filesystem::path art_root;  // optional; mixed 1:1 with photos when set
  int iterations = 0;              // 0: run all epochs
  int subset = 0;                  // 0: every image found
  int crop_size = 256;             // multiple of 8
  int prefetch = 2;                // batches in flight
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "checkpoints";

  void validate() const;
};

struct LossRecord {
  long iteration = 0;
  LossBreakdown loss;
};

struct TrainResult {
  Decoder decoder;
  std::vector<LossRecord> trace;
  std::vector<std::filesystem::path> checkpoints;
  std::uint64_t encoder_checksum_before = 0;
  std::uint64_t encoder_checksum_after = 0;
};

/// Everything a `train` run reads from its config file.
///
/// Keys: photo_root, art_root, batch_size, learning_rate, epochs, iterations,
/// subset, crop_size, prefetch, seed, out_dir, encoder_weights, decoder_init,
/// perceptual_weights (4 comma-separated values), tv_weight.
struct TrainJob {
  TrainConfig train;
  LossWeights loss;
  std::filesystem::path encoder_weights = "weights/vgg19_conv4_1.wt";
  std::filesystem::path decoder_init;  // empty: seeded random decoder

  void apply(const ConfigFile& file);
};

/// Sorted PNG/JPEG files under `root` (recursive).
std::vector<std::filesystem::path> list_images(const std::filesystem::path& root);

/// Adam on the reconstruction loss with the encoder frozen. Writes
/// `decoder_epoch{k}.wt` after each completed epoch, `decoder.wt` at the end
/// and `loss_trace.csv` (iteration,pixel,perc1..perc4,tv,total) as it goes.
TrainResult train_decoder(const TrainConfig& config, const LossWeights& weights, const Encoder& encoder,
                          Decoder decoder, const std::function<void(const LossRecord&)>& on_step = {});

void write_loss_trace_header(std::ostream& out);
void write_loss_trace_row(std::ostream& out, const LossRecord& record);

}  // namespace cgswap
