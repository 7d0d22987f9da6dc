#include "cgswap/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <thread>

#include "cgswap/error.hpp"
#include "cgswap/image.hpp"

namespace cgswap {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (epochs < 1 && iterations < 1) throw ConfigError("need epochs >= 1 or iterations >= 1");
  if (crop_size < Encoder::kMinInputSide || crop_size % 8 != 0) {
    throw ConfigError("crop size must be a multiple of 8 and >= 32");
  }
  if (subset < 0 || iterations < 0) throw ConfigError("subset and iterations must be >= 0");
  if (photo_root.empty()) throw ConfigError("photo_root is required");
}

void TrainJob::apply(const ConfigFile& f) {
  f.require_known({"photo_root", "art_root", "batch_size", "learning_rate", "epochs", "iterations", "subset",
                   "crop_size", "prefetch", "seed", "out_dir", "encoder_weights", "decoder_init",
                   "perceptual_weights", "tv_weight"});
  train.photo_root = f.get_path("photo_root", train.photo_root);
  train.art_root = f.get_path("art_root", train.art_root);
  train.batch_size = f.get_int("batch_size", train.batch_size);
  train.learning_rate = f.get_double("learning_rate", train.learning_rate);
  train.epochs = f.get_int("epochs", train.epochs);
  train.iterations = f.get_int("iterations", train.iterations);
  train.subset = f.get_int("subset", train.subset);
  train.crop_size = f.get_int("crop_size", train.crop_size);
  train.prefetch = f.get_int("prefetch", train.prefetch);
  train.seed = static_cast<std::uint64_t>(f.get_int("seed", static_cast<int>(train.seed)));
  train.out_dir = f.get_path("out_dir", train.out_dir);
  encoder_weights = f.get_path("encoder_weights", encoder_weights);
  decoder_init = f.get_path("decoder_init", decoder_init);
  if (auto v = f.get("perceptual_weights")) {
    const auto w = parse_double_list(*v);
    if (w.size() != loss.perceptual.size()) throw ConfigError("perceptual_weights needs 4 values");
    std::copy(w.begin(), w.end(), loss.perceptual.begin());
  }
  loss.tv = f.get_double("tv_weight", loss.tv);
}

std::vector<fs::path> list_images(const fs::path& root) {
  std::vector<fs::path> out;
  if (!fs::is_directory(root)) return out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void write_loss_trace_header(std::ostream& out) {
  out << "iteration,pixel,perc1,perc2,perc3,perc4,tv,total\n";
}

void write_loss_trace_row(std::ostream& out, const LossRecord& r) {
  out << r.iteration << std::setprecision(9) << ',' << r.loss.pixel;
  for (double p : r.loss.perceptual) out << ',' << p;
  out << ',' << r.loss.tv << ',' << r.loss.total << '\n';
}

namespace {

using Batch = std::vector<Tensor>;

Tensor random_crop(const Image& source, int crop, std::mt19937_64& rng) {
  Image img = to_rgb(source);
  const int short_side = std::min(img.height(), img.width());
  if (short_side < crop) {
    const double s = static_cast<double>(crop) / short_side;
    img = resize_to(img, std::max(crop, static_cast<int>(std::ceil(img.height() * s))),
                    std::max(crop, static_cast<int>(std::ceil(img.width() * s))));
  }
  std::uniform_int_distribution<int> dy(0, img.height() - crop);
  std::uniform_int_distribution<int> dx(0, img.width() - crop);
  const int y0 = dy(rng), x0 = dx(rng);
  const bool flip = std::bernoulli_distribution(0.5)(rng);
  Tensor t(3, crop, crop);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < crop; ++y) {
      for (int x = 0; x < crop; ++x) {
        t.at(c, y, x) = img.at(y0 + y, x0 + (flip ? crop - 1 - x : x), c);
      }
    }
  }
  return t;
}

// Deterministic sampler: each epoch reshuffles both pools; a batch draws
// half art (when present) and half photos.
class BatchPlan {
 public:
  BatchPlan(std::vector<fs::path> photos, std::vector<fs::path> art, int batch, std::uint64_t seed)
      : photos_(std::move(photos)), art_(std::move(art)), batch_(batch), rng_(seed) {}

  std::size_t images() const { return photos_.size() + art_.size(); }
  long iterations_per_epoch() const {
    return static_cast<long>((images() + batch_ - 1) / batch_);
  }

  std::vector<fs::path> next() {
    std::vector<fs::path> out;
    const int n_art = art_.empty() ? 0 : batch_ / 2;
    for (int i = 0; i < batch_ - n_art; ++i) out.push_back(draw(photos_, photo_pos_));
    for (int i = 0; i < n_art; ++i) out.push_back(draw(art_, art_pos_));
    return out;
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  const fs::path& draw(std::vector<fs::path>& pool, std::size_t& pos) {
    if (pos % pool.size() == 0) std::shuffle(pool.begin(), pool.end(), rng_);
    return pool[pos++ % pool.size()];
  }

  std::vector<fs::path> photos_, art_;
  int batch_;
  std::mt19937_64 rng_;
  std::size_t photo_pos_ = 0, art_pos_ = 0;
};

}  // namespace

TrainResult train_decoder(const TrainConfig& config, const LossWeights& weights, const Encoder& encoder,
                          Decoder decoder, const std::function<void(const LossRecord&)>& on_step) {
  config.validate();
  weights.validate();

  auto photos = list_images(config.photo_root);
  if (photos.empty()) throw ConfigError("no training images found under " + config.photo_root.string());
  std::vector<fs::path> art;
  if (!config.art_root.empty()) {
    art = list_images(config.art_root);
    if (art.empty()) throw ConfigError("no training images found under " + config.art_root.string());
  }
  std::mt19937_64 pick(config.seed ^ 0x9e3779b97f4a7c15ull);
  if (config.subset > 0) {
    std::shuffle(photos.begin(), photos.end(), pick);
    std::shuffle(art.begin(), art.end(), pick);
    const std::size_t want_art = art.empty() ? 0 : static_cast<std::size_t>(config.subset) / 2;
    const std::size_t want_photo = static_cast<std::size_t>(config.subset) - want_art;
    photos.resize(std::min(photos.size(), want_photo));
    art.resize(std::min(art.size(), want_art));
  }

  BatchPlan plan(photos, art, config.batch_size, config.seed);
  const long per_epoch = plan.iterations_per_epoch();
  const long total = config.iterations > 0 ? config.iterations : per_epoch * config.epochs;

  fs::create_directories(config.out_dir);
  std::ofstream trace_csv(config.out_dir / "loss_trace.csv");
  if (!trace_csv) throw IoError("cannot write " + (config.out_dir / "loss_trace.csv").string());
  write_loss_trace_header(trace_csv);

  TrainResult result{std::move(decoder), {}, {}, encoder.checksum(), 0};
  Decoder& dec = result.decoder;
  auto params = dec.parameters();
  nn::Adam adam(config.learning_rate);
  dec.zero_grad();

  BoundedQueue<Batch> queue(static_cast<std::size_t>(std::max(1, config.prefetch)));
  std::exception_ptr loader_error;
  std::thread loader([&] {
    try {
      for (long it = 0; it < total; ++it) {
        Batch batch;
        for (const fs::path& p : plan.next()) batch.push_back(random_crop(load_image(p), config.crop_size, plan.rng()));
        if (!queue.push(std::move(batch))) return;
      }
    } catch (...) {
      loader_error = std::current_exception();
    }
    queue.close();
  });
  struct JoinGuard {
    BoundedQueue<Batch>& q;
    std::thread& t;
    ~JoinGuard() {
      q.close();
      if (t.joinable()) t.join();
    }
  } guard{queue, loader};

  for (long it = 1; it <= total; ++it) {
    auto batch = queue.pop();
    if (!batch) {
      if (loader_error) std::rethrow_exception(loader_error);
      throw TrainingError("data loader stopped early");
    }
    LossRecord rec;
    rec.iteration = it;
    for (const Tensor& x : *batch) {
      const LayerActivations feats = encoder.forward(x, LayerSet::all());
      Decoder::Trace dtrace;
      const Tensor y = dec.forward(feats.at(VggLayer::conv4_1), &feats.at(VggLayer::conv2_1),
                                   &feats.at(VggLayer::conv1_1), &dtrace);
      Tensor grad;
      const LossBreakdown l = reconstruction_loss(x, feats, y, encoder, weights, &grad);
      if (!std::isfinite(l.total) || !all_finite(grad)) {
        throw TrainingError("non-finite loss at iteration " + std::to_string(it) +
                            " (pixel=" + std::to_string(l.pixel) + ", tv=" + std::to_string(l.tv) +
                            ", total=" + std::to_string(l.total) + ")");
      }
      dec.backward(dtrace, grad);
      const double inv = 1.0 / static_cast<double>(batch->size());
      rec.loss.pixel += l.pixel * inv;
      for (int i = 0; i < kVggTapCount; ++i) rec.loss.perceptual[i] += l.perceptual[i] * inv;
      rec.loss.tv += l.tv * inv;
      rec.loss.total += l.total * inv;
    }
    adam.step(params, 1.0f / static_cast<float>(batch->size()));
    dec.zero_grad();

    result.trace.push_back(rec);
    write_loss_trace_row(trace_csv, rec);
    trace_csv.flush();
    if (on_step) on_step(rec);

    if (it % per_epoch == 0) {
      const fs::path ckpt = config.out_dir / ("decoder_epoch" + std::to_string(it / per_epoch) + ".wt");
      write_tensor_dict(ckpt, dec.to_dict());
      result.checkpoints.push_back(ckpt);
    }
  }
  write_tensor_dict(config.out_dir / "decoder.wt", dec.to_dict());
  result.encoder_checksum_after = encoder.checksum();
  return result;
}

}  // namespace cgswap
