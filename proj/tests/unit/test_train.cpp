#include <doctest.h>

#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include "cgswap/error.hpp"
#include "cgswap/train.hpp"
#include "support.hpp"

using namespace cgswap;
using cgswap::testing::TempDir;
namespace fs = std::filesystem;

namespace {

void write_images(const fs::path& dir, int count, std::uint64_t seed) {
  fs::create_directories(dir);
  for (int i = 0; i < count; ++i) {
    save_image(cgswap::testing::gradient_image(40 + 4 * i, 36, seed + i), dir / ("img" + std::to_string(i) + ".png"));
  }
}

const Encoder& encoder() {
  static const Encoder enc = Encoder::random(3);
  return enc;
}

TrainConfig tiny_config(const TempDir& dir) {
  TrainConfig c;
  c.photo_root = dir / "photos";
  c.art_root = dir / "art";
  c.batch_size = 2;
  c.crop_size = 32;
  c.iterations = 3;
  c.learning_rate = 1e-3;
  c.out_dir = dir / "ckpt";
  c.seed = 11;
  return c;
}

}  // namespace

TEST_SUITE("train") {
  TEST_CASE("bounded queue is FIFO") {
    BoundedQueue<int> q(3);
    CHECK(q.capacity() == 3);
    for (int i = 0; i < 3; ++i) CHECK(q.push(i));
    CHECK(q.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(q.pop().value() == i);
    CHECK(BoundedQueue<int>(0).capacity() == 1);
  }

  TEST_CASE("bounded queue blocks the producer while full") {
    BoundedQueue<int> q(2);
    std::atomic<int> pushed{0};
    std::thread producer([&] {
      for (int i = 0; i < 5; ++i) {
        q.push(i);
        ++pushed;
      }
    });
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    CHECK(pushed.load() == 2);
    std::vector<int> got;
    for (int i = 0; i < 5; ++i) got.push_back(*q.pop());
    producer.join();
    CHECK(got == std::vector<int>{0, 1, 2, 3, 4});
  }

  TEST_CASE("closing drains remaining items and wakes waiters") {
    BoundedQueue<int> q(4);
    q.push(7);
    q.push(8);
    q.close();
    CHECK_FALSE(q.push(9));
    CHECK(q.pop().value() == 7);
    CHECK(q.pop().value() == 8);
    CHECK_FALSE(q.pop().has_value());

    BoundedQueue<int> idle(1);
    std::thread consumer([&] { CHECK_FALSE(idle.pop().has_value()); });
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    idle.close();
    consumer.join();
  }

  TEST_CASE("config validation") {
    TrainConfig c;
    c.photo_root = "x";
    CHECK_NOTHROW(c.validate());
    c.crop_size = 36;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.crop_size = 24;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = TrainConfig{};
    c.photo_root = "x";
    c.batch_size = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = TrainConfig{};
    c.photo_root = "x";
    c.learning_rate = -1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }

  TEST_CASE("defaults follow the reference schedule") {
    const TrainConfig c;
    CHECK(c.batch_size == 16);
    CHECK(c.learning_rate == 1e-4);
    CHECK(c.epochs == 5);
    const LossWeights w;
    CHECK(w.tv == 1e-6);
    for (double p : w.perceptual) CHECK(p == 1.0);
  }

  TEST_CASE("train job reads its config") {
    std::istringstream in(
        "photo_root = photos\nart_root = art\nbatch_size = 4\nlearning_rate = 5e-4\niterations = 20\n"
        "crop_size = 64\nperceptual_weights = 1, 0.5, 0.25, 0\ntv_weight = 0\nencoder_weights = w/enc.wt\n");
    ConfigFile f = ConfigFile::parse(in);
    TrainJob job;
    job.apply(f);
    CHECK(job.train.batch_size == 4);
    CHECK(job.train.learning_rate == 5e-4);
    CHECK(job.train.iterations == 20);
    CHECK(job.train.crop_size == 64);
    CHECK(job.loss.perceptual[1] == 0.5);
    CHECK(job.loss.perceptual[3] == 0.0);
    CHECK(job.loss.tv == 0.0);
    CHECK(job.encoder_weights.filename() == "enc.wt");

    std::istringstream bad("photo_root = p\nbatchsize = 3\n");
    CHECK_THROWS_AS(job.apply(ConfigFile::parse(bad)), ConfigError);
    std::istringstream short_list("photo_root = p\nperceptual_weights = 1,2\n");
    CHECK_THROWS_AS(job.apply(ConfigFile::parse(short_list)), ConfigError);
  }

  TEST_CASE("image listing is recursive and sorted") {
    TempDir dir("list");
    write_images(dir / "b", 2, 1);
    write_images(dir / "a", 1, 5);
    std::ofstream(dir / "notes.txt") << "x";
    const auto files = list_images(dir.path());
    REQUIRE(files.size() == 3);
    CHECK(std::is_sorted(files.begin(), files.end()));
    CHECK(files.front().parent_path().filename() == "a");
  }

  TEST_CASE("tiny run writes checkpoints and a loss trace, encoder untouched") {
    TempDir dir("train");
    write_images(dir / "photos", 2, 10);
    write_images(dir / "art", 2, 20);
    const TrainConfig c = tiny_config(dir);
    int calls = 0;
    const TrainResult r = train_decoder(c, LossWeights{}, encoder(), Decoder::random(4), [&](const LossRecord&) { ++calls; });
    CHECK(calls == 3);
    REQUIRE(r.trace.size() == 3);
    for (const auto& rec : r.trace) CHECK(std::isfinite(rec.loss.total));
    CHECK(r.trace[0].iteration == 1);
    CHECK(r.encoder_checksum_before == r.encoder_checksum_after);
    CHECK(r.encoder_checksum_after == encoder().checksum());
    CHECK(fs::exists(c.out_dir / "decoder.wt"));
    CHECK(fs::exists(c.out_dir / "decoder_epoch1.wt"));
    CHECK(fs::exists(c.out_dir / "loss_trace.csv"));
    std::ifstream csv(c.out_dir / "loss_trace.csv");
    std::string line;
    int rows = 0;
    std::getline(csv, line);
    CHECK(line.rfind("iteration,", 0) == 0);
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 3);
    const Decoder saved = Decoder::load(c.out_dir / "decoder.wt");
    CHECK(saved.parameters().size() == r.decoder.parameters().size());
    CHECK(saved.parameters().front()->value == r.decoder.parameters().front()->value);
  }

  TEST_CASE("training is deterministic for a fixed seed") {
    TempDir dir("det");
    write_images(dir / "photos", 2, 30);
    write_images(dir / "art", 2, 40);
    TrainConfig c = tiny_config(dir);
    c.iterations = 2;
    const TrainResult a = train_decoder(c, LossWeights{}, encoder(), Decoder::random(4));
    const TrainResult b = train_decoder(c, LossWeights{}, encoder(), Decoder::random(4));
    CHECK(a.trace[1].loss.total == b.trace[1].loss.total);
  }

  TEST_CASE("non-finite weights raise a training error") {
    TempDir dir("nan");
    write_images(dir / "photos", 2, 50);
    TrainConfig c = tiny_config(dir);
    c.art_root.clear();
    Decoder dec = Decoder::random(5);
    for (float& v : dec.parameters().back()->value) v = std::nanf("");
    CHECK_THROWS_AS(train_decoder(c, LossWeights{}, encoder(), std::move(dec)), TrainingError);
  }

  TEST_CASE("missing or empty datasets are config errors") {
    TempDir dir("empty");
    TrainConfig c = tiny_config(dir);
    CHECK_THROWS_AS(train_decoder(c, LossWeights{}, encoder(), Decoder::random(1)), ConfigError);
    fs::create_directories(dir / "photos");
    c.art_root.clear();
    CHECK_THROWS_AS(train_decoder(c, LossWeights{}, encoder(), Decoder::random(1)), ConfigError);
  }
}
