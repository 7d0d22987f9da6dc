#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>

#include <CLI11.hpp>

#include "cgswap/ablation.hpp"
#include "cgswap/bench.hpp"
#include "cgswap/config.hpp"
#include "cgswap/decomposer.hpp"
#include "cgswap/error.hpp"
#include "cgswap/pipeline.hpp"
#include "cgswap/safetensors.hpp"
#include "cgswap/train.hpp"

namespace fs = std::filesystem;
using namespace cgswap;

namespace {

struct WeightPaths {
  std::string dir = "weights";
  std::string encoder;
  std::string decoder;
  std::string decomnet;

  void add(CLI::App* app) {
    app->add_option("--weights-dir", dir, "Directory holding vgg19_conv4_1.wt, decoder.wt, decomnet.wt");
    app->add_option("--encoder", encoder, "Encoder weights (overrides --weights-dir; 'random' for seeded init)");
    app->add_option("--decoder", decoder, "Decoder weights (overrides --weights-dir; 'random' for seeded init)");
    app->add_option("--decomnet", decomnet, "Decom-Net weights for --decomposer learned");
  }
  fs::path encoder_path() const { return encoder.empty() ? fs::path(dir) / "vgg19_conv4_1.wt" : fs::path(encoder); }
  fs::path decoder_path() const { return decoder.empty() ? fs::path(dir) / "decoder.wt" : fs::path(decoder); }
  fs::path decomnet_path() const { return decomnet.empty() ? fs::path(dir) / "decomnet.wt" : fs::path(decomnet); }
};

struct SharedOptions {
  std::string scales;
  int patch = 0;
  std::string decomposer;
  bool no_resize = false;
  int max_side = 0;

  void add(CLI::App* app) {
    app->add_option("--scales", scales, "Style scales, e.g. 1.0,0.667");
    app->add_option("--patch", patch, "Patch side p")->check(CLI::PositiveNumber);
    app->add_option("--decomposer", decomposer, "classical|learned");
    app->add_flag("--no-resize", no_resize, "Keep inputs at full resolution");
    app->add_option("--max-side", max_side, "Longest side after resizing (default 1024)");
  }
  void apply(StylizeOptions& o) const {
    if (!scales.empty()) o.scales = parse_double_list(scales);
    if (patch > 0) o.patch = patch;
    if (!decomposer.empty()) o.decomposer = parse_decomposer(decomposer);
  }
};

Stylizer make_stylizer(const WeightPaths& w, DecomposerKind kind, std::uint64_t seed) {
  std::optional<DecomNet> net;
  if (kind == DecomposerKind::learned) {
    net = w.decomnet == "random" ? DecomNet::random(seed + 2) : DecomNet::load(w.decomnet_path());
  }
  return Stylizer(load_encoder(w.encoder_path(), seed), load_decoder(w.decoder_path(), seed), std::move(net));
}

double mean_total(const std::vector<LossRecord>& trace, std::size_t first, std::size_t count) {
  double s = 0;
  for (std::size_t i = first; i < first + count; ++i) s += trace[i].loss.total;
  return s / static_cast<double>(count);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cgswap: surface/texture channel-grouped patch-swap style transfer"};
  app.require_subcommand(1);

  // stylize
  auto* stylize_cmd = app.add_subcommand("stylize", "Stylize a content image with a style image");
  std::string cfg_path, content, style, out, fusion_mode, style_mask;
  bool fuse = false, emit = false;
  std::uint64_t seed = 0;
  WeightPaths weights;
  SharedOptions shared;
  stylize_cmd->add_option("--config", cfg_path, "key = value config file; flags override it");
  stylize_cmd->add_option("--content", content, "Content image");
  stylize_cmd->add_option("--style", style, "Style image");
  stylize_cmd->add_option("--out", out, "Output PNG");
  stylize_cmd->add_flag("--fuse", fuse, "Complementary fusion of the surface and texture decodes");
  stylize_cmd->add_option("--fusion-mode", fusion_mode, "verbatim|shifted");
  stylize_cmd->add_option("--style-mask", style_mask, "shared|independent");
  stylize_cmd->add_flag("--emit-intermediates", emit, "Also write _L, _R, _LS, _RS images");
  stylize_cmd->add_option("--seed", seed, "Seed for 'random' weights");
  bool decom_fallback = false;
  stylize_cmd->add_flag("--decom-fallback", decom_fallback, "Use the classical decomposer if Decom-Net weights fail to load");
  weights.add(stylize_cmd);
  shared.add(stylize_cmd);

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the decoder on the reconstruction loss");
  std::string train_cfg;
  int iterations = -1, subset = -1;
  std::string train_out;
  train_cmd->add_option("--config", train_cfg, "Training config file")->required();
  train_cmd->add_option("--iterations", iterations, "Stop after N iterations");
  train_cmd->add_option("--subset", subset, "Use N images (half art when an art root is set)");
  train_cmd->add_option("--out-dir", train_out, "Checkpoint directory");

  // ablate
  auto* ablate_cmd = app.add_subcommand("ablate", "Run an ablation over a corpus");
  std::string kind, corpus, ablate_out, ablate_style;
  double alpha = 1.0;
  int block_size = 256;
  WeightPaths ablate_weights;
  SharedOptions ablate_shared;
  ablate_cmd->add_option("--kind", kind, "filters|grouping|fusion")->required();
  ablate_cmd->add_option("--corpus", corpus, "Image directory (or one with content/ and style/)")->required();
  ablate_cmd->add_option("--out", ablate_out, "Report directory")->required();
  ablate_cmd->add_option("--style", ablate_style, "Style image for every content image");
  ablate_cmd->add_option("--alpha", alpha, "Relaxation factor on the fused surface term");
  ablate_cmd->add_option("--block-size", block_size, "Channels per fixed group");
  ablate_weights.add(ablate_cmd);
  ablate_shared.add(ablate_cmd);

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Time the pipeline stages");
  std::string sizes = "512,1024", bench_content, bench_style, bench_csv;
  int runs = 5;
  bool bench_no_fuse = false;
  WeightPaths bench_weights;
  bench_cmd->add_option("--sizes", sizes, "Square input sizes");
  bench_cmd->add_option("--runs", runs, "Runs per size (median reported)")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--content", bench_content, "Content image (default: synthetic)");
  bench_cmd->add_option("--style", bench_style, "Style image (default: synthetic)");
  bench_cmd->add_option("--csv", bench_csv, "Also write medians as CSV");
  bench_cmd->add_flag("--no-fuse", bench_no_fuse, "Time the unfused flow");
  bench_weights.add(bench_cmd);

  // init-weights
  auto* init_cmd = app.add_subcommand("init-weights", "Write seeded stand-in weights");
  std::string init_dir = "weights";
  std::uint64_t init_seed = 0;
  bool init_decomnet = false;
  init_cmd->add_option("--out-dir", init_dir, "Output directory");
  init_cmd->add_option("--seed", init_seed, "Seed");
  init_cmd->add_flag("--decomnet", init_decomnet, "Also write a random decomnet.wt");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*stylize_cmd) {
      StylizeConfig cfg;
      if (!cfg_path.empty()) cfg.apply(ConfigFile::load(cfg_path));
      if (!content.empty()) cfg.content = content;
      if (!style.empty()) cfg.style = style;
      if (!out.empty()) cfg.output = out;
      if (fuse) cfg.options.fuse = true;
      if (!fusion_mode.empty()) cfg.options.fusion.mode = parse_fusion_mode(fusion_mode);
      if (!style_mask.empty()) cfg.options.style_mask = parse_style_mask(style_mask);
      if (emit) cfg.emit_intermediates = true;
      if (decom_fallback) cfg.decom_fallback = true;
      if (stylize_cmd->count("--seed")) cfg.seed = seed;
      if (stylize_cmd->count("--weights-dir") || stylize_cmd->count("--encoder")) cfg.encoder_weights = weights.encoder_path();
      if (stylize_cmd->count("--weights-dir") || stylize_cmd->count("--decoder")) cfg.decoder_weights = weights.decoder_path();
      if (stylize_cmd->count("--weights-dir") || stylize_cmd->count("--decomnet")) cfg.decomnet_weights = weights.decomnet_path();
      shared.apply(cfg.options);
      if (shared.no_resize) cfg.resize = false;
      if (shared.max_side > 0) cfg.max_side = shared.max_side;

      const StylizeResult r = stylize(cfg);
      if (r.used_fallback) std::cerr << "warning: Decom-Net weights unavailable, used the classical decomposer\n";
      std::cerr << "wrote " << cfg.output.string() << " (" << r.output.width() << "x" << r.output.height()
                << "), surface channels " << r.mask.count() << "/" << r.mask.size() << ", retinex "
                << r.timings.retinex << " s, cgps " << r.timings.cgps << " s\n";
      return 0;
    }

    if (*train_cmd) {
      TrainJob job;
      job.apply(ConfigFile::load(train_cfg));
      if (iterations >= 0) job.train.iterations = iterations;
      if (subset >= 0) job.train.subset = subset;
      if (!train_out.empty()) job.train.out_dir = train_out;
      const Encoder encoder = Encoder::load(job.encoder_weights);
      Decoder decoder = job.decoder_init.empty() ? Decoder::random(job.train.seed + 1) : Decoder::load(job.decoder_init);
      const TrainResult r = train_decoder(job.train, job.loss, encoder, std::move(decoder), [](const LossRecord& rec) {
        if (rec.iteration % 10 == 0 || rec.iteration == 1) {
          std::fprintf(stderr, "iter %ld  total %.6g  pixel %.6g  tv %.6g\n", rec.iteration, rec.loss.total,
                       rec.loss.pixel, rec.loss.tv);
        }
      });
      const std::size_t n = r.trace.size(), w = std::min<std::size_t>(10, n);
      if (w > 0) {
        const double head = mean_total(r.trace, 0, w), tail = mean_total(r.trace, n - w, w);
        std::cerr << "mean total loss: first " << w << " iterations " << head << ", last " << w << " " << tail
                  << " (ratio " << tail / head << ")\n";
      }
      std::cerr << "encoder checksum " << (r.encoder_checksum_before == r.encoder_checksum_after ? "unchanged" : "CHANGED")
                << "; checkpoints: " << r.checkpoints.size() << " + " << (job.train.out_dir / "decoder.wt").string()
                << "\n";
      return r.encoder_checksum_before == r.encoder_checksum_after ? 0 : 1;
    }

    if (*ablate_cmd) {
      const AblationKind k = parse_ablation_kind(kind);
      StylizeOptions opts;
      ablate_shared.apply(opts);
      const bool resize = !ablate_shared.no_resize;
      const int max_side = ablate_shared.max_side > 0 ? ablate_shared.max_side : 1024;
      const Corpus c = scan_corpus(corpus, ablate_style);
      if (k == AblationKind::filters) {
        const Encoder enc = load_encoder(ablate_weights.encoder_path(), 0);
        const FilterAblationReport rep = ablate_filters(c.content, enc, ablate_out, resize, max_side);
        for (std::size_t m = 0; m < kSplitMethods.size(); ++m) {
          std::cout << kSplitMethods[m] << ": mean balance " << rep.mean_balance[m] << ", mean surface rate "
                    << rep.mean_surface_rate[m] << '\n';
        }
      } else {
        const Stylizer s = make_stylizer(ablate_weights, opts.decomposer, 0);
        if (k == AblationKind::grouping) {
          ablate_grouping(c, s, {opts, block_size}, ablate_out, resize, max_side);
        } else {
          ablate_fusion(c, s, {opts, alpha}, ablate_out, resize, max_side);
        }
      }
      std::cerr << "wrote " << to_string(k) << " report to " << ablate_out << '\n';
      return 0;
    }

    if (*bench_cmd) {
      const Stylizer s = make_stylizer(bench_weights, DecomposerKind::classical, 0);
      const Image c = bench_content.empty() ? synthetic_image(1024, 1024, 1) : load_image(bench_content);
      const Image st = bench_style.empty() ? synthetic_image(1024, 1024, 2) : load_image(bench_style);
      StylizeOptions opts;
      opts.fuse = !bench_no_fuse;
      const BenchReport rep = run_bench(s, c, st, parse_int_list(sizes), runs, opts);
      write_bench_table(std::cout, rep);
      if (!bench_csv.empty()) {
        std::ofstream f(bench_csv);
        if (!f) throw IoError("cannot write " + bench_csv);
        write_bench_csv(f, rep);
      }
      return 0;
    }

    if (*init_cmd) {
      const fs::path dir(init_dir);
      write_tensor_dict(dir / "vgg19_conv4_1.wt", Encoder::random(init_seed).to_dict());
      write_tensor_dict(dir / "decoder.wt", Decoder::random(init_seed + 1).to_dict());
      if (init_decomnet) write_tensor_dict(dir / "decomnet.wt", DecomNet::random(init_seed + 2).to_dict());
      std::cerr << "wrote seeded weights to " << dir.string() << '\n';
      return 0;
    }
  } catch (const StageError& e) {
    std::cerr << "error in stage '" << e.stage() << "': " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
