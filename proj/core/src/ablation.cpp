#include "cgswap/ablation.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>

#include "cgswap/decomposer.hpp"
#include "cgswap/error.hpp"
#include "cgswap/swap.hpp"
#include "cgswap/train.hpp"

namespace cgswap {

namespace fs = std::filesystem;

std::string to_string(AblationKind kind) {
  switch (kind) {
    case AblationKind::filters: return "filters";
    case AblationKind::grouping: return "grouping";
    case AblationKind::fusion: return "fusion";
  }
  return "?";
}

AblationKind parse_ablation_kind(const std::string& name) {
  if (name == "filters") return AblationKind::filters;
  if (name == "grouping") return AblationKind::grouping;
  if (name == "fusion") return AblationKind::fusion;
  throw ConfigError("unknown ablation kind '" + name + "' (filters|grouping|fusion)");
}

Corpus scan_corpus(const fs::path& root, const fs::path& style_override) {
  Corpus corpus;
  std::vector<fs::path> pool;
  bool paired_self = false;
  if (fs::is_directory(root / "content")) {
    corpus.content = list_images(root / "content");
    pool = list_images(root / "style");
  } else {
    corpus.content = list_images(root);
  }
  if (corpus.content.empty()) throw ConfigError("no images found in corpus " + root.string());
  if (!style_override.empty()) {
    pool = {style_override};
  } else if (pool.empty()) {
    pool = corpus.content;
    paired_self = true;
  }
  for (std::size_t i = 0; i < corpus.content.size(); ++i) {
    corpus.style.push_back(pool[(paired_self ? i + 1 : i) % pool.size()]);
  }
  return corpus;
}

std::array<FilterSpec, 3> ablation_filters(int height, int width) {
  const double scale = std::max(height, width) / 512.0;
  const int radius = std::max(2, static_cast<int>(std::lround(8 * scale)));
  return {default_illumination_filter(height, width),
          FilterSpec::bilateral(2 * radius + 1, std::max(1.0, radius / 2.0), 0.1),
          FilterSpec::guided(radius, 1e-2)};
}

namespace {

std::string image_id(const fs::path& p) { return p.stem().string(); }

std::ofstream open_csv(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(9);
  return out;
}

ChannelMask split_mask(const Image& surface, const Image& texture, const Encoder& encoder) {
  const LayerSet deep{VggLayer::conv4_1};
  return compute_mask(gap(encoder.encode(surface, deep).at(VggLayer::conv4_1)),
                      gap(encoder.encode(texture, deep).at(VggLayer::conv4_1)));
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

FilterAblationReport ablate_filters(const std::vector<fs::path>& images, const Encoder& encoder,
                                    const fs::path& out_dir, bool resize, int max_side) {
  if (images.empty()) throw ConfigError("filter ablation needs at least one image");
  FilterAblationReport report;
  for (const fs::path& path : images) {
    const Image img = prepare_input(load_image(path), resize, max_side);
    FilterAblationRow row;
    row.id = image_id(path);

    const DecompositionPair pair =
        decompose_classical(img, default_illumination_filter(img.height(), img.width()));
    Image reflectance = pair.reflectance;
    clamp01(reflectance);
    row.stats[0] = code_rate_stats(split_mask(pair.illumination, reflectance, encoder));

    const auto specs = ablation_filters(img.height(), img.width());
    for (std::size_t k = 0; k < specs.size(); ++k) {
      const Image smooth = apply_filter(img, specs[k]);
      row.stats[k + 1] = code_rate_stats(split_mask(smooth, texture_residual(img, smooth), encoder));
    }
    report.rows.push_back(row);
  }
  const double n = static_cast<double>(report.rows.size());
  for (const auto& row : report.rows) {
    for (std::size_t m = 0; m < kSplitMethods.size(); ++m) {
      const auto& s = row.stats[m];
      report.mean_balance[m] += s.balance / n;
      report.mean_surface_rate[m] += static_cast<double>(s.surface) / (s.surface + s.texture) / n;
    }
  }

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    auto table = open_csv(out_dir / "balance.csv");
    table << "image";
    for (const char* m : kSplitMethods) table << ',' << m;
    table << '\n';
    for (const auto& row : report.rows) {
      table << row.id;
      for (const auto& s : row.stats) table << ',' << s.balance;
      table << '\n';
    }
    auto points = open_csv(out_dir / "code_rates.csv");
    points << "id,method,surface,texture,balance\n";
    for (const auto& row : report.rows) {
      for (std::size_t m = 0; m < kSplitMethods.size(); ++m) {
        write_code_rate_row(points, row.id + "," + kSplitMethods[m], row.stats[m]);
      }
    }
    auto summary = open_csv(out_dir / "summary.csv");
    summary << "method,mean_balance,mean_surface_rate\n";
    for (std::size_t m = 0; m < kSplitMethods.size(); ++m) {
      summary << kSplitMethods[m] << ',' << report.mean_balance[m] << ',' << report.mean_surface_rate[m] << '\n';
    }
  }
  return report;
}

void ablate_grouping(const Corpus& corpus, const Stylizer& stylizer, const GroupingAblationOptions& options,
                     const fs::path& out_dir, bool resize, int max_side) {
  if (corpus.content.empty()) throw ConfigError("grouping ablation needs at least one image");
  if (options.block_size < 1) throw ConfigError("block size must be >= 1");
  fs::create_directories(out_dir);
  auto csv = open_csv(out_dir / "grouping.csv");
  csv << "id,method,groups,seconds\n";
  const Encoder& enc = stylizer.encoder();
  const int channels = kVggTapChannels[static_cast<int>(VggLayer::conv4_1)];

  for (std::size_t i = 0; i < corpus.content.size(); ++i) {
    const Image content = prepare_input(load_image(corpus.content[i]), resize, max_side);
    const Image style = prepare_input(load_image(corpus.style[i]), resize, max_side);
    const std::string id = image_id(corpus.content[i]);

    StylizeOptions opts = options.stylize;
    opts.fuse = false;
    auto t0 = std::chrono::steady_clock::now();
    const StylizeResult masked = stylizer.run(content, style, opts);
    csv << id << ",mask,2," << seconds_since(t0) << '\n';
    save_image(masked.output, out_dir / (id + "_mask.png"));

    const LayerActivations feats =
        enc.encode(content, {VggLayer::conv1_1, VggLayer::conv2_1, VggLayer::conv4_1});
    const auto style_feats = encode_multiscale(style, opts.scales, enc);
    const std::array<std::pair<const char*, int>, 3> variants{
        {{"fixed", options.block_size}, {"full", channels}, {"channelwise", 1}}};
    for (const auto& [name, size] : variants) {
      t0 = std::chrono::steady_clock::now();
      const auto groups = fixed_grouping(channels, size);
      const FeatureMap swapped = swap_grouped(feats.at(VggLayer::conv4_1), style_feats, groups, opts.patch);
      const Image out = decode(swapped, stylizer.decoder(), &feats);
      csv << id << ',' << name << ',' << groups.size() << ',' << seconds_since(t0) << '\n';
      save_image(out, out_dir / (id + "_" + name + ".png"));
    }
  }
}

void ablate_fusion(const Corpus& corpus, const Stylizer& stylizer, const FusionAblationOptions& options,
                   const fs::path& out_dir, bool resize, int max_side) {
  if (corpus.content.empty()) throw ConfigError("fusion ablation needs at least one image");
  if (!(options.alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
  fs::create_directories(out_dir);
  auto csv = open_csv(out_dir / "fusion.csv");
  csv << "id,mode,mean_weight,mean_luminance\n";

  auto mean_of = [](const auto& values) {
    double s = 0;
    for (float v : values) s += v;
    return values.empty() ? 0.0 : s / static_cast<double>(values.size());
  };

  for (std::size_t i = 0; i < corpus.content.size(); ++i) {
    const Image content = prepare_input(load_image(corpus.content[i]), resize, max_side);
    const Image style = prepare_input(load_image(corpus.style[i]), resize, max_side);
    const std::string id = image_id(corpus.content[i]);

    StylizeOptions opts = options.stylize;
    opts.fuse = false;
    opts.decode_parts = true;
    const StylizeResult r = stylizer.run(content, style, opts);
    save_image(r.output, out_dir / (id + "_off.png"));
    csv << id << ",off,0," << mean_of(to_luminance(r.output).values()) << '\n';

    const WeightMap cw = complementary_weights(*r.texture_image);
    for (FusionMode mode : {FusionMode::verbatim, FusionMode::shifted}) {
      FusionConfig fc = opts.fusion;
      fc.mode = mode;
      const WeightMap w = activate_weights(cw, fc);
      const Image out = fuse_relaxed(*r.texture_image, *r.surface_image, w, options.alpha);
      save_image(out, out_dir / (id + "_" + to_string(mode) + ".png"));
      csv << id << ',' << to_string(mode) << ',' << mean_of(w.values()) << ','
          << mean_of(to_luminance(out).values()) << '\n';
    }
  }
}

}  // namespace cgswap
