#include "cgswap/swap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <cblas.h>

#include "cgswap/error.hpp"

namespace cgswap {

namespace {

constexpr std::size_t kScoreBudget = std::size_t{1} << 24;  // floats per score tile

void require_swappable(const FeatureMap& content, const PatchBank& bank) {
  if (bank.empty()) throw ArgumentError("patch bank is empty");
  if (content.channels() != bank.channels()) {
    throw ArgumentError("content has " + std::to_string(content.channels()) + " channels, bank has " +
                        std::to_string(bank.channels()));
  }
  if (content.height() < bank.patch_side() || content.width() < bank.patch_side()) {
    throw ArgumentError("content feature smaller than the patch side");
  }
}

bool plane_is_zero(std::span<const float> plane) {
  return std::all_of(plane.begin(), plane.end(), [](float v) { return v == 0.0f; });
}

// Overlap-averaged placement of winning raw patches (shared by both paths'
// output contract, written out separately in each).
void normalize_by_count(FeatureMap& out, const std::vector<float>& count) {
  for (int c = 0; c < out.channels(); ++c) {
    auto plane = out.plane(c);
    for (std::size_t i = 0; i < plane.size(); ++i) plane[i] /= count[i];
  }
}

}  // namespace

// ---------------------------------------------------------------- PatchBank

PatchBank::PatchBank(int patch_side) : side_(patch_side) {
  if (patch_side < 1) throw ArgumentError("patch side must be >= 1");
}

void PatchBank::add_source(double scale, FeatureMap feature) {
  if (feature.height() < side_ || feature.width() < side_) {
    throw ArgumentError("feature map (" + std::to_string(feature.height()) + "x" +
                        std::to_string(feature.width()) + ") smaller than patch side " +
                        std::to_string(side_));
  }
  if (!sources_.empty() && feature.channels() != channels_) {
    throw ArgumentError("all bank sources must share a channel count");
  }
  channels_ = feature.channels();
  const int source = static_cast<int>(sources_.size());
  const int gh = feature.height() - side_ + 1;
  const int gw = feature.width() - side_ + 1;
  origins_.reserve(origins_.size() + static_cast<std::size_t>(gh) * gw);
  for (int y = 0; y < gh; ++y) {
    for (int x = 0; x < gw; ++x) origins_.push_back({source, scale, y, x});
  }
  FeatureMap centered = center_channels(feature);
  sources_.push_back({scale, std::move(feature), std::move(centered)});
}

std::vector<float> PatchBank::patch(std::size_t j) const {
  const PatchOrigin& o = origin(j);
  const FeatureMap& f = sources_[o.source].values;
  std::vector<float> out;
  out.reserve(patch_length());
  for (int c = 0; c < channels_; ++c) {
    for (int dy = 0; dy < side_; ++dy) {
      for (int dx = 0; dx < side_; ++dx) out.push_back(f.at(c, o.y + dy, o.x + dx));
    }
  }
  return out;
}

std::vector<float> PatchBank::centered_patch(std::size_t j) const {
  const PatchOrigin& o = origin(j);
  const FeatureMap& f = sources_[o.source].centered;
  std::vector<float> out;
  out.reserve(patch_length());
  for (int c = 0; c < channels_; ++c) {
    for (int dy = 0; dy < side_; ++dy) {
      for (int dx = 0; dx < side_; ++dx) out.push_back(f.at(c, o.y + dy, o.x + dx));
    }
  }
  return out;
}

// ---------------------------------------------------------------- building

FeatureMap center_channels(const FeatureMap& feature) {
  if (feature.plane_size() == 0) throw ArgumentError("cannot center an empty feature map");
  FeatureMap out = feature;
  for (int c = 0; c < out.channels(); ++c) {
    auto plane = out.plane(c);
    double s = 0.0;
    for (float v : plane) s += v;
    const float mean = static_cast<float>(s / static_cast<double>(plane.size()));
    for (float& v : plane) v -= mean;
  }
  return out;
}

PatchBank extract_patches(const FeatureMap& feature, int patch_side, int stride) {
  if (stride != 1) throw ArgumentError("only stride 1 patch extraction is supported");
  PatchBank bank(patch_side);
  bank.add_source(1.0, feature);
  return bank;
}

PatchBank build_bank(std::span<const ScaledFeature> features, int patch_side) {
  PatchBank bank(patch_side);
  for (const ScaledFeature& f : features) bank.add_source(f.scale, f.feature);
  return bank;
}

std::vector<ScaledFeature> encode_multiscale(const Image& style, std::span<const double> scales,
                                             const Encoder& encoder) {
  if (scales.empty()) throw ArgumentError("at least one style scale is required");
  std::vector<ScaledFeature> out;
  for (double s : scales) {
    if (!(s > 0.0)) throw ArgumentError("style scale must be positive, got " + std::to_string(s));
    const int h = static_cast<int>(std::lround(s * style.height()));
    const int w = static_cast<int>(std::lround(s * style.width()));
    if (h < Encoder::kMinInputSide || w < Encoder::kMinInputSide) {
      throw ArgumentError("style scale " + std::to_string(s) + " gives " + std::to_string(h) + "x" +
                          std::to_string(w) + " px, below the encoder minimum of " +
                          std::to_string(Encoder::kMinInputSide));
    }
    const Image scaled = s == 1.0 ? style : resize(style, s);
    auto acts = encoder.encode(scaled, {VggLayer::conv4_1});
    out.push_back({s, std::move(acts.at(VggLayer::conv4_1))});
  }
  return out;
}

PatchBank build_multiscale_bank(const Image& style, std::span<const double> scales,
                                const Encoder& encoder, int patch_side) {
  const auto features = encode_multiscale(style, scales, encoder);
  return build_bank(features, patch_side);
}

std::vector<ScaledFeature> select_channels(std::span<const ScaledFeature> style, const ChannelMask& mask) {
  std::vector<ScaledFeature> out;
  out.reserve(style.size());
  for (const ScaledFeature& f : style) out.push_back({f.scale, select_channels(f.feature, mask)});
  return out;
}

// ---------------------------------------------------------------- scoring

double upcc_score(std::span<const float> content_patch, std::span<const float> style_patch) {
  if (content_patch.size() != style_patch.size()) {
    throw ArgumentError("UPCC requires patches of equal shape");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < content_patch.size(); ++i) {
    s += static_cast<double>(content_patch[i]) * static_cast<double>(style_patch[i]);
  }
  return s;
}

WindowMatch match_window_bruteforce(const FeatureMap& cc, const PatchBank& bank, int y, int x) {
  const int p = bank.patch_side();
  const int C = bank.channels();
  WindowMatch best{0, -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  double second = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < bank.size(); ++j) {
    const PatchOrigin& o = bank.origin(j);
    const FeatureMap& s = bank.sources()[o.source].centered;
    double score = 0.0;
    for (int c = 0; c < C; ++c) {
      for (int dy = 0; dy < p; ++dy) {
        for (int dx = 0; dx < p; ++dx) {
          score += static_cast<double>(cc.at(c, y + dy, x + dx)) *
                   static_cast<double>(s.at(c, o.y + dy, o.x + dx));
        }
      }
    }
    if (score > best.score) {
      second = best.score;
      best.score = score;
      best.index = static_cast<std::int32_t>(j);
    } else if (score > second) {
      second = score;
    }
  }
  best.gap = bank.size() > 1 ? best.score - second : std::numeric_limits<double>::infinity();
  return best;
}

SwapResult swap_bruteforce(const FeatureMap& content, const PatchBank& bank) {
  require_swappable(content, bank);
  const int p = bank.patch_side();
  const FeatureMap cc = center_channels(content);

  SwapResult r;
  r.grid_height = content.height() - p + 1;
  r.grid_width = content.width() - p + 1;
  const std::size_t cells = static_cast<std::size_t>(r.grid_height) * r.grid_width;
  r.assignment.resize(cells);
  r.best_score.resize(cells);
  r.top2_gap.resize(cells);
  for (int y = 0; y < r.grid_height; ++y) {
    for (int x = 0; x < r.grid_width; ++x) {
      const WindowMatch m = match_window_bruteforce(cc, bank, y, x);
      const std::size_t loc = static_cast<std::size_t>(y) * r.grid_width + x;
      r.assignment[loc] = m.index;
      r.best_score[loc] = m.score;
      r.top2_gap[loc] = m.gap;
    }
  }

  r.swapped = FeatureMap(content.channels(), content.height(), content.width());
  std::vector<float> count(content.plane_size(), 0.0f);
  for (int y = 0; y < r.grid_height; ++y) {
    for (int x = 0; x < r.grid_width; ++x) {
      const PatchOrigin& o = bank.origin(r.assignment[static_cast<std::size_t>(y) * r.grid_width + x]);
      const FeatureMap& s = bank.sources()[o.source].values;
      for (int c = 0; c < content.channels(); ++c) {
        for (int dy = 0; dy < p; ++dy) {
          for (int dx = 0; dx < p; ++dx) r.swapped.at(c, y + dy, x + dx) += s.at(c, o.y + dy, o.x + dx);
        }
      }
      for (int dy = 0; dy < p; ++dy) {
        for (int dx = 0; dx < p; ++dx) count[static_cast<std::size_t>(y + dy) * content.width() + x + dx] += 1.0f;
      }
    }
  }
  normalize_by_count(r.swapped, count);
  return r;
}

SwapResult swap_accelerated(const FeatureMap& content, const PatchBank& bank) {
  require_swappable(content, bank);
  const int p = bank.patch_side();
  const int p2 = p * p;
  const FeatureMap cc = center_channels(content);

  // Channels that are zero on either side contribute nothing to any score.
  std::vector<int> active;
  for (int c = 0; c < cc.channels(); ++c) {
    if (plane_is_zero(cc.plane(c))) continue;
    bool bank_nonzero = false;
    for (const auto& src : bank.sources()) bank_nonzero = bank_nonzero || !plane_is_zero(src.centered.plane(c));
    if (bank_nonzero) active.push_back(c);
  }

  SwapResult r;
  r.grid_height = content.height() - p + 1;
  r.grid_width = content.width() - p + 1;
  const std::size_t cells = static_cast<std::size_t>(r.grid_height) * r.grid_width;
  r.assignment.assign(cells, 0);
  r.best_score.assign(cells, 0.0);

  const std::size_t N = bank.size();
  const std::size_t K = active.size() * static_cast<std::size_t>(p2);

  if (K > 0) {
    // Style kernel: one row per bank patch over the active channels.
    std::vector<float> kernel(N * K);
    double max_norm = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      const PatchOrigin& o = bank.origin(j);
      const FeatureMap& s = bank.sources()[o.source].centered;
      float* row = kernel.data() + j * K;
      double nrm = 0.0;
      std::size_t k = 0;
      for (int c : active) {
        for (int dy = 0; dy < p; ++dy) {
          for (int dx = 0; dx < p; ++dx) {
            const float v = s.at(c, o.y + dy, o.x + dx);
            row[k++] = v;
            nrm += static_cast<double>(v) * v;
          }
        }
      }
      max_norm = std::max(max_norm, std::sqrt(nrm));
    }

    const double u = std::ldexp(1.0, -24);
    const double gamma = K * u / (1.0 - K * u);
    const std::size_t tile = std::clamp<std::size_t>(kScoreBudget / N, 1, cells);
    std::vector<float> windows(tile * K);
    std::vector<float> scores(tile * N);
    std::vector<std::size_t> candidates;

    for (std::size_t l0 = 0; l0 < cells; l0 += tile) {
      const std::size_t lt = std::min(tile, cells - l0);
      for (std::size_t l = 0; l < lt; ++l) {
        const int y = static_cast<int>((l0 + l) / r.grid_width);
        const int x = static_cast<int>((l0 + l) % r.grid_width);
        float* row = windows.data() + l * K;
        std::size_t k = 0;
        for (int c : active) {
          for (int dy = 0; dy < p; ++dy) {
            for (int dx = 0; dx < p; ++dx) row[k++] = cc.at(c, y + dy, x + dx);
          }
        }
      }
      // scores (lt x N) = windows (lt x K) * kernel^T
      cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasTrans, static_cast<int>(lt), static_cast<int>(N),
                  static_cast<int>(K), 1.0f, windows.data(), static_cast<int>(K), kernel.data(),
                  static_cast<int>(K), 0.0f, scores.data(), static_cast<int>(N));

      for (std::size_t l = 0; l < lt; ++l) {
        const float* srow = scores.data() + l * N;
        const float* wrow = windows.data() + l * K;
        double wn = 0.0;
        for (std::size_t k = 0; k < K; ++k) wn += static_cast<double>(wrow[k]) * wrow[k];
        const double margin = 2.0 * gamma * std::sqrt(wn) * max_norm;
        const float fmax = *std::max_element(srow, srow + N);
        const double threshold = static_cast<double>(fmax) - margin;

        candidates.clear();
        for (std::size_t j = 0; j < N; ++j) {
          if (static_cast<double>(srow[j]) >= threshold) candidates.push_back(j);
        }
        std::int32_t best = static_cast<std::int32_t>(candidates.front());
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t j : candidates) {
          const float* krow = kernel.data() + j * K;
          double s = 0.0;
          for (std::size_t k = 0; k < K; ++k) s += static_cast<double>(wrow[k]) * static_cast<double>(krow[k]);
          if (s > best_score) {
            best_score = s;
            best = static_cast<std::int32_t>(j);
          }
        }
        r.rescored += candidates.size();
        r.assignment[l0 + l] = best;
        r.best_score[l0 + l] = best_score;
      }
    }
  }

  // Transposed convolution of the one-hot selection with the raw style
  // kernel, i.e. scatter-add of winning patches, then overlap averaging.
  const int C = content.channels();
  r.swapped = FeatureMap(C, content.height(), content.width());
  std::vector<float> count(content.plane_size(), 0.0f);
  const std::size_t W = static_cast<std::size_t>(content.width());
  for (std::size_t loc = 0; loc < cells; ++loc) {
    const int y = static_cast<int>(loc / r.grid_width);
    const int x = static_cast<int>(loc % r.grid_width);
    const PatchOrigin& o = bank.origin(r.assignment[loc]);
    const FeatureMap& s = bank.sources()[o.source].values;
    for (int c = 0; c < C; ++c) {
      float* dst = r.swapped.plane(c).data();
      for (int dy = 0; dy < p; ++dy) {
        const float* src = &s.at(c, o.y + dy, o.x);
        float* d = dst + (y + dy) * W + x;
        for (int dx = 0; dx < p; ++dx) d[dx] += src[dx];
      }
    }
    for (int dy = 0; dy < p; ++dy) {
      for (int dx = 0; dx < p; ++dx) count[(y + dy) * W + x + dx] += 1.0f;
    }
  }
  normalize_by_count(r.swapped, count);
  return r;
}

FeatureMap swap_grouped(const FeatureMap& content, std::span<const ScaledFeature> style,
                        std::span<const ChannelMask> groups, int patch_side) {
  if (groups.empty()) throw ArgumentError("at least one channel group is required");
  FeatureMap out(content.channels(), content.height(), content.width());
  for (const ChannelMask& g : groups) {
    const PatchBank bank = build_bank(select_channels(style, g), patch_side);
    out += swap_accelerated(select_channels(content, g), bank).swapped;
  }
  return out;
}

void write_assignment_csv(std::ostream& out, const SwapResult& result, const PatchBank& bank) {
  out << "location,y,x,bank_index,scale,origin_y,origin_x\n";
  for (std::size_t loc = 0; loc < result.assignment.size(); ++loc) {
    const PatchOrigin& o = bank.origin(result.assignment[loc]);
    out << loc << ',' << loc / result.grid_width << ',' << loc % result.grid_width << ','
        << result.assignment[loc] << ',' << o.scale << ',' << o.y << ',' << o.x << '\n';
  }
}

}  // namespace cgswap
