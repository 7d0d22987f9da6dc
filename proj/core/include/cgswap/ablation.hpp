#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "cgswap/filters.hpp"
#include "cgswap/fusion.hpp"
#include "cgswap/grouping.hpp"
#include "cgswap/pipeline.hpp"

namespace cgswap {

enum class AblationKind { filters, grouping, fusion };
std::string to_string(AblationKind kind);
AblationKind parse_ablation_kind(const std::string& name);

/// Content images and the style paired with each. A corpus with content/
/// (and optionally style/) subdirectories uses those; otherwise every image
/// in the directory is content and image i is styled by image i + 1.
struct Corpus {
  std::vector<std::filesystem::path> content;
  std::vector<std::filesystem::path> style;  // parallel to content
};
/// Throws ConfigError when no image is found.
Corpus scan_corpus(const std::filesystem::path& root, const std::filesystem::path& style_override = {});

/// Methods compared in the filter ablation, in table column order.
inline constexpr std::array<const char*, 4> kSplitMethods{"retinex", "gaussian", "bilateral", "guided"};

struct FilterAblationRow {
  std::string id;
  std::array<CodeRateStats, 4> stats;  // kSplitMethods order
};

struct FilterAblationReport {
  std::vector<FilterAblationRow> rows;
  std::array<double, 4> mean_balance{};
  std::array<double, 4> mean_surface_rate{};
};

/// Surface/texture split of `image` by each method: Retinex (L, clamped R)
/// or filter (filtered, shifted residual).
std::array<FilterSpec, 3> ablation_filters(int height, int width);

/// Channel mask per split method for every image. With `out_dir` set,
/// writes balance.csv (image x method balance table), code_rates.csv
/// (id,method,surface,texture,balance scatter data) and summary.csv.
FilterAblationReport ablate_filters(const std::vector<std::filesystem::path>& images, const Encoder& encoder,
                                    const std::filesystem::path& out_dir, bool resize = true,
                                    int max_side = 1024);

struct GroupingAblationOptions {
  StylizeOptions stylize;
  int block_size = 256;  // fixed neighbour-channel blocks
};

/// Per content image writes <id>_mask, <id>_fixed, <id>_full and
/// <id>_channelwise PNGs plus grouping.csv (id,method,groups,seconds).
void ablate_grouping(const Corpus& corpus, const Stylizer& stylizer, const GroupingAblationOptions& options,
                     const std::filesystem::path& out_dir, bool resize = true, int max_side = 1024);

struct FusionAblationOptions {
  StylizeOptions stylize;
  double alpha = 1.0;  // relaxation factor on the surface term
};

/// Per content image writes <id>_off, <id>_verbatim and <id>_shifted PNGs
/// plus fusion.csv (id,mode,mean_weight,mean_luminance).
void ablate_fusion(const Corpus& corpus, const Stylizer& stylizer, const FusionAblationOptions& options,
                   const std::filesystem::path& out_dir, bool resize = true, int max_side = 1024);

}  // namespace cgswap
