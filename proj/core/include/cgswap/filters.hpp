#pragma once

#include <string>

#include "cgswap/image.hpp"

namespace cgswap {

enum class FilterKind { gaussian, bilateral, guided };

/// Edge-aware or plain smoothing used to split an image into a surface
/// (smooth) part and a texture (residual) part.
struct FilterSpec {
  FilterKind kind = FilterKind::gaussian;
  int size = 5;               // odd window side, >= 3
  double sigma = 1.0;         // gaussian: spatial sigma; bilateral: spatial sigma
  double range_sigma = 0.1;   // bilateral only, in intensity units
  double epsilon = 1e-2;      // guided only, regularizer on local variance

  /// Gaussian with window 2*ceil(3*sigma)+1.
  static FilterSpec gaussian(double sigma);
  static FilterSpec gaussian(double sigma, int size);
  static FilterSpec bilateral(int size, double spatial_sigma, double range_sigma);
  static FilterSpec guided(int radius, double epsilon);

  /// Throws ArgumentError on even/small windows or non-positive parameters.
  void validate() const;
};

std::string to_string(FilterKind kind);
FilterKind parse_filter_kind(const std::string& name);

/// Window-renormalized filtering with mirrored (reflect-101) borders for the
/// gaussian and clipped windows for bilateral and guided. Constants pass
/// through unchanged for every kind.
Image apply_filter(const Image& image, const FilterSpec& spec);

/// image - filtered + 0.5, clamped to [0, 1]. Texture input for the filter
/// ablation.
Image texture_residual(const Image& image, const Image& filtered);

}  // namespace cgswap
