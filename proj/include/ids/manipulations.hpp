#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ids/image.hpp"

namespace ids {

/// Inclusive integer range [lo, hi].
struct IntRange {
  int lo = 0;
  int hi = 0;
};

/// Free-form mask sampling constants (brush strokes plus rectangles).
struct MaskSamplerConfig {
  IntRange brush_width{12, 48};
  IntRange vertices{4, 18};
  IntRange strokes{0, 20};
  IntRange full_rects{0, 5};
  IntRange half_rects{0, 10};

  /// Throws DomainError unless every range has 0 <= lo <= hi.
  void validate() const;
};

/// Open interval (lo, hi) of masked ratios used to bucket results.
struct RatioBucket {
  double lo = 0.0;
  double hi = 1.0;

  bool contains(double ratio) const noexcept { return ratio > lo && ratio < hi; }
  std::string label() const;
};

/// (0,.2), (.2,.4), (.4,.6), (.6,.8), (.8,1).
const std::array<RatioBucket, 5>& standard_buckets();
/// Index into standard_buckets() or -1 (exact boundaries such as 0.2 fall in none).
int bucket_index(double ratio);
/// Parses a label produced by RatioBucket::label(), e.g. "0.2-0.4".
RatioBucket parse_bucket_label(const std::string& label);

/// Zeros a w x w square whose top-left corner is uniform over valid placements.
RasterImage mask_square(const RasterImage& img, int w, std::uint64_t seed);

/// Replaces n distinct random pixels by their nearest unchosen pixel (all
/// channels). Ties: smaller row, then smaller column.
RasterImage noisy_pixels(const RasterImage& img, std::size_t n, std::uint64_t seed);

/// Union of random brush strokes and rectangles. Strokes: width b, V vertices
/// joined by V-1 segments, each turn drawn from U[-pi/2, pi/2], each segment
/// length from U[b, min(w,h)/4]; vertices are clipped to the image and a pixel
/// is a hole iff its center lies within b/2 of some segment.
MaskBitmap sample_free_form_mask(int width, int height, const MaskSamplerConfig& cfg,
                                 std::uint64_t seed);

/// Rejection-samples sample_free_form_mask until the ratio is in (lo, hi).
/// Attempt k uses seed split(seed, "mask-attempt", k).
MaskBitmap sample_mask_in_ratio(int width, int height, const MaskSamplerConfig& cfg, double lo,
                                double hi, std::uint64_t seed, long max_attempts = 10000);

/// Sets every hole pixel to `fill` on all channels.
RasterImage apply_mask(const RasterImage& img, const MaskBitmap& mask, std::uint8_t fill);

}  // namespace ids
