#include "ids/manipulations.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "ids/errors.hpp"
#include "ids/kernels.hpp"
#include "ids/rng.hpp"

namespace ids {

namespace {

void check_range(const IntRange& r, const char* name) {
  if (r.lo < 0 || r.lo > r.hi)
    throw DomainError(std::string("mask sampler range '") + name + "' must satisfy 0 <= lo <= hi");
}

int draw(Pcg64& rng, const IntRange& r) { return static_cast<int>(rng.uniform_int(r.lo, r.hi)); }

struct Point {
  double x;
  double y;
};

// Marks every pixel whose center is within `radius` of segment [a, b].
void rasterize_segment(MaskBitmap& mask, Point a, Point b, double radius) {
  const int w = mask.width();
  const int h = mask.height();
  const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - radius - 1.0)));
  const int x1 = std::min(w - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + radius + 1.0)));
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - radius - 1.0)));
  const int y1 = std::min(h - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + radius + 1.0)));
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  const double r2 = radius * radius;
  for (int py = y0; py <= y1; ++py) {
    const double cy = py + 0.5;
    for (int px = x0; px <= x1; ++px) {
      const double cx = px + 0.5;
      double t = 0.0;
      if (len2 > 0.0) t = std::clamp(((cx - a.x) * dx + (cy - a.y) * dy) / len2, 0.0, 1.0);
      const double ex = cx - (a.x + t * dx);
      const double ey = cy - (a.y + t * dy);
      if (ex * ex + ey * ey <= r2) mask.set(px, py);
    }
  }
}

void fill_rect(MaskBitmap& mask, int x, int y, int rw, int rh) {
  for (int py = y; py < y + rh; ++py)
    for (int px = x; px < x + rw; ++px) mask.set(px, py);
}

void draw_rects(MaskBitmap& mask, Pcg64& rng, int count, int max_w, int max_h) {
  const int w = mask.width();
  const int h = mask.height();
  for (int i = 0; i < count; ++i) {
    const int rw = static_cast<int>(rng.uniform_int(1, max_w));
    const int rh = static_cast<int>(rng.uniform_int(1, max_h));
    const int x = static_cast<int>(rng.uniform_int(0, w - rw));
    const int y = static_cast<int>(rng.uniform_int(0, h - rh));
    fill_rect(mask, x, y, rw, rh);
  }
}

}  // namespace

void MaskSamplerConfig::validate() const {
  check_range(brush_width, "brush_width");
  check_range(vertices, "vertices");
  check_range(strokes, "strokes");
  check_range(full_rects, "full_rects");
  check_range(half_rects, "half_rects");
}

std::string RatioBucket::label() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g-%g", lo, hi);
  return buf;
}

const std::array<RatioBucket, 5>& standard_buckets() {
  static const std::array<RatioBucket, 5> buckets = {
      RatioBucket{0.0, 0.2}, RatioBucket{0.2, 0.4}, RatioBucket{0.4, 0.6},
      RatioBucket{0.6, 0.8}, RatioBucket{0.8, 1.0}};
  return buckets;
}

int bucket_index(double ratio) {
  const auto& b = standard_buckets();
  for (std::size_t i = 0; i < b.size(); ++i)
    if (b[i].contains(ratio)) return static_cast<int>(i);
  return -1;
}

RatioBucket parse_bucket_label(const std::string& label) {
  RatioBucket b;
  char dash = 0;
  std::istringstream is(label);
  if (!(is >> b.lo >> dash >> b.hi) || dash != '-' || !(b.lo >= 0.0 && b.lo < b.hi && b.hi <= 1.0))
    throw DomainError("bad masked-ratio bucket label '" + label + "'");
  return b;
}

RasterImage mask_square(const RasterImage& img, int w, std::uint64_t seed) {
  if (img.empty()) throw DomainError("mask_square: empty image");
  if (w < 1 || w > std::min(img.width(), img.height()))
    throw DomainError("mask_square: width " + std::to_string(w) + " out of range");
  Pcg64 rng(seed);
  const int x = static_cast<int>(rng.uniform_int(0, img.width() - w));
  const int y = static_cast<int>(rng.uniform_int(0, img.height() - w));
  RasterImage out = img;
  for (int py = y; py < y + w; ++py)
    for (int px = x; px < x + w; ++px)
      for (int c = 0; c < img.channels(); ++c) out.at(px, py, c) = 0;
  return out;
}

RasterImage noisy_pixels(const RasterImage& img, std::size_t n, std::uint64_t seed) {
  if (img.empty()) throw DomainError("noisy_pixels: empty image");
  const std::size_t total = img.pixel_count();
  if (n >= total)
    throw DomainError("noisy_pixels: n = " + std::to_string(n) + " leaves no source pixel");
  if (n == 0) return img;
  Pcg64 rng(seed);
  std::vector<std::uint8_t> chosen(total, 0);
  for (std::size_t p : sample_without_replacement(total, n, rng)) chosen[p] = 1;
  std::vector<std::size_t> sources = kernels::nearest_unchosen(chosen, img.width(), img.height());

  RasterImage out = img;
  const int ch = img.channels();
  auto src = img.data();
  auto dst = out.data();
  std::size_t k = 0;
  for (std::size_t p = 0; p < total; ++p) {
    if (!chosen[p]) continue;
    const std::size_t s = sources[k++];
    for (int c = 0; c < ch; ++c) dst[p * ch + c] = src[s * ch + c];
  }
  return out;
}

MaskBitmap sample_free_form_mask(int width, int height, const MaskSamplerConfig& cfg,
                                 std::uint64_t seed) {
  if (width < 1 || height < 1) throw DomainError("mask dimensions must be positive");
  cfg.validate();
  MaskBitmap mask(width, height);
  Pcg64 rng(seed);
  constexpr double kPi = std::numbers::pi;
  const double max_len = std::min(width, height) / 4.0;

  const int strokes = draw(rng, cfg.strokes);
  for (int s = 0; s < strokes; ++s) {
    const int brush = draw(rng, cfg.brush_width);
    const int vertices = draw(rng, cfg.vertices);
    const double radius = brush / 2.0;
    Point p{rng.uniform(0.0, width), rng.uniform(0.0, height)};
    double angle = rng.uniform(0.0, 2.0 * kPi);
    if (vertices == 1) rasterize_segment(mask, p, p, radius);
    for (int v = 1; v < vertices; ++v) {
      if (v > 1) angle += rng.uniform(-kPi / 2.0, kPi / 2.0);
      const double len = rng.uniform(brush, std::max<double>(brush, max_len));
      Point q{std::clamp(p.x + len * std::cos(angle), 0.0, static_cast<double>(width)),
              std::clamp(p.y + len * std::sin(angle), 0.0, static_cast<double>(height))};
      rasterize_segment(mask, p, q, radius);
      p = q;
    }
  }

  const int full = draw(rng, cfg.full_rects);
  draw_rects(mask, rng, full, width, height);
  const int half = draw(rng, cfg.half_rects);
  draw_rects(mask, rng, half, std::max(1, width / 2), std::max(1, height / 2));
  return mask;
}

MaskBitmap sample_mask_in_ratio(int width, int height, const MaskSamplerConfig& cfg, double lo,
                                double hi, std::uint64_t seed, long max_attempts) {
  if (!(lo >= 0.0 && lo < hi && hi <= 1.0)) throw DomainError("ratio range must satisfy 0 <= lo < hi <= 1");
  if (max_attempts < 1) throw DomainError("max_attempts must be >= 1");
  double closest = -1.0;
  double closest_gap = 2.0;
  for (long k = 0; k < max_attempts; ++k) {
    MaskBitmap m = sample_free_form_mask(width, height, cfg,
                                         split_seed(seed, "mask-attempt", {static_cast<std::uint64_t>(k)}));
    const double r = m.masked_ratio();
    if (r > lo && r < hi) return m;
    const double gap = r <= lo ? lo - r : r - hi;
    if (gap < closest_gap) {
      closest_gap = gap;
      closest = r;
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "no mask with ratio in (%g, %g) after %ld attempts; closest ratio %.6f", lo, hi,
                max_attempts, closest);
  throw SaturationError(buf, max_attempts, closest);
}

RasterImage apply_mask(const RasterImage& img, const MaskBitmap& mask, std::uint8_t fill) {
  if (img.width() != mask.width() || img.height() != mask.height())
    throw DomainError("apply_mask: image and mask dimensions differ");
  RasterImage out = img;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      if (mask.hole(x, y))
        for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = fill;
  return out;
}

}  // namespace ids
