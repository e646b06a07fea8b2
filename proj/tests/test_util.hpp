#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <algorithm>
#include <cmath>

#include "ids/feature_store.hpp"
#include "ids/image.hpp"
#include "ids/rng.hpp"

namespace ids::testing {

/// n x d matrix of N(shift, 1) entries.
inline FeatureMatrix gaussian_features(std::size_t n, std::size_t d, std::uint64_t seed,
                                       double shift = 0.0) {
  Pcg64 rng(seed);
  std::vector<float> data(n * d);
  for (auto& v : data) v = static_cast<float>(shift + rng.normal());
  return FeatureMatrix(n, d, std::move(data));
}

/// base + sigma * N(0, I), row by row.
inline FeatureMatrix add_noise(const FeatureMatrix& base, double sigma, std::uint64_t seed) {
  Pcg64 rng(seed);
  std::vector<float> data(base.data().begin(), base.data().end());
  for (auto& v : data) v = static_cast<float>(v + sigma * rng.normal());
  return FeatureMatrix(base.n(), base.d(), std::move(data));
}

inline FeatureMatrix from_rows(const std::vector<std::vector<double>>& rows) {
  std::vector<float> data;
  for (const auto& r : rows)
    for (double v : r) data.push_back(static_cast<float>(v));
  return FeatureMatrix(rows.size(), rows.front().size(), std::move(data));
}

/// Smooth random RGB image: a few random plane waves over a random base color.
inline RasterImage synthetic_image(int w, int h, std::uint64_t seed) {
  Pcg64 rng(seed);
  RasterImage img(w, h, 3);
  double base[3], amp[3][3], fx[3], fy[3], ph[3];
  for (auto& b : base) b = rng.uniform(60, 190);
  for (int k = 0; k < 3; ++k) {
    fx[k] = rng.uniform(-0.3, 0.3);
    fy[k] = rng.uniform(-0.3, 0.3);
    ph[k] = rng.uniform(0, 6.283185307179586);
    for (auto& a : amp[k]) a = rng.uniform(-40, 40);
  }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double v = base[c];
        for (int k = 0; k < 3; ++k) v += amp[k][c] * std::sin(fx[k] * x + fy[k] * y + ph[k]);
        img.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
  return img;
}

/// Adds N(0, sigma^2) noise, sigma in [0,1] intensity units, clamped to 8 bits.
inline RasterImage pixel_noise(const RasterImage& img, double sigma, std::uint64_t seed) {
  Pcg64 rng(seed);
  RasterImage out = img;
  for (auto& v : out.data())
    v = static_cast<std::uint8_t>(std::clamp(std::lround(v + 255.0 * sigma * rng.normal()), 0L, 255L));
  return out;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    Pcg64 rng(std::hash<std::string>{}(tag) ^ reinterpret_cast<std::uintptr_t>(this));
    path_ = std::filesystem::temp_directory_path() /
            ("ids-test-" + tag + "-" + std::to_string(rng()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace ids::testing
