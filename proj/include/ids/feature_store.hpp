#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ids/image.hpp"
#include "ids/kernels.hpp"

namespace ids {

inline constexpr std::size_t kDefaultFeatureDim = 2048;

/// n x d matrix of 32-bit features, row-major. Immutable once built; all
/// entries are finite.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t n, std::size_t d, std::vector<float> data, std::string source_tag = {});

  std::size_t n() const noexcept { return n_; }
  std::size_t d() const noexcept { return d_; }
  std::span<const float> data() const noexcept { return data_; }
  std::span<const float> row(std::size_t i) const { return {data_.data() + i * d_, d_}; }
  const std::string& source_tag() const noexcept { return source_tag_; }

  kernels::MatrixView view() const noexcept { return {data_, n_, d_}; }

  /// Rows in the given order (duplicates allowed).
  FeatureMatrix select_rows(std::span<const std::size_t> rows) const;

  /// Bitwise comparison of shape, payload, and tag.
  bool operator==(const FeatureMatrix& other) const;

 private:
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::vector<float> data_;
  std::string source_tag_;
};

/// Row-aligned real/fake features: row i of `fake` was generated from row i of `real`.
struct PairedFeatureSet {
  FeatureMatrix real;
  FeatureMatrix fake;

  PairedFeatureSet(FeatureMatrix real_feats, FeatureMatrix fake_feats);
};

/// Writes the "IDSF" format: magic, u32 version = 1, u32 n, u32 d, n*d
/// little-endian f32 (row-major), u32 tag length, UTF-8 tag.
void write_features(const FeatureMatrix& m, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_features(const FeatureMatrix& m);

FeatureMatrix read_features(const std::filesystem::path& path);
FeatureMatrix decode_features(std::span<const std::uint8_t> bytes);

/// Maps an image to a feature row. Implementations must be deterministic.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::string name() const = 0;
  virtual std::size_t output_dim() const = 0;
  /// Features for the given images, one row each, in input order.
  virtual FeatureMatrix extract(std::span<const std::filesystem::path> images) const = 0;
  /// In-memory images. The default writes PNGs to a scratch directory and
  /// calls extract().
  virtual FeatureMatrix extract_images(std::span<const RasterImage> images) const;
};

/// Seeded random-projection embedder: 32x32 box-averaged grayscale in [0,1],
/// times a fixed d x 1024 Gaussian matrix scaled by 1/32, then ReLU.
class ToyEmbedder : public FeatureExtractor {
 public:
  static constexpr int kGrid = 32;
  static constexpr std::size_t kInputDim = static_cast<std::size_t>(kGrid) * kGrid;

  explicit ToyEmbedder(std::uint64_t seed, std::size_t dim = kDefaultFeatureDim);

  std::string name() const override;
  std::size_t output_dim() const override { return dim_; }
  std::uint64_t seed() const noexcept { return seed_; }

  std::vector<float> embed(const RasterImage& img) const;
  FeatureMatrix extract(std::span<const std::filesystem::path> images) const override;
  FeatureMatrix embed_all(std::span<const RasterImage> images, std::string source_tag) const;
  FeatureMatrix extract_images(std::span<const RasterImage> images) const override {
    return embed_all(images, name());
  }

 private:
  std::uint64_t seed_;
  std::size_t dim_;
  std::vector<double> projection_;
};

/// 32x32 grayscale box-area average of `img`, values in [0,1], row-major.
std::vector<double> downsample_gray(const RasterImage& img);

/// One-shot convenience wrapper around ToyEmbedder.
std::vector<float> toy_embed(const RasterImage& img, std::uint64_t seed,
                             std::size_t dim = kDefaultFeatureDim);

/// External feature plugin: runs `command OUT_PATH`, writes newline-delimited
/// image paths to its stdin, and reads the IDSF file it leaves at OUT_PATH.
class SubprocessExtractor : public FeatureExtractor {
 public:
  SubprocessExtractor(std::string command, std::size_t dim, std::filesystem::path scratch_dir = {});

  std::string name() const override { return "plugin:" + command_; }
  std::size_t output_dim() const override { return dim_; }
  FeatureMatrix extract(std::span<const std::filesystem::path> images) const override;

 private:
  std::string command_;
  std::size_t dim_;
  std::filesystem::path scratch_dir_;
};

/// PNG files of `dir` in lexicographic filename order.
std::vector<std::filesystem::path> list_png_files(const std::filesystem::path& dir);

/// Extracts features for every PNG in `image_dir` (lexicographic order) and
/// writes a JSON manifest [{"row": i, "file": name}, ...] to `manifest_out`
/// unless the path is empty.
FeatureMatrix extract_corpus(const FeatureExtractor& extractor,
                             const std::filesystem::path& image_dir,
                             const std::filesystem::path& manifest_out);

}  // namespace ids
