#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace ids {

/// 8-bit raster, row-major, channel-interleaved. Channels is 1 (gray) or 3 (RGB).
class RasterImage {
 public:
  RasterImage() = default;
  RasterImage(int width, int height, int channels, std::uint8_t fill = 0);
  RasterImage(int width, int height, int channels, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  bool empty() const noexcept { return pixel_count() == 0; }

  std::uint8_t& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  std::uint8_t at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

  std::span<const std::uint8_t> data() const noexcept { return data_; }
  std::span<std::uint8_t> data() noexcept { return data_; }

  bool operator==(const RasterImage&) const = default;

 private:
  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) * static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<std::uint8_t> data_;
};

/// Boolean hole mask; `true` marks a missing pixel.
class MaskBitmap {
 public:
  MaskBitmap() = default;
  MaskBitmap(int width, int height);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  bool hole(int x, int y) const {
    return bits_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                 static_cast<std::size_t>(x)] != 0;
  }
  void set(int x, int y, bool value = true) {
    bits_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
          static_cast<std::size_t>(x)] = value ? 1 : 0;
  }

  std::size_t hole_count() const noexcept;
  /// Fraction of pixels that are holes, in [0, 1].
  double masked_ratio() const noexcept;

  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  bool operator==(const MaskBitmap&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

RasterImage read_png(const std::filesystem::path& path);
void write_png(const RasterImage& img, const std::filesystem::path& path);
/// Encodes to an in-memory PNG byte string.
std::vector<std::uint8_t> encode_png(const RasterImage& img);

/// Masks serialize as single-channel PNG: 255 = hole, 0 = keep.
void write_mask_png(const MaskBitmap& mask, const std::filesystem::path& path);
/// Any nonzero gray value reads back as a hole.
MaskBitmap read_mask_png(const std::filesystem::path& path);

}  // namespace ids
