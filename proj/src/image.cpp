#include "ids/image.hpp"

#include <png.h>

#include <algorithm>
#include <cstring>
#include <string>

#include "ids/errors.hpp"

namespace ids {

namespace {

void check_dims(int width, int height) {
  if (width < 1 || height < 1) throw DomainError("image dimensions must be positive");
}

png_uint_32 png_format_for(int channels) {
  return channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
}

}  // namespace

RasterImage::RasterImage(int width, int height, int channels, std::uint8_t fill)
    : width_(width), height_(height), channels_(channels) {
  check_dims(width, height);
  if (channels != 1 && channels != 3) throw DomainError("channels must be 1 or 3");
  data_.assign(pixel_count() * static_cast<std::size_t>(channels), fill);
}

RasterImage::RasterImage(int width, int height, int channels, std::vector<std::uint8_t> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  check_dims(width, height);
  if (channels != 1 && channels != 3) throw DomainError("channels must be 1 or 3");
  if (data_.size() != pixel_count() * static_cast<std::size_t>(channels))
    throw DomainError("raster data length does not match width*height*channels");
}

MaskBitmap::MaskBitmap(int width, int height) : width_(width), height_(height) {
  check_dims(width, height);
  bits_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
}

std::size_t MaskBitmap::hole_count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

double MaskBitmap::masked_ratio() const noexcept {
  if (bits_.empty()) return 0.0;
  return static_cast<double>(hole_count()) / static_cast<double>(bits_.size());
}

RasterImage read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    std::string msg = image.message;
    png_image_free(&image);
    throw IoError("cannot decode PNG '" + path.string() + "': " + msg);
  }
  int channels = (image.format & PNG_FORMAT_FLAG_COLOR) ? 3 : 1;
  image.format = png_format_for(channels);
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw IoError("cannot decode PNG '" + path.string() + "': " + msg);
  }
  return RasterImage(static_cast<int>(image.width), static_cast<int>(image.height), channels,
                     std::move(buffer));
}

namespace {

png_image describe(const RasterImage& img) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = png_format_for(img.channels());
  return image;
}

}  // namespace

void write_png(const RasterImage& img, const std::filesystem::path& path) {
  png_image image = describe(img);
  if (!png_image_write_to_file(&image, path.c_str(), 0, img.data().data(), 0, nullptr)) {
    throw IoError("cannot write PNG '" + path.string() + "': " + image.message);
  }
}

std::vector<std::uint8_t> encode_png(const RasterImage& img) {
  png_image image = describe(img);
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.data().data(), 0, nullptr))
    throw IoError(std::string("cannot encode PNG: ") + image.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.data().data(), 0, nullptr))
    throw IoError(std::string("cannot encode PNG: ") + image.message);
  out.resize(size);
  return out;
}

void write_mask_png(const MaskBitmap& mask, const std::filesystem::path& path) {
  std::vector<std::uint8_t> gray(mask.bits().size());
  std::transform(mask.bits().begin(), mask.bits().end(), gray.begin(),
                 [](std::uint8_t b) { return b ? std::uint8_t{255} : std::uint8_t{0}; });
  write_png(RasterImage(mask.width(), mask.height(), 1, std::move(gray)), path);
}

MaskBitmap read_mask_png(const std::filesystem::path& path) {
  RasterImage img = read_png(path);
  MaskBitmap mask(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      bool hole = false;
      for (int c = 0; c < img.channels(); ++c) hole = hole || img.at(x, y, c) != 0;
      mask.set(x, y, hole);
    }
  return mask;
}

}  // namespace ids
