#include "ids/feature_store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <sys/wait.h>
#include <unistd.h>

#include <functional>

#include "ids/errors.hpp"
#include "ids/rng.hpp"

namespace ids {

namespace {

constexpr char kMagic[4] = {'I', 'D', 'S', 'F'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[offset + i]) << (8 * i);
  return v;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

}  // namespace

FeatureMatrix::FeatureMatrix(std::size_t n, std::size_t d, std::vector<float> data,
                             std::string source_tag)
    : n_(n), d_(d), data_(std::move(data)), source_tag_(std::move(source_tag)) {
  if (n == 0 || d == 0) throw DomainError("FeatureMatrix requires n >= 1 and d >= 1");
  if (data_.size() != n * d) throw DomainError("FeatureMatrix data length does not equal n*d");
  for (float v : data_)
    if (!std::isfinite(v)) throw DomainError("FeatureMatrix entries must be finite");
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
  std::vector<float> out;
  out.reserve(rows.size() * d_);
  for (std::size_t r : rows) {
    if (r >= n_) throw DomainError("select_rows: row index out of range");
    auto src = row(r);
    out.insert(out.end(), src.begin(), src.end());
  }
  return FeatureMatrix(rows.size(), d_, std::move(out), source_tag_);
}

bool FeatureMatrix::operator==(const FeatureMatrix& other) const {
  return n_ == other.n_ && d_ == other.d_ && source_tag_ == other.source_tag_ &&
         std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(float)) == 0;
}

PairedFeatureSet::PairedFeatureSet(FeatureMatrix real_feats, FeatureMatrix fake_feats)
    : real(std::move(real_feats)), fake(std::move(fake_feats)) {
  if (real.n() != fake.n() || real.d() != fake.d())
    throw DomainError("paired features must have equal shapes");
}

std::vector<std::uint8_t> encode_features(const FeatureMatrix& m) {
  std::vector<std::uint8_t> out;
  out.reserve(20 + m.data().size() * 4 + m.source_tag().size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(m.n()));
  put_u32(out, static_cast<std::uint32_t>(m.d()));
  for (float v : m.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  put_u32(out, static_cast<std::uint32_t>(m.source_tag().size()));
  out.insert(out.end(), m.source_tag().begin(), m.source_tag().end());
  return out;
}

void write_features(const FeatureMatrix& m, const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes = encode_features(m);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open feature file for writing: " + path.string());
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("write failed: " + path.string());
}

FeatureMatrix decode_features(std::span<const std::uint8_t> bytes) {
  using Kind = ParseError::Kind;
  if (bytes.size() < 4) throw ParseError(Kind::kTruncated, "feature file shorter than magic");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw ParseError(Kind::kBadMagic, "not an IDSF feature file (bad magic)");
  if (bytes.size() < 16) throw ParseError(Kind::kTruncated, "feature header truncated");
  std::uint32_t version = get_u32(bytes, 4);
  if (version != kVersion)
    throw ParseError(Kind::kUnsupportedVersion,
                     "unsupported IDSF version " + std::to_string(version));
  std::uint64_t n = get_u32(bytes, 8);
  std::uint64_t d = get_u32(bytes, 12);
  if (n == 0 || d == 0) throw ParseError(Kind::kCorrupt, "IDSF header has zero n or d");
  std::uint64_t payload = n * d * 4;
  if (bytes.size() < 16 + payload + 4)
    throw ParseError(Kind::kTruncated, "feature payload truncated: expected " +
                                           std::to_string(n * d) + " floats");
  std::vector<float> data(n * d);
  for (std::size_t i = 0; i < data.size(); ++i) {
    float v = std::bit_cast<float>(get_u32(bytes, 16 + 4 * i));
    if (!std::isfinite(v))
      throw ParseError(Kind::kNonFinite, "non-finite feature at row " + std::to_string(i / d) +
                                             ", column " + std::to_string(i % d));
    data[i] = v;
  }
  std::size_t tag_at = 16 + payload;
  std::uint32_t tag_len = get_u32(bytes, tag_at);
  if (bytes.size() < tag_at + 4 + tag_len) throw ParseError(Kind::kTruncated, "source tag truncated");
  if (bytes.size() != tag_at + 4 + tag_len)
    throw ParseError(Kind::kCorrupt, "trailing bytes after source tag");
  std::string tag(reinterpret_cast<const char*>(bytes.data() + tag_at + 4), tag_len);
  return FeatureMatrix(n, d, std::move(data), std::move(tag));
}

FeatureMatrix read_features(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open feature file: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_features(bytes);
  } catch (const ParseError& e) {
    throw ParseError(e.kind(), path.string() + ": " + e.what());
  }
}

std::vector<double> downsample_gray(const RasterImage& img) {
  if (img.empty()) throw DomainError("toy_embed: zero-area image");
  constexpr int g = ToyEmbedder::kGrid;
  const int w = img.width();
  const int h = img.height();
  std::vector<double> gray(img.pixel_count());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int c = 0; c < img.channels(); ++c) s += img.at(x, y, c);
      gray[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] =
          s / (255.0 * img.channels());
    }

  // Cell k covers [k*len/g, (k+1)*len/g) in source coordinates; each source
  // pixel contributes in proportion to its overlap.
  auto overlaps = [](int len, int cell) {
    std::vector<std::pair<int, double>> out;
    double lo = static_cast<double>(cell) * len / g;
    double hi = static_cast<double>(cell + 1) * len / g;
    for (int p = static_cast<int>(std::floor(lo)); p < len && p < hi; ++p) {
      double wgt = std::min<double>(p + 1, hi) - std::max<double>(p, lo);
      if (wgt > 0) out.emplace_back(p, wgt);
    }
    return out;
  };

  std::vector<double> out(ToyEmbedder::kInputDim, 0.0);
  for (int gy = 0; gy < g; ++gy) {
    auto ys = overlaps(h, gy);
    for (int gx = 0; gx < g; ++gx) {
      auto xs = overlaps(w, gx);
      double acc = 0.0;
      double area = 0.0;
      for (auto [y, wy] : ys)
        for (auto [x, wx] : xs) {
          acc += wy * wx * gray[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                                static_cast<std::size_t>(x)];
          area += wy * wx;
        }
      out[static_cast<std::size_t>(gy * g + gx)] = acc / area;
    }
  }
  return out;
}

ToyEmbedder::ToyEmbedder(std::uint64_t seed, std::size_t dim) : seed_(seed), dim_(dim) {
  if (dim == 0) throw DomainError("ToyEmbedder: dimension must be positive");
  Pcg64 rng(split_seed(seed, "toy-embed-projection"));
  const double scale = 1.0 / std::sqrt(static_cast<double>(kInputDim));
  projection_.resize(dim * kInputDim);
  for (double& p : projection_) p = rng.normal() * scale;
}

std::string ToyEmbedder::name() const {
  return "toy-embed(seed=" + std::to_string(seed_) + ",d=" + std::to_string(dim_) + ")";
}

std::vector<float> ToyEmbedder::embed(const RasterImage& img) const {
  std::vector<double> v = downsample_gray(img);
  std::vector<float> out(dim_);
  kernels::project_relu(projection_, dim_, v, out);
  return out;
}

FeatureMatrix ToyEmbedder::embed_all(std::span<const RasterImage> images,
                                     std::string source_tag) const {
  if (images.empty()) throw DomainError("embed_all: no images");
  std::vector<float> data(images.size() * dim_);
  for (std::size_t i = 0; i < images.size(); ++i) {
    std::vector<double> v = downsample_gray(images[i]);
    kernels::project_relu(projection_, dim_, v, std::span<float>(data.data() + i * dim_, dim_));
  }
  return FeatureMatrix(images.size(), dim_, std::move(data), std::move(source_tag));
}

FeatureMatrix ToyEmbedder::extract(std::span<const std::filesystem::path> images) const {
  if (images.empty()) throw DomainError("extract: no images");
  std::vector<float> data(images.size() * dim_);
  std::exception_ptr failure;
  std::size_t failed_at = images.size();
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(images.size()); ++i) {
    try {
      auto row = embed(read_png(images[static_cast<std::size_t>(i)]));
      std::copy(row.begin(), row.end(), data.begin() + i * static_cast<std::int64_t>(dim_));
    } catch (...) {
#pragma omp critical(ids_extract_failure)
      if (static_cast<std::size_t>(i) < failed_at) {
        failed_at = static_cast<std::size_t>(i);
        failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
  return FeatureMatrix(images.size(), dim_, std::move(data), name());
}

FeatureMatrix FeatureExtractor::extract_images(std::span<const RasterImage> images) const {
  if (images.empty()) throw DomainError("extract_images: no images");
  Pcg64 rng(static_cast<std::uint64_t>(::getpid()) ^
            static_cast<std::uint64_t>(reinterpret_cast<std::uintptr_t>(images.data())));
  std::filesystem::path dir =
      std::filesystem::temp_directory_path() / ("ids-corpus-" + std::to_string(rng()));
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> paths;
  try {
    for (std::size_t i = 0; i < images.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "%08zu.png", i);
      paths.push_back(dir / name);
      write_png(images[i], paths.back());
    }
    FeatureMatrix m = extract(paths);
    std::filesystem::remove_all(dir);
    return m;
  } catch (...) {
    std::filesystem::remove_all(dir);
    throw;
  }
}

std::vector<float> toy_embed(const RasterImage& img, std::uint64_t seed, std::size_t dim) {
  return ToyEmbedder(seed, dim).embed(img);
}

SubprocessExtractor::SubprocessExtractor(std::string command, std::size_t dim,
                                         std::filesystem::path scratch_dir)
    : command_(std::move(command)), dim_(dim), scratch_dir_(std::move(scratch_dir)) {
  if (scratch_dir_.empty()) scratch_dir_ = std::filesystem::temp_directory_path();
}

FeatureMatrix SubprocessExtractor::extract(std::span<const std::filesystem::path> images) const {
  if (images.empty()) throw DomainError("extract: no images");
  Pcg64 rng(static_cast<std::uint64_t>(std::hash<std::string>{}(command_)) ^
            static_cast<std::uint64_t>(reinterpret_cast<std::uintptr_t>(this)) ^
            static_cast<std::uint64_t>(::getpid()));
  std::filesystem::path out =
      scratch_dir_ / ("ids-plugin-" + std::to_string(rng()) + ".idsf");
  std::string cmd = command_ + " " + shell_quote(out.string());
  FILE* pipe = ::popen(cmd.c_str(), "w");
  if (!pipe) throw IoError("cannot launch feature plugin: " + command_);
  for (const auto& p : images) {
    std::string line = std::filesystem::absolute(p).string() + "\n";
    std::fwrite(line.data(), 1, line.size(), pipe);
  }
  int status = ::pclose(pipe);
  if (status != 0 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    std::filesystem::remove(out);
    throw IoError("feature plugin failed (status " + std::to_string(status) + "): " + command_);
  }
  FeatureMatrix m = read_features(out);
  std::filesystem::remove(out);
  if (m.n() != images.size())
    throw IoError("feature plugin returned " + std::to_string(m.n()) + " rows for " +
                  std::to_string(images.size()) + " images");
  if (m.d() != dim_)
    throw IoError("feature plugin returned d=" + std::to_string(m.d()) + ", expected " +
                  std::to_string(dim_));
  return m;
}

std::vector<std::filesystem::path> list_png_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) {
    return a.filename().string() < b.filename().string();
  });
  return files;
}

FeatureMatrix extract_corpus(const FeatureExtractor& extractor,
                             const std::filesystem::path& image_dir,
                             const std::filesystem::path& manifest_out) {
  std::vector<std::filesystem::path> files = list_png_files(image_dir);
  if (files.empty()) throw IoError("no PNG images in " + image_dir.string());
  FeatureMatrix m = extractor.extract(files);
  if (!manifest_out.empty()) {
    nlohmann::json manifest = nlohmann::json::array();
    for (std::size_t i = 0; i < files.size(); ++i)
      manifest.push_back({{"row", i}, {"file", files[i].filename().string()}});
    std::ofstream os(manifest_out);
    if (!os) throw IoError("cannot write manifest: " + manifest_out.string());
    os << manifest.dump(2) << '\n';
  }
  return m;
}

}  // namespace ids
