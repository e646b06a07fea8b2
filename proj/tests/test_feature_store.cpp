#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "ids/errors.hpp"
#include "ids/feature_store.hpp"
#include "ids/image.hpp"
#include "test_util.hpp"

using ids::FeatureMatrix;
using ids::ParseError;
using ids::testing::gaussian_features;
using ids::testing::TempDir;

namespace {

ParseError::Kind parse_kind(const std::vector<std::uint8_t>& bytes) {
  try {
    ids::decode_features(bytes);
  } catch (const ParseError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "decode accepted malformed bytes";
  return ParseError::Kind::kCorrupt;
}

void put_u32(std::vector<std::uint8_t>& b, std::size_t at, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

ids::RasterImage noise_image(int w, int h, int ch, std::uint64_t seed) {
  ids::Pcg64 rng(seed);
  ids::RasterImage img(w, h, ch);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  return img;
}

}  // namespace

TEST(FeatureMatrix, RejectsNonFiniteAndEmpty) {
  EXPECT_THROW(FeatureMatrix(1, 1, {std::numeric_limits<float>::quiet_NaN()}), ids::DomainError);
  EXPECT_THROW(FeatureMatrix(1, 1, {std::numeric_limits<float>::infinity()}), ids::DomainError);
  EXPECT_THROW(FeatureMatrix(0, 1, {}), ids::DomainError);
  EXPECT_THROW(FeatureMatrix(2, 2, {1, 2, 3}), ids::DomainError);
}

TEST(FeatureMatrix, PairedSetRequiresMatchingShapes) {
  EXPECT_THROW(ids::PairedFeatureSet(gaussian_features(3, 2, 1), gaussian_features(4, 2, 1)),
               ids::DomainError);
  EXPECT_NO_THROW(ids::PairedFeatureSet(gaussian_features(3, 2, 1), gaussian_features(3, 2, 2)));
}

TEST(FeatureFile, OneByOneZeroMatrixLayout) {
  FeatureMatrix m(1, 1, {0.0f});
  auto bytes = ids::encode_features(m);
  // magic, version, n, d, one float, tag length, empty tag.
  ASSERT_EQ(bytes.size(), 24u);
  EXPECT_EQ(std::memcmp(bytes.data(), "IDSF", 4), 0);
  const std::uint8_t header[] = {1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0};
  EXPECT_EQ(std::memcmp(bytes.data() + 4, header, sizeof header), 0);
  for (std::size_t i = 16; i < 24; ++i) EXPECT_EQ(bytes[i], 0) << i;
}

TEST(FeatureFile, TagIsLengthPrefixedUtf8) {
  FeatureMatrix m(1, 2, {1.5f, -2.0f}, "toy:7");
  auto bytes = ids::encode_features(m);
  ASSERT_EQ(bytes.size(), 28u + 5u);
  EXPECT_EQ(bytes[24], 5);
  EXPECT_EQ(std::string(bytes.begin() + 28, bytes.end()), "toy:7");
  // 1.5f little-endian.
  EXPECT_EQ(bytes[16], 0x00);
  EXPECT_EQ(bytes[19], 0x3f);
  EXPECT_EQ(bytes[18], 0xc0);
}

TEST(FeatureFile, RoundTripIsBitExact) {
  TempDir dir("fs-roundtrip");
  auto m = gaussian_features(100, 2048, 17);
  std::vector<float> tricky = {0.0f, -0.0f, std::numeric_limits<float>::denorm_min(),
                               std::numeric_limits<float>::max(), -1e-30f, 3.14159274f};
  FeatureMatrix t(2, 3, tricky, "tag \xc3\xa9");
  for (const auto* src : {&m, &t}) {
    ids::write_features(*src, dir / "f.idsf");
    FeatureMatrix back = ids::read_features(dir / "f.idsf");
    EXPECT_TRUE(back == *src);
    EXPECT_EQ(std::memcmp(back.data().data(), src->data().data(), src->data().size_bytes()), 0);
  }
}

TEST(FeatureFile, MalformedInputsGiveDistinctErrors) {
  auto good = ids::encode_features(gaussian_features(4, 3, 2));

  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_EQ(parse_kind(bad_magic), ParseError::Kind::kBadMagic);

  auto v2 = good;
  put_u32(v2, 4, 2);
  EXPECT_EQ(parse_kind(v2), ParseError::Kind::kUnsupportedVersion);

  std::vector<std::uint8_t> half(good.begin(), good.begin() + 16 + 4 * 6);
  EXPECT_EQ(parse_kind(half), ParseError::Kind::kTruncated);
  EXPECT_EQ(parse_kind({'I', 'D'}), ParseError::Kind::kTruncated);

  auto nan = good;
  const float q = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(nan.data() + 16, &q, 4);
  EXPECT_EQ(parse_kind(nan), ParseError::Kind::kNonFinite);

  auto trailing = good;
  trailing.push_back(0);
  EXPECT_EQ(parse_kind(trailing), ParseError::Kind::kCorrupt);
}

TEST(FeatureFile, MissingFileIsIoError) {
  EXPECT_THROW(ids::read_features("/nonexistent/x.idsf"), ids::IoError);
}

TEST(ToyEmbedder, BlackImageEmbedsToZero) {
  ids::ToyEmbedder e(3, 256);
  auto row = e.embed(ids::RasterImage(40, 20, 3, 0));
  ASSERT_EQ(row.size(), 256u);
  for (float v : row) EXPECT_EQ(v, 0.0f);
}

TEST(ToyEmbedder, DeterministicAndNonNegative) {
  auto img = noise_image(50, 37, 3, 9);
  auto a = ids::toy_embed(img, 5, 512);
  auto b = ids::toy_embed(img, 5, 512);
  EXPECT_EQ(a, b);
  for (float v : a) EXPECT_GE(v, 0.0f);
  EXPECT_NE(a, ids::toy_embed(img, 6, 512));
}

TEST(ToyEmbedder, OnePixelChangeMovesTheRow) {
  ids::RasterImage a(32, 32, 1, 100);
  ids::RasterImage b = a;
  b.at(10, 20) = 200;
  EXPECT_NE(ids::toy_embed(a, 1), ids::toy_embed(b, 1));
}

TEST(ToyEmbedder, DownsampleIsAreaAverage) {
  // 64x64 image: each output cell averages a 2x2 block.
  ids::RasterImage img(64, 64, 1, 0);
  img.at(0, 0) = 255;
  img.at(1, 1) = 255;
  auto g = ids::downsample_gray(img);
  ASSERT_EQ(g.size(), 1024u);
  EXPECT_NEAR(g[0], 0.5, 1e-12);
  EXPECT_NEAR(g[1], 0.0, 1e-12);

  // 16x16 upsamples: every output cell lies inside one input pixel.
  ids::RasterImage small(16, 16, 3, 0);
  small.at(0, 0, 0) = 255;
  small.at(0, 0, 1) = 255;
  small.at(0, 0, 2) = 255;
  g = ids::downsample_gray(small);
  EXPECT_NEAR(g[0], 1.0, 1e-12);
  EXPECT_NEAR(g[1], 1.0, 1e-12);
  EXPECT_NEAR(g[32], 1.0, 1e-12);
  EXPECT_NEAR(g[2], 0.0, 1e-12);

  EXPECT_THROW(ids::downsample_gray(ids::RasterImage()), ids::DomainError);
}

TEST(ExtractCorpus, ThreeBlackImagesGiveZeroRows) {
  TempDir dir("fs-black");
  for (const char* n : {"a.png", "b.png", "c.png"}) ids::write_png(ids::RasterImage(8, 8, 1, 0), dir / n);
  ids::ToyEmbedder e(1, 64);
  auto m = ids::extract_corpus(e, dir.path(), dir / "manifest.json");
  ASSERT_EQ(m.n(), 3u);
  for (float v : m.data()) EXPECT_EQ(v, 0.0f);
}

TEST(ExtractCorpus, OrderIsByFilenameAndManifestMatches) {
  TempDir a("fs-order-a"), b("fs-order-b");
  std::vector<std::string> names = {"img10.png", "img02.png", "img1.png", "zz.png", "Abc.png"};
  for (std::size_t i = 0; i < names.size(); ++i)
    ids::write_png(noise_image(12, 9, 3, i), a / names[i]);
  // Same files written in the reverse order.
  for (std::size_t i = names.size(); i-- > 0;)
    ids::write_png(noise_image(12, 9, 3, i), b / names[i]);
  std::ofstream(a / "notes.txt") << "ignored";

  ids::ToyEmbedder e(4, 128);
  auto ma = ids::extract_corpus(e, a.path(), a / "m.json");
  auto mb = ids::extract_corpus(e, b.path(), {});
  EXPECT_TRUE(ma == mb);

  nlohmann::json manifest;
  std::ifstream(a / "m.json") >> manifest;
  std::vector<std::string> sorted = {"Abc.png", "img02.png", "img1.png", "img10.png", "zz.png"};
  ASSERT_EQ(manifest.size(), sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    EXPECT_EQ(manifest[i]["row"], i);
    EXPECT_EQ(manifest[i]["file"], sorted[i]);
    auto row = e.embed(ids::read_png(a / sorted[i]));
    EXPECT_TRUE(std::equal(row.begin(), row.end(), ma.row(i).begin()));
  }
}

TEST(ExtractCorpus, RerunIsBitIdentical) {
  TempDir dir("fs-rerun");
  for (int i = 0; i < 10; ++i)
    ids::write_png(noise_image(33, 21, 3, 100 + i), dir / ("r" + std::to_string(i) + ".png"));
  ids::ToyEmbedder e(8);
  EXPECT_TRUE(ids::extract_corpus(e, dir.path(), {}) == ids::extract_corpus(e, dir.path(), {}));
}

TEST(ExtractCorpus, EmptyOrUndecodableDirectoryFails) {
  TempDir dir("fs-empty");
  ids::ToyEmbedder e(1, 16);
  EXPECT_THROW(ids::extract_corpus(e, dir.path(), {}), ids::Error);
  std::ofstream(dir / "broken.png") << "not a png";
  try {
    ids::extract_corpus(e, dir.path(), {});
    FAIL() << "expected failure";
  } catch (const ids::Error& err) {
    EXPECT_NE(std::string(err.what()).find("broken.png"), std::string::npos);
  }
}

TEST(SubprocessExtractor, PluginMatchesInProcessEmbedder) {
  TempDir dir("fs-plugin");
  for (int i = 0; i < 4; ++i)
    ids::write_png(noise_image(20, 20, 1, 40 + i), dir / ("p" + std::to_string(i) + ".png"));
  ids::SubprocessExtractor plugin(std::string(IDS_TOY_PLUGIN_EXE) + " --seed 12 --dim 96", 96,
                                  dir.path());
  ids::ToyEmbedder toy(12, 96);
  auto via_plugin = ids::extract_corpus(plugin, dir.path(), {});
  auto direct = ids::extract_corpus(toy, dir.path(), {});
  ASSERT_EQ(via_plugin.n(), 4u);
  EXPECT_TRUE(std::equal(via_plugin.data().begin(), via_plugin.data().end(), direct.data().begin()));
}

TEST(SubprocessExtractor, FailingOrMisbehavingPluginIsReported) {
  TempDir dir("fs-plugin-bad");
  ids::write_png(ids::RasterImage(4, 4, 1, 9), dir / "x.png");
  ids::SubprocessExtractor failing("false", 16, dir.path());
  EXPECT_THROW(ids::extract_corpus(failing, dir.path(), {}), ids::Error);
  ids::SubprocessExtractor wrong_dim(std::string(IDS_TOY_PLUGIN_EXE) + " --dim 8", 16, dir.path());
  EXPECT_THROW(ids::extract_corpus(wrong_dim, dir.path(), {}), ids::Error);
}
