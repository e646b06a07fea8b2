#include "ids/baseline_metrics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "ids/errors.hpp"
#include "ids/kernels.hpp"
#include "ids/rng.hpp"

namespace ids {

namespace {

constexpr char kStatsMagic[4] = {'I', 'D', 'S', 'G'};
constexpr double kEigenClamp = 1e-8;
constexpr double kFidClamp = 1e-6;

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  auto bits = std::bit_cast<std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>>(v);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

template <typename T>
T get_le(const std::vector<std::uint8_t>& in, std::size_t& at) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  if (at + sizeof(T) > in.size()) throw ParseError(ParseError::Kind::kTruncated, "stats file truncated");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(in[at + i]) << (8 * i);
  at += sizeof(T);
  return std::bit_cast<T>(bits);
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

GaussianStats gaussian_stats(const FeatureMatrix& feats) {
  if (feats.n() < 2) throw DomainError("gaussian_stats requires n >= 2");
  std::vector<double> mean;
  std::vector<double> scatter;
  kernels::mean_and_scatter(feats.view(), mean, scatter);
  const auto d = static_cast<Eigen::Index>(feats.d());
  GaussianStats s;
  s.n = feats.n();
  s.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), d);
  Eigen::MatrixXd c =
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          scatter.data(), d, d) /
      static_cast<double>(feats.n() - 1);
  s.cov = 0.5 * (c + c.transpose());
  return s;
}

void write_stats(const GaussianStats& stats, const std::filesystem::path& path) {
  std::vector<std::uint8_t> out(std::begin(kStatsMagic), std::end(kStatsMagic));
  put_le<std::uint32_t>(out, 1);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(stats.dim()));
  put_le<std::uint64_t>(out, stats.n);
  for (Eigen::Index i = 0; i < stats.mean.size(); ++i) put_le<double>(out, stats.mean(i));
  for (Eigen::Index i = 0; i < stats.cov.rows(); ++i)
    for (Eigen::Index j = 0; j < stats.cov.cols(); ++j) put_le<double>(out, stats.cov(i, j));
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write stats file: " + path.string());
  os.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!os) throw IoError("write failed: " + path.string());
}

GaussianStats read_stats(const std::filesystem::path& path) {
  std::vector<std::uint8_t> in = slurp(path);
  if (in.size() < 4 || std::memcmp(in.data(), kStatsMagic, 4) != 0)
    throw ParseError(ParseError::Kind::kBadMagic, path.string() + ": not an IDSG stats file");
  std::size_t at = 4;
  auto version = get_le<std::uint32_t>(in, at);
  if (version != 1)
    throw ParseError(ParseError::Kind::kUnsupportedVersion,
                     path.string() + ": unsupported stats version " + std::to_string(version));
  auto d = static_cast<Eigen::Index>(get_le<std::uint32_t>(in, at));
  GaussianStats s;
  s.n = get_le<std::uint64_t>(in, at);
  s.mean.resize(d);
  s.cov.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) s.mean(i) = get_le<double>(in, at);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) s.cov(i, j) = get_le<double>(in, at);
  if (at != in.size()) throw ParseError(ParseError::Kind::kCorrupt, path.string() + ": trailing bytes");
  return s;
}

GaussianStats load_stats_or_features(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  char magic[4] = {};
  is.read(magic, 4);
  if (is && std::memcmp(magic, kStatsMagic, 4) == 0) return read_stats(path);
  return gaussian_stats(read_features(path));
}

Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  Eigen::VectorXd ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -kEigenClamp * scale)
      throw NumericalError("matrix is not positive semidefinite: smallest eigenvalue " +
                           fmt_double(ev.minCoeff()));
    ev(i) = ev(i) < 0.0 ? 0.0 : std::sqrt(ev(i));
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

double fid(const GaussianStats& a, const GaussianStats& b) {
  if (a.dim() != b.dim()) throw DomainError("fid: statistics dimensions differ");
  // Identical statistics are exactly zero; the eigen route would only add
  // roundoff amplified by the square roots of near-zero eigenvalues.
  if (a.mean == b.mean && a.cov == b.cov) return 0.0;

  const double mean_term = (a.mean - b.mean).squaredNorm();
  Eigen::MatrixXd root_a = sqrt_psd(a.cov);
  Eigen::MatrixXd inner = root_a * b.cov * root_a;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (inner + inner.transpose()),
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  double trace_sqrt = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -kEigenClamp * scale)
      throw NumericalError("covariance product has negative eigenvalue " + fmt_double(ev.minCoeff()));
    if (ev(i) > 0.0) trace_sqrt += std::sqrt(ev(i));
  }
  double value = mean_term + a.cov.trace() + b.cov.trace() - 2.0 * trace_sqrt;
  if (value < 0.0) {
    if (value < -kFidClamp) throw NumericalError("FID evaluated to " + fmt_double(value));
    value = 0.0;
  }
  return value;
}

MetricResult fid_result(const GaussianStats& real, const GaussianStats& fake,
                        const std::string& reference_mode) {
  nlohmann::json cfg = {{"covariance_normalization", "1/(n-1)"},
                        {"sqrt_method", "symmetric eigendecomposition"},
                        {"reference_mode", reference_mode},
                        {"reference_n", real.n}};
  return MetricResult::single("fid", fid(real, fake), fake.n, std::move(cfg));
}

double mmd2_unbiased(const FeatureMatrix& real, std::span<const std::size_t> real_rows,
                     const FeatureMatrix& fake, std::span<const std::size_t> fake_rows) {
  const double m = static_cast<double>(real_rows.size());
  const double mf = static_cast<double>(fake_rows.size());
  if (real_rows.size() < 2 || fake_rows.size() < 2) throw DomainError("MMD block needs >= 2 rows");
  kernels::MmdSums s = kernels::mmd_block_sums(real.view(), real_rows, fake.view(), fake_rows);
  return s.xx / (m * (m - 1.0)) + s.yy / (mf * (mf - 1.0)) - 2.0 * s.xy / (m * mf);
}

MetricResult kid(const FeatureMatrix& real, const FeatureMatrix& fake, std::size_t block_size,
                 std::uint64_t seed) {
  if (real.d() != fake.d()) throw DomainError("kid: feature dimensions differ");
  if (real.n() != fake.n()) throw DomainError("kid: real and fake sample counts differ");
  if (real.n() < 2) throw DomainError("kid: need at least 2 samples per side");
  if (block_size < 2) throw DomainError("kid: block size must be >= 2");
  const std::size_t n = real.n();
  const std::size_t m = std::min(block_size, n);
  const std::size_t blocks = n / m;

  Pcg64 real_rng(split_seed(seed, "kid-real"));
  Pcg64 fake_rng(split_seed(seed, "kid-fake"));
  std::vector<std::size_t> real_perm = random_permutation(n, real_rng);
  std::vector<std::size_t> fake_perm = random_permutation(n, fake_rng);

  std::vector<double> block_values(blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    std::span<const std::size_t> rr(real_perm.data() + b * m, m);
    std::span<const std::size_t> fr(fake_perm.data() + b * m, m);
    block_values[b] = mmd2_unbiased(real, rr, fake, fr);
  }
  double sum = 0.0;
  for (double v : block_values) sum += v;
  const double value = sum / static_cast<double>(blocks);

  nlohmann::json cfg = {{"kernel", "(x.y/d + 1)^3"},
                        {"block_size", block_size},
                        {"effective_block_size", m},
                        {"blocks", blocks},
                        {"discarded_rows", n - blocks * m},
                        {"seed", seed},
                        {"block_values", block_values}};
  return MetricResult::single("kid", value, n, std::move(cfg));
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DomainError("pearson: length mismatch");
  if (xs.size() < 2) throw DomainError("pearson: need at least 2 points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DomainError("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace ids
