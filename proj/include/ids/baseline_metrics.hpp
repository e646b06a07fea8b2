#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ids/feature_store.hpp"
#include "ids/ids_metrics.hpp"

namespace ids {

/// Moment summary compared by FID.
struct GaussianStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  std::size_t n = 0;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(mean.size()); }
};

/// Sample mean and 1/(n-1) covariance, symmetrized as (C + C^T)/2. Needs n >= 2.
GaussianStats gaussian_stats(const FeatureMatrix& feats);

/// Binary stats file: "IDSG", u32 version 1, u32 d, u64 n, f64 mean[d],
/// f64 cov[d*d] row-major, all little-endian.
void write_stats(const GaussianStats& stats, const std::filesystem::path& path);
GaussianStats read_stats(const std::filesystem::path& path);
/// Accepts either an IDSG stats file or an IDSF feature file.
GaussianStats load_stats_or_features(const std::filesystem::path& path);

/// Square root of a symmetric PSD matrix by eigendecomposition. Eigenvalues in
/// [-1e-8 * scale, 0) are clamped to 0; anything lower throws NumericalError.
Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m);

/// Frechet distance ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^{1/2}), with
/// the trace term evaluated as Tr(sqrt(S_a^{1/2} S_b S_a^{1/2})).
double fid(const GaussianStats& a, const GaussianStats& b);

/// Unbiased MMD^2 of one block with the cubic polynomial kernel.
double mmd2_unbiased(const FeatureMatrix& real, std::span<const std::size_t> real_rows,
                     const FeatureMatrix& fake, std::span<const std::size_t> fake_rows);

/// Block-averaged unbiased KID. Rows of each side are shuffled with the seeded
/// PRNG, cut into floor(n/m) blocks of m = min(block_size, n) rows; leftovers
/// are dropped. Block values are listed in config["block_values"].
MetricResult kid(const FeatureMatrix& real, const FeatureMatrix& fake, std::size_t block_size,
                 std::uint64_t seed);

/// FID as a MetricResult; `reference_mode` records how the reference side was formed.
MetricResult fid_result(const GaussianStats& real, const GaussianStats& fake,
                        const std::string& reference_mode);

/// Sample Pearson correlation. Throws DomainError on length mismatch, n < 2,
/// or zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

}  // namespace ids
