#pragma once

// Data-parallel inner loops. Each kernel has an OpenMP implementation in
// `ids::kernels` and a straightforward single-threaded reference in
// `ids::kernels::serial`; tests compare the two and `bench/` times them.
//
// The parallel kernels use a fixed static partition and an ordered final
// reduction, so results do not depend on the thread count.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ids::kernels {

/// Row-major float matrix view.
struct MatrixView {
  std::span<const float> data;
  std::size_t rows = 0;
  std::size_t cols = 0;

  const float* row(std::size_t i) const { return data.data() + i * cols; }
};

/// Raw sums of the cubic polynomial kernel k(a, b) = (a.b / d + 1)^3 over one
/// KID block: off-diagonal pairs within X, within Y, and all X-Y pairs.
struct MmdSums {
  double xx = 0.0;
  double yy = 0.0;
  double xy = 0.0;
};

double poly3_kernel(const float* a, const float* b, std::size_t d);

MmdSums mmd_block_sums(const MatrixView& x, std::span<const std::size_t> x_rows,
                       const MatrixView& y, std::span<const std::size_t> y_rows);

/// Sample mean and unnormalized scatter sum_i (x_i - mean)(x_i - mean)^T,
/// both in double. `scatter` is d*d row-major, fully populated.
void mean_and_scatter(const MatrixView& x, std::vector<double>& mean,
                      std::vector<double>& scatter);

/// out[k] = max(0, sum_j proj[k*in + j] * v[j]) for k in [0, out_dim).
void project_relu(std::span<const double> proj, std::size_t out_dim, std::span<const double> v,
                  std::span<float> out);

/// out[i] = w . x_i + bias, accumulated in double.
void affine_scores(const MatrixView& x, std::span<const double> w, double bias,
                   std::span<double> out);

/// For every pixel flagged in `chosen` (row-major, width*height), the linear
/// index of the nearest unflagged pixel by Euclidean distance between pixel
/// centers; ties go to the smaller row, then the smaller column. Returns one
/// entry per chosen pixel, in increasing linear-index order of the chosen pixels.
std::vector<std::size_t> nearest_unchosen(std::span<const std::uint8_t> chosen, int width,
                                          int height);

namespace serial {

MmdSums mmd_block_sums(const MatrixView& x, std::span<const std::size_t> x_rows,
                       const MatrixView& y, std::span<const std::size_t> y_rows);

void mean_and_scatter(const MatrixView& x, std::vector<double>& mean,
                      std::vector<double>& scatter);

void project_relu(std::span<const double> proj, std::size_t out_dim, std::span<const double> v,
                  std::span<float> out);

void affine_scores(const MatrixView& x, std::span<const double> w, double bias,
                   std::span<double> out);

/// Exhaustive scan over all unflagged pixels for each flagged one.
std::vector<std::size_t> nearest_unchosen(std::span<const std::uint8_t> chosen, int width,
                                          int height);

}  // namespace serial

}  // namespace ids::kernels
