#include "ids/kernels.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ids/errors.hpp"

namespace ids::kernels {

namespace {

double dot(const float* a, const float* b, std::size_t d) {
  double acc = 0.0;
  for (std::size_t k = 0; k < d; ++k) acc += static_cast<double>(a[k]) * static_cast<double>(b[k]);
  return acc;
}

struct Candidate {
  std::int64_t dist2 = std::numeric_limits<std::int64_t>::max();
  int row = 0;
  int col = 0;

  bool better_than(const Candidate& o) const {
    if (dist2 != o.dist2) return dist2 < o.dist2;
    if (row != o.row) return row < o.row;
    return col < o.col;
  }
};

std::vector<std::size_t> chosen_indices(std::span<const std::uint8_t> chosen) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < chosen.size(); ++i)
    if (chosen[i]) idx.push_back(i);
  return idx;
}

void check_has_source(std::span<const std::uint8_t> chosen, std::size_t n_chosen) {
  if (n_chosen == chosen.size()) throw DomainError("nearest_unchosen: no unflagged pixel remains");
}

// Ring search outward from (px, py): the ring at Chebyshev radius r only holds
// pixels at Euclidean distance >= r, so once r^2 exceeds the best distance the
// search is complete.
std::size_t ring_search(std::span<const std::uint8_t> chosen, int width, int height, int px,
                        int py) {
  Candidate best;
  int max_r = std::max(width, height);
  auto consider = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    if (chosen[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
               static_cast<std::size_t>(x)])
      return;
    Candidate c;
    std::int64_t dx = x - px;
    std::int64_t dy = y - py;
    c.dist2 = dx * dx + dy * dy;
    c.row = y;
    c.col = x;
    if (c.better_than(best)) best = c;
  };
  for (int r = 1; r <= max_r; ++r) {
    if (best.dist2 != std::numeric_limits<std::int64_t>::max() &&
        static_cast<std::int64_t>(r) * r > best.dist2)
      break;
    for (int x = px - r; x <= px + r; ++x) {
      consider(x, py - r);
      consider(x, py + r);
    }
    for (int y = py - r + 1; y <= py + r - 1; ++y) {
      consider(px - r, y);
      consider(px + r, y);
    }
  }
  return static_cast<std::size_t>(best.row) * static_cast<std::size_t>(width) +
         static_cast<std::size_t>(best.col);
}

}  // namespace

double poly3_kernel(const float* a, const float* b, std::size_t d) {
  double t = dot(a, b, d) / static_cast<double>(d) + 1.0;
  return t * t * t;
}

MmdSums mmd_block_sums(const MatrixView& x, std::span<const std::size_t> x_rows,
                       const MatrixView& y, std::span<const std::size_t> y_rows) {
  const auto m = static_cast<std::int64_t>(x_rows.size());
  const auto my = static_cast<std::int64_t>(y_rows.size());
  const std::size_t d = x.cols;
  std::vector<double> row_xx(static_cast<std::size_t>(m), 0.0);
  std::vector<double> row_yy(static_cast<std::size_t>(my), 0.0);
  std::vector<double> row_xy(static_cast<std::size_t>(m), 0.0);

#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i) {
    const float* xi = x.row(x_rows[static_cast<std::size_t>(i)]);
    double sxx = 0.0;
    for (std::int64_t j = i + 1; j < m; ++j)
      sxx += poly3_kernel(xi, x.row(x_rows[static_cast<std::size_t>(j)]), d);
    double sxy = 0.0;
    for (std::int64_t j = 0; j < my; ++j)
      sxy += poly3_kernel(xi, y.row(y_rows[static_cast<std::size_t>(j)]), d);
    row_xx[static_cast<std::size_t>(i)] = sxx;
    row_xy[static_cast<std::size_t>(i)] = sxy;
  }
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < my; ++i) {
    const float* yi = y.row(y_rows[static_cast<std::size_t>(i)]);
    double syy = 0.0;
    for (std::int64_t j = i + 1; j < my; ++j)
      syy += poly3_kernel(yi, y.row(y_rows[static_cast<std::size_t>(j)]), d);
    row_yy[static_cast<std::size_t>(i)] = syy;
  }

  MmdSums sums;
  // Off-diagonal sums are symmetric: count each unordered pair twice.
  sums.xx = 2.0 * std::accumulate(row_xx.begin(), row_xx.end(), 0.0);
  sums.yy = 2.0 * std::accumulate(row_yy.begin(), row_yy.end(), 0.0);
  sums.xy = std::accumulate(row_xy.begin(), row_xy.end(), 0.0);
  return sums;
}

void mean_and_scatter(const MatrixView& x, std::vector<double>& mean,
                      std::vector<double>& scatter) {
  const auto n = static_cast<Eigen::Index>(x.rows);
  const auto d = static_cast<Eigen::Index>(x.cols);
  Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> raw(
      x.data.data(), n, d);
  Eigen::MatrixXd centered = raw.cast<double>();

  mean.assign(static_cast<std::size_t>(d), 0.0);
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < d; ++j) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += centered(i, j);
    mean[static_cast<std::size_t>(j)] = s / static_cast<double>(n);
  }
  for (Eigen::Index j = 0; j < d; ++j) centered.col(j).array() -= mean[static_cast<std::size_t>(j)];

  Eigen::MatrixXd s(d, d);
  s.noalias() = centered.transpose() * centered;
  scatter.resize(static_cast<std::size_t>(d * d));
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      scatter[static_cast<std::size_t>(i * d + j)] = s(i, j);
}

void project_relu(std::span<const double> proj, std::size_t out_dim, std::span<const double> v,
                  std::span<float> out) {
  const std::size_t in = v.size();
#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < static_cast<std::int64_t>(out_dim); ++k) {
    const double* p = proj.data() + static_cast<std::size_t>(k) * in;
    double acc = 0.0;
    for (std::size_t j = 0; j < in; ++j) acc += p[j] * v[j];
    out[static_cast<std::size_t>(k)] = static_cast<float>(std::max(0.0, acc));
  }
}

void affine_scores(const MatrixView& x, std::span<const double> w, double bias,
                   std::span<double> out) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(x.rows); ++i) {
    const float* xi = x.row(static_cast<std::size_t>(i));
    double acc = 0.0;
    for (std::size_t k = 0; k < x.cols; ++k) acc += w[k] * static_cast<double>(xi[k]);
    out[static_cast<std::size_t>(i)] = acc + bias;
  }
}

std::vector<std::size_t> nearest_unchosen(std::span<const std::uint8_t> chosen, int width,
                                          int height) {
  std::vector<std::size_t> idx = chosen_indices(chosen);
  check_has_source(chosen, idx.size());
  std::vector<std::size_t> out(idx.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t k = 0; k < static_cast<std::int64_t>(idx.size()); ++k) {
    std::size_t p = idx[static_cast<std::size_t>(k)];
    int px = static_cast<int>(p % static_cast<std::size_t>(width));
    int py = static_cast<int>(p / static_cast<std::size_t>(width));
    out[static_cast<std::size_t>(k)] = ring_search(chosen, width, height, px, py);
  }
  return out;
}

namespace serial {

MmdSums mmd_block_sums(const MatrixView& x, std::span<const std::size_t> x_rows,
                       const MatrixView& y, std::span<const std::size_t> y_rows) {
  MmdSums sums;
  const std::size_t d = x.cols;
  for (std::size_t i = 0; i < x_rows.size(); ++i)
    for (std::size_t j = 0; j < x_rows.size(); ++j)
      if (i != j) sums.xx += poly3_kernel(x.row(x_rows[i]), x.row(x_rows[j]), d);
  for (std::size_t i = 0; i < y_rows.size(); ++i)
    for (std::size_t j = 0; j < y_rows.size(); ++j)
      if (i != j) sums.yy += poly3_kernel(y.row(y_rows[i]), y.row(y_rows[j]), d);
  for (std::size_t i = 0; i < x_rows.size(); ++i)
    for (std::size_t j = 0; j < y_rows.size(); ++j)
      sums.xy += poly3_kernel(x.row(x_rows[i]), y.row(y_rows[j]), d);
  return sums;
}

void mean_and_scatter(const MatrixView& x, std::vector<double>& mean,
                      std::vector<double>& scatter) {
  const std::size_t n = x.rows;
  const std::size_t d = x.cols;
  mean.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += x.row(i)[j];
  for (double& m : mean) m /= static_cast<double>(n);
  scatter.assign(d * d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a) {
      double da = x.row(i)[a] - mean[a];
      for (std::size_t b = 0; b < d; ++b) scatter[a * d + b] += da * (x.row(i)[b] - mean[b]);
    }
}

void project_relu(std::span<const double> proj, std::size_t out_dim, std::span<const double> v,
                  std::span<float> out) {
  const std::size_t in = v.size();
  for (std::size_t k = 0; k < out_dim; ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < in; ++j) acc += proj[k * in + j] * v[j];
    out[k] = static_cast<float>(std::max(0.0, acc));
  }
}

void affine_scores(const MatrixView& x, std::span<const double> w, double bias,
                   std::span<double> out) {
  for (std::size_t i = 0; i < x.rows; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < x.cols; ++k) acc += w[k] * static_cast<double>(x.row(i)[k]);
    out[i] = acc + bias;
  }
}

std::vector<std::size_t> nearest_unchosen(std::span<const std::uint8_t> chosen, int width,
                                          int height) {
  std::vector<std::size_t> idx = chosen_indices(chosen);
  check_has_source(chosen, idx.size());
  std::vector<std::size_t> out;
  out.reserve(idx.size());
  for (std::size_t p : idx) {
    int px = static_cast<int>(p % static_cast<std::size_t>(width));
    int py = static_cast<int>(p / static_cast<std::size_t>(width));
    Candidate best;
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        if (chosen[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                   static_cast<std::size_t>(x)])
          continue;
        Candidate c;
        std::int64_t dx = x - px;
        std::int64_t dy = y - py;
        c.dist2 = dx * dx + dy * dy;
        c.row = y;
        c.col = x;
        if (c.better_than(best)) best = c;
      }
    out.push_back(static_cast<std::size_t>(best.row) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(best.col));
  }
  return out;
}

}  // namespace serial

}  // namespace ids::kernels
