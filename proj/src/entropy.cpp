#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "pairsearch/posterior.hpp"

namespace pairsearch {

namespace {

// psi(n) for positive integers: -gamma + H_{n-1}.
double digamma_int(long long n) {
  constexpr double euler_gamma = 0.57721566490153286061;
  double h = 0.0;
  for (long long j = 1; j < n; ++j) h += 1.0 / static_cast<double>(j);
  return h - euler_gamma;
}

}  // namespace

double knn_entropy_bits(const RowMatrix& samples, int neighbours) {
  const Index n = samples.rows();
  const Index d = samples.cols();
  if (neighbours < 1) throw ArgumentError("neighbour count must be positive");
  if (n <= neighbours + 1) throw ArgumentError("too few samples for the entropy estimate");

  const Vector mean = samples.colwise().mean().transpose();
  const Matrix centered = samples.rowwise() - mean.transpose();
  const Matrix cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericError("sample covariance is not positive definite");
  const Matrix lower = llt.matrixL();
  double log_det_l = 0.0;
  for (Index i = 0; i < d; ++i) log_det_l += std::log(lower(i, i));
  // Whitened points, one per row.
  const RowMatrix white =
      lower.triangularView<Eigen::Lower>().solve(centered.transpose()).transpose();

  const auto k = static_cast<std::size_t>(neighbours);
  std::vector<double> knn(k);
  double sum_log = 0.0;
  Index used = 0, duplicates = 0;
  for (Index i = 0; i < n; ++i) {
    std::fill(knn.begin(), knn.end(), std::numeric_limits<double>::infinity());
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dist2 = (white.row(i) - white.row(j)).squaredNorm();
      if (dist2 < knn.back()) {
        auto pos = std::upper_bound(knn.begin(), knn.end(), dist2);
        std::copy_backward(pos, knn.end() - 1, knn.end());
        *pos = dist2;
      }
    }
    if (knn.front() == 0.0) ++duplicates;
    if (knn.back() > 0.0) {
      sum_log += 0.5 * std::log(knn.back());
      ++used;
    }
  }
  if (static_cast<double>(duplicates) > 0.01 * static_cast<double>(n)) {
    throw NumericError("entropy estimate: more than 1% duplicate samples");
  }
  const double dd = static_cast<double>(d);
  const double log_unit_ball = 0.5 * dd * std::log(M_PI) - std::lgamma(0.5 * dd + 1.0);
  const double nats = digamma_int(used) - digamma_int(neighbours) + log_unit_ball +
                      dd * sum_log / static_cast<double>(used) + log_det_l;
  return nats / std::log(2.0);
}

double posterior_entropy_estimate(const PosteriorBatch& batch, int neighbours) {
  if (batch.size() < 500) throw ArgumentError("entropy estimate needs at least 500 samples");
  return knn_entropy_bits(batch.samples(), neighbours);
}

}  // namespace pairsearch
