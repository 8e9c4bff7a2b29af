#pragma once

#include "pairsearch/common.hpp"

namespace pairsearch {

// Closed-form error and information bounds. All entropies are in bits.

/// d 2^{-2i/d} / (2 pi e): floor on the expected squared error after i
/// queries, for any strategy (unit-volume uniform prior).
double mse_lower_bound(Index d, double queries);

/// e^2 d^2 / (4 sqrt(2) (d + 2)).
double lcc_constant(Index d);

struct EntropyBounds {
  double lower_bits;
  double upper_bits;
};

/// Entropy sandwich for a log-concave density with covariance `cov`:
/// [(d/2) log2(2 |S|^{1/d} / (e^2 c_d)), (d/2) log2(2 pi e |S|^{1/d})].
EntropyBounds lcc_entropy_bounds(const Matrix& cov);

/// |S|^{1/d}, computed through the log-determinant.
double volume_root(const Matrix& cov);

/// Information lower bound for equiprobable queries:
/// L_{c,k}(sigma) = (1 - h_b(f(c k sigma / 2))) (1 - c).
double equiprobable_info_lower(double c, double k, double sigma);

struct MeanCutBounds {
  /// |p1 - 1/2| <= (e - 2)/(2e) + ln2/(k sigma)
  double deviation_bound;
  /// h_b(1/e - ln2/(k sigma)) - pi^2 log2(e) / (3 k sigma), clamped to [0, 1]
  /// with the h_b argument clamped to [0, 1/2].
  double info_lower_bits;
};

MeanCutBounds mean_cut_bounds(double k, double sigma);

struct StoppingTimeBounds {
  double tau1;
  double tau2;
  /// +infinity when l(tau2) == 0.
  double upper;
};

/// l(x) = L_{c,k_min}(2^{-x/d} / sqrt(2 pi e)).
double stopping_rate(double x, Index d, double k_min, double c);

/// Lower and upper bounds on the expected number of equiprobable
/// max-variance queries before |S|^{1/d} < epsilon.
StoppingTimeBounds stopping_time_bounds(double epsilon, Index d, double k_min, double c);

/// Smallest upper bound over a grid of c in (0, 1).
StoppingTimeBounds best_stopping_time_bounds(double epsilon, Index d, double k_min, int grid = 99);

}  // namespace pairsearch
