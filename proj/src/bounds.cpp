#include "pairsearch/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pairsearch/numeric.hpp"

namespace pairsearch {

namespace {

constexpr double kE = 2.71828182845904523536;
constexpr double kPi = 3.14159265358979323846;

}  // namespace

double mse_lower_bound(Index d, double queries) {
  if (d < 1 || queries < 0.0) throw ArgumentError("mse_lower_bound: invalid arguments");
  const double dd = static_cast<double>(d);
  return dd * std::exp2(-2.0 * queries / dd) / (2.0 * kPi * kE);
}

double lcc_constant(Index d) {
  const double dd = static_cast<double>(d);
  return kE * kE * dd * dd / (4.0 * std::sqrt(2.0) * (dd + 2.0));
}

double volume_root(const Matrix& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov, Eigen::EigenvaluesOnly);
  const Vector ev = es.eigenvalues();
  if (!(ev.minCoeff() > 0.0)) throw DegenerateError("covariance is singular");
  return std::exp(ev.array().log().sum() / static_cast<double>(cov.rows()));
}

EntropyBounds lcc_entropy_bounds(const Matrix& cov) {
  const Index d = cov.rows();
  if (d < 1 || cov.cols() != d) throw ArgumentError("covariance must be square");
  const double vr = volume_root(cov);
  const double half_d = 0.5 * static_cast<double>(d);
  return {half_d * std::log2(2.0 * vr / (kE * kE * lcc_constant(d))),
          half_d * std::log2(2.0 * kPi * kE * vr)};
}

double equiprobable_info_lower(double c, double k, double sigma) {
  if (c < 0.0 || c > 1.0) throw ArgumentError("c must be in [0, 1]");
  if (k < 0.0 || sigma < 0.0) throw ArgumentError("k and sigma must be >= 0");
  const double z = c * k * sigma / 2.0;
  return (1.0 - binary_entropy_of_logistic(z)) * (1.0 - c);
}

MeanCutBounds mean_cut_bounds(double k, double sigma) {
  const double ks = k * sigma;
  if (!(ks > 0.0)) throw ArgumentError("k * sigma must be positive");
  MeanCutBounds out;
  out.deviation_bound = (kE - 2.0) / (2.0 * kE) + kLn2 / ks;
  const double arg = std::clamp(1.0 / kE - kLn2 / ks, 0.0, 0.5);
  const double info = binary_entropy(arg) - kPi * kPi * std::log2(kE) / (3.0 * ks);
  out.info_lower_bits = std::clamp(info, 0.0, 1.0);
  return out;
}

double stopping_rate(double x, Index d, double k_min, double c) {
  const double sigma = std::exp2(-x / static_cast<double>(d)) / std::sqrt(2.0 * kPi * kE);
  return equiprobable_info_lower(c, k_min, sigma);
}

StoppingTimeBounds stopping_time_bounds(double epsilon, Index d, double k_min, double c) {
  if (!(epsilon > 0.0) || !(k_min > 0.0) || !(c > 0.0 && c < 1.0) || d < 1) {
    throw ArgumentError("stopping_time_bounds: invalid arguments");
  }
  const double half_d = 0.5 * static_cast<double>(d);
  StoppingTimeBounds out;
  out.tau1 = half_d * std::log2(1.0 / (2.0 * kPi * kE * epsilon));
  out.tau2 = half_d * std::log2(kE * kE * lcc_constant(d) / (2.0 * epsilon));
  const double l_tau2 = stopping_rate(out.tau2, d, k_min, c);
  if (!(l_tau2 > 0.0)) {
    out.upper = std::numeric_limits<double>::infinity();
    return out;
  }
  double integral = 0.0;
  if (out.tau2 > 0.0) {
    integral = adaptive_simpson([&](double x) { return stopping_rate(x, d, k_min, c); }, 0.0,
                                out.tau2, 1e-8);
  }
  out.upper = out.tau2 + (out.tau2 + 1.0) / l_tau2 - integral / l_tau2;
  return out;
}

StoppingTimeBounds best_stopping_time_bounds(double epsilon, Index d, double k_min, int grid) {
  StoppingTimeBounds best{};
  best.upper = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= grid; ++i) {
    const double c = static_cast<double>(i) / static_cast<double>(grid + 1);
    const auto b = stopping_time_bounds(epsilon, d, k_min, c);
    if (i == 1 || b.upper < best.upper) best = b;
  }
  return best;
}

}  // namespace pairsearch
