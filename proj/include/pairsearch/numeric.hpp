#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string_view>

namespace pairsearch {

inline constexpr double kLn2 = 0.69314718055994530942;

/// log(1 + e^x) without overflow.
double softplus(double x) noexcept;

/// f(x) = 1 / (1 + e^{-x}).
double logistic(double x) noexcept;

/// log f(x), finite for every finite x.
double log_logistic(double x) noexcept;

/// h_b(p) in bits. Exactly 0 at p = 0 and p = 1.
double binary_entropy(double p) noexcept;

/// h_b(f(z)) in bits, evaluated without forming f(z) so that very
/// confident responses keep their tiny residual entropy.
double binary_entropy_of_logistic(double z) noexcept;

struct GoldenSectionResult {
  double argmax;
  double value;
  int iterations;
};

/// Maximizes a unimodal function on [lo, hi]. Stops once the bracket is no
/// wider than rel_tol * max(1, |x|) around the current best point.
GoldenSectionResult golden_section_maximize(const std::function<double(double)>& fn, double lo,
                                            double hi, double rel_tol);

/// Adaptive Simpson quadrature to a relative tolerance.
double adaptive_simpson(const std::function<double(double)>& fn, double lo, double hi,
                        double rel_tol, int max_depth = 50);

// Deterministic seeding. Every random stream in the library is derived from
// a master seed plus a small tuple of counters so results never depend on
// call order across independent streams.
std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter = 0) noexcept;
std::uint64_t hash_label(std::string_view label) noexcept;

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t counter = 0) {
  return Rng(derive_seed(seed, stream, counter));
}

}  // namespace pairsearch
