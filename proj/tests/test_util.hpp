#pragma once

#include <random>

#include "pairsearch/common.hpp"
#include "pairsearch/embedding.hpp"
#include "pairsearch/numeric.hpp"
#include "pairsearch/posterior.hpp"

namespace testutil {

using namespace pairsearch;

inline RowMatrix gaussian_points(Index n, Index d, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  RowMatrix x(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) x(i, j) = normal(rng);
  }
  return x;
}

inline Vector uniform_vector(Index d, double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(d);
  for (Index i = 0; i < d; ++i) v(i) = u(rng);
  return v;
}

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

// Batch built directly from given rows (no sampler involved).
inline PosteriorBatch batch_of(const RowMatrix& rows) { return PosteriorBatch(rows, 0); }

}  // namespace testutil
