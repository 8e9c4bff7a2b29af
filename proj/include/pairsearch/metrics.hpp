#pragma once

#include <span>

#include "pairsearch/common.hpp"
#include "pairsearch/embedding.hpp"
#include "pairsearch/numeric.hpp"

namespace pairsearch {

/// Squared Euclidean distance ||w - w_hat||^2.
double mse(const Vector& w, const Vector& w_hat);

/// Fraction of discordant pairs between two rankings of the same items.
/// Each ranking lists item ids from first to last. O(n log n).
double kendall_tau_normalized(std::span<const Index> r1, std::span<const Index> r2);

/// Item ids sorted by distance to `point` (ties by id).
std::vector<Index> rank_by_distance(const Embedding& e, std::span<const Index> items,
                                    const Vector& point);

/// Mean normalized Kendall tau between the rankings induced by w_true and
/// w_hat over `batches` random item subsets of size batch_size (drawn
/// without replacement within a batch).
double ranking_metric(const Vector& w_true, const Vector& w_hat, const Embedding& e,
                      Index batch_size, int batches, Rng& rng);

}  // namespace pairsearch
