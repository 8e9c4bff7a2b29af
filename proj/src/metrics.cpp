#include "pairsearch/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <unordered_map>
#include <vector>

namespace pairsearch {

double mse(const Vector& w, const Vector& w_hat) {
  if (w.size() != w_hat.size()) throw ArgumentError("mse: dimension mismatch");
  return (w - w_hat).squaredNorm();
}

namespace {

// Counts inversions with a merge sort.
long long count_inversions(std::vector<Index>& v, std::vector<Index>& scratch, std::size_t lo,
                           std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  long long inv = count_inversions(v, scratch, lo, mid) + count_inversions(v, scratch, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[i] <= v[j]) {
      scratch[k++] = v[i++];
    } else {
      inv += static_cast<long long>(mid - i);
      scratch[k++] = v[j++];
    }
  }
  while (i < mid) scratch[k++] = v[i++];
  while (j < hi) scratch[k++] = v[j++];
  std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo),
            scratch.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

}  // namespace

double kendall_tau_normalized(std::span<const Index> r1, std::span<const Index> r2) {
  if (r1.size() != r2.size()) throw ArgumentError("rankings differ in length");
  const std::size_t n = r1.size();
  std::unordered_map<Index, Index> pos;
  pos.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!pos.emplace(r1[i], static_cast<Index>(i)).second) throw ArgumentError("ranking repeats an item");
  }
  std::vector<Index> seq(n);
  std::vector<bool> seen(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const auto it = pos.find(r2[i]);
    if (it == pos.end()) throw ArgumentError("rankings are not permutations of the same items");
    if (seen[static_cast<std::size_t>(it->second)]) throw ArgumentError("ranking repeats an item");
    seen[static_cast<std::size_t>(it->second)] = true;
    seq[i] = it->second;
  }
  if (n < 2) return 0.0;
  std::vector<Index> scratch(n);
  const long long discordant = count_inversions(seq, scratch, 0, n);
  const double total = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  return static_cast<double>(discordant) / total;
}

std::vector<Index> rank_by_distance(const Embedding& e, std::span<const Index> items,
                                    const Vector& point) {
  std::vector<std::pair<double, Index>> keyed;
  keyed.reserve(items.size());
  for (Index id : items) keyed.emplace_back((e.items.row(id).transpose() - point).squaredNorm(), id);
  std::sort(keyed.begin(), keyed.end());
  std::vector<Index> out;
  out.reserve(keyed.size());
  for (const auto& [dist, id] : keyed) out.push_back(id);
  return out;
}

double ranking_metric(const Vector& w_true, const Vector& w_hat, const Embedding& e,
                      Index batch_size, int batches, Rng& rng) {
  if (batch_size < 2 || batch_size > e.size()) throw ArgumentError("invalid ranking batch size");
  if (batches < 1) throw ArgumentError("ranking metric needs at least one batch");
  std::vector<Index> all(static_cast<std::size_t>(e.size()));
  std::iota(all.begin(), all.end(), Index{0});
  std::vector<Index> chosen(static_cast<std::size_t>(batch_size));
  double total = 0.0;
  for (int b = 0; b < batches; ++b) {
    // Partial Fisher-Yates: the first batch_size entries are a uniform
    // sample without replacement.
    for (Index i = 0; i < batch_size; ++i) {
      std::uniform_int_distribution<Index> pick(i, e.size() - 1);
      std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(pick(rng))]);
      chosen[static_cast<std::size_t>(i)] = all[static_cast<std::size_t>(i)];
    }
    const auto r_true = rank_by_distance(e, chosen, w_true);
    const auto r_hat = rank_by_distance(e, chosen, w_hat);
    total += kendall_tau_normalized(r_true, r_hat);
  }
  return total / static_cast<double>(batches);
}

}  // namespace pairsearch
