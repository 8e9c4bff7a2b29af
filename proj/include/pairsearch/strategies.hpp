#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pairsearch/common.hpp"
#include "pairsearch/posterior.hpp"
#include "pairsearch/response_model.hpp"

namespace pairsearch {

enum class StrategyKind { infogain, epmv, mcmv, random };

std::string_view to_string(StrategyKind k) noexcept;
StrategyKind parse_strategy_kind(std::string_view s);

struct StrategyConfig {
  StrategyKind kind = StrategyKind::mcmv;
  double lambda = 1.0;
  /// Pool downsampling rate in (0, 1].
  double beta = 1.0;
  Index samples = kDefaultSampleCount;
};

void validate(const StrategyConfig& cfg);

struct SelectionState {
  const PosteriorBatch& batch;
  const ResponseHistory& history;
  std::span<const PairQuery> pool;
};

/// p1 = mean over samples of P(response 1 | w_s).
double predicted_q_probability(const PairQuery& pq, const PosteriorBatch& batch);

/// InfoGain utility: h_b(p1) - mean_s h_b(f_s), in bits.
double info_gain_utility(const PairQuery& pq, const PosteriorBatch& batch);

/// k sqrt(a^T Sigma a) - lambda |p1 - 1/2|.
double epmv_utility(const PairQuery& pq, const PosteriorBatch& batch, double lambda);

/// k sqrt(a^T Sigma a) - lambda |a^T mu - b| / ||a||.
double mcmv_utility(const PairQuery& pq, const Vector& mean, const Matrix& cov, double lambda);

/// Utility of `pq` under the configured strategy (random scores 0).
double strategy_utility(const StrategyConfig& cfg, const PairQuery& pq, const PosteriorBatch& batch);

/// Bernoulli thinning at rate beta, redrawn until at least one survivor.
std::vector<std::size_t> downsample_pool(std::size_t pool_size, double beta, Rng& rng);

/// True when (lhs utility, lhs key) should win over rhs: higher utility,
/// then lowest (p_index, q_index).
bool better_candidate(double lhs_utility, const PairQuery& lhs, double rhs_utility,
                      const PairQuery& rhs);

/// Downsamples the pool and returns the argmax of the configured utility
/// (random strategy: a uniform survivor).
PairQuery select_query(const StrategyConfig& cfg, const SelectionState& st, Rng& rng);

/// Arbitrary-hyperplane EPMV: the unit top eigenvector of the batch
/// covariance, with b set by bisection so the batch predicts an
/// (almost) even split.
PairQuery continuous_epmv_query(const PosteriorBatch& batch, double k);

/// Unit eigenvector for the largest eigenvalue; the first component with
/// magnitude above 1e-12 is made positive.
Vector top_eigenvector(const Matrix& cov);

}  // namespace pairsearch
