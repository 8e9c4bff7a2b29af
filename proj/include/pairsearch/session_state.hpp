#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "pairsearch/embedding.hpp"
#include "pairsearch/posterior.hpp"
#include "pairsearch/strategies.hpp"

namespace pairsearch {

/// Pairs that may be asked. Small item sets materialize all N(N-1)/2 pairs
/// once; larger ones draw a fresh uniform sample of distinct index pairs at
/// every step so memory stays bounded.
class CandidatePool {
 public:
  static constexpr Index kMaterializeLimit = 2000;

  CandidatePool(std::shared_ptr<const Embedding> embedding, NoiseSchemeConfig scheme);

  /// Restrict to an explicit list of index pairs.
  CandidatePool(std::shared_ptr<const Embedding> embedding, NoiseSchemeConfig scheme,
                const std::vector<std::pair<Index, Index>>& pairs);

  bool materialized() const noexcept { return materialized_; }
  /// Number of pairs in the full pool.
  std::size_t full_size() const noexcept;
  std::span<const PairQuery> pairs() const noexcept { return pairs_; }

  /// Candidate list for one selection step. Materialized pools return every
  /// pair (select_query thins them at rate beta); lazy pools draw
  /// ceil(beta * full_size) distinct pairs themselves.
  std::vector<PairQuery> draw_candidates(double beta, Rng& rng, double& beta_for_selection) const;

  const Embedding& embedding() const noexcept { return *embedding_; }
  const NoiseSchemeConfig& scheme() const noexcept { return scheme_; }
  PairQuery pair(Index i, Index j) const;

 private:
  std::shared_ptr<const Embedding> embedding_;
  NoiseSchemeConfig scheme_;
  bool materialized_ = false;
  std::vector<PairQuery> pairs_;
};

/// Default downsampling rate: about 2000 candidates per step.
double default_beta(std::size_t pool_size);

/// One live or simulated search. All randomness is derived from `seed` and
/// the step counter, so the same sequence of answers always reproduces the
/// same queries and estimates.
struct SessionState {
  std::shared_ptr<const CandidatePool> pool;
  StrategyConfig strategy;
  SamplerOptions sampler;
  std::uint64_t seed = 0;
  ResponseHistory history{1};
  PosteriorBatch batch;
  Vector estimate;
};

SessionState init_session(std::shared_ptr<const CandidatePool> pool, StrategyConfig strategy,
                          std::uint64_t seed, double prior_half_width = 1.0,
                          SamplerOptions sampler = {});

/// Selection step for query number history.size() + 1.
PairQuery propose_query(const SessionState& st);

/// Appends the answer, resamples the posterior, and updates the estimate.
void incorporate_response(SessionState& st, PairQuery query, int response);

using Responder = std::function<int(const PairQuery&)>;

/// One full loop iteration: select, ask, update. Returns the asked pair.
PairQuery run_step(SessionState& st, const Responder& respond);

}  // namespace pairsearch
