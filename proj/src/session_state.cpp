#include "pairsearch/session_state.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_set>

namespace pairsearch {

namespace {

constexpr std::uint64_t kSelectStream = 0x73656c656374ULL;     // "select"
constexpr std::uint64_t kPosteriorStream = 0x706f7374ULL;      // "post"

}  // namespace

CandidatePool::CandidatePool(std::shared_ptr<const Embedding> embedding, NoiseSchemeConfig scheme)
    : embedding_(std::move(embedding)), scheme_(scheme) {
  const Index n = embedding_->size();
  if (n <= kMaterializeLimit) {
    materialized_ = true;
    pairs_.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        // Coincident items make no usable query.
        if ((embedding_->items.row(i) - embedding_->items.row(j)).cwiseAbs().maxCoeff() <= 1e-12) {
          continue;
        }
        pairs_.push_back(pair(i, j));
      }
    }
    if (pairs_.empty()) throw SelectionError("embedding has no distinct item pairs");
  }
}

CandidatePool::CandidatePool(std::shared_ptr<const Embedding> embedding, NoiseSchemeConfig scheme,
                             const std::vector<std::pair<Index, Index>>& pairs)
    : embedding_(std::move(embedding)), scheme_(scheme), materialized_(true) {
  if (pairs.empty()) throw SelectionError("candidate pool is empty");
  for (const auto& [i, j] : pairs) pairs_.push_back(pair(i, j));
}

std::size_t CandidatePool::full_size() const noexcept {
  if (materialized_) return pairs_.size();
  const auto n = static_cast<std::size_t>(embedding_->size());
  return n * (n - 1) / 2;
}

PairQuery CandidatePool::pair(Index i, Index j) const {
  if (i < 0 || j < 0 || i >= embedding_->size() || j >= embedding_->size()) {
    throw ArgumentError("item index out of range");
  }
  return make_indexed_pair(embedding_->item(i), embedding_->item(j), i, j, scheme_);
}

std::vector<PairQuery> CandidatePool::draw_candidates(double beta, Rng& rng,
                                                      double& beta_for_selection) const {
  if (materialized_) {
    beta_for_selection = beta;
    return pairs_;
  }
  beta_for_selection = 1.0;
  const std::size_t full = full_size();
  const auto want = std::max<std::size_t>(
      1, std::min<std::size_t>(full, static_cast<std::size_t>(std::ceil(beta * static_cast<double>(full)))));
  const Index n = embedding_->size();
  std::uniform_int_distribution<Index> item(0, n - 1);
  std::unordered_set<std::uint64_t> seen;
  std::vector<PairQuery> out;
  out.reserve(want);
  std::size_t attempts = 0;
  while (out.size() < want && attempts < 100 * want) {
    ++attempts;
    Index i = item(rng), j = item(rng);
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    const std::uint64_t key = static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(n) +
                              static_cast<std::uint64_t>(j);
    if (!seen.insert(key).second) continue;
    if ((embedding_->items.row(i) - embedding_->items.row(j)).cwiseAbs().maxCoeff() <= 1e-12) continue;
    out.push_back(pair(i, j));
  }
  if (out.empty()) throw SelectionError("could not draw any candidate pair");
  return out;
}

double default_beta(std::size_t pool_size) {
  if (pool_size == 0) return 1.0;
  return std::min(1.0, 2000.0 / static_cast<double>(pool_size));
}

SessionState init_session(std::shared_ptr<const CandidatePool> pool, StrategyConfig strategy,
                          std::uint64_t seed, double prior_half_width, SamplerOptions sampler) {
  validate(strategy);
  SessionState st;
  st.history = ResponseHistory(pool->embedding().dim(), prior_half_width);
  st.pool = std::move(pool);
  st.strategy = strategy;
  st.sampler = sampler;
  st.seed = seed;
  st.batch = sample_posterior(st.history, strategy.samples, derive_seed(seed, kPosteriorStream, 0),
                              sampler);
  st.estimate = st.batch.mean();
  return st;
}

PairQuery propose_query(const SessionState& st) {
  Rng rng = make_rng(st.seed, kSelectStream, st.history.size() + 1);
  if (st.pool->materialized()) {
    return select_query(st.strategy, SelectionState{st.batch, st.history, st.pool->pairs()}, rng);
  }
  double beta = st.strategy.beta;
  const auto candidates = st.pool->draw_candidates(st.strategy.beta, rng, beta);
  StrategyConfig cfg = st.strategy;
  cfg.beta = beta;
  return select_query(cfg, SelectionState{st.batch, st.history, candidates}, rng);
}

void incorporate_response(SessionState& st, PairQuery query, int response) {
  st.history.append(std::move(query), response);
  st.batch = sample_posterior(st.history, st.strategy.samples,
                              derive_seed(st.seed, kPosteriorStream, st.history.size()), st.sampler);
  st.estimate = st.batch.mean();
}

PairQuery run_step(SessionState& st, const Responder& respond) {
  PairQuery pq = propose_query(st);
  const int y = respond(pq);
  incorporate_response(st, pq, y);
  return pq;
}

}  // namespace pairsearch
