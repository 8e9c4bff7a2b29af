#include "pairsearch/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace pairsearch {

std::string_view to_string(StrategyKind k) noexcept {
  switch (k) {
    case StrategyKind::infogain: return "infogain";
    case StrategyKind::epmv: return "epmv";
    case StrategyKind::mcmv: return "mcmv";
    case StrategyKind::random: return "random";
  }
  return "random";
}

StrategyKind parse_strategy_kind(std::string_view s) {
  if (s == "infogain") return StrategyKind::infogain;
  if (s == "epmv") return StrategyKind::epmv;
  if (s == "mcmv") return StrategyKind::mcmv;
  if (s == "random") return StrategyKind::random;
  throw ArgumentError("unknown strategy '" + std::string(s) + "'");
}

void validate(const StrategyConfig& cfg) {
  if (!(cfg.lambda >= 0.0) || !std::isfinite(cfg.lambda)) throw ArgumentError("lambda must be >= 0");
  if (!(cfg.beta > 0.0 && cfg.beta <= 1.0)) throw ArgumentError("beta must be in (0, 1]");
  if (cfg.samples < kMinSampleCount) throw ArgumentError("sample count too small");
}

namespace {

// Margins a^T w_s - b for every sample.
Vector sample_margins(const PairQuery& pq, const PosteriorBatch& batch) {
  Vector m = batch.samples() * pq.a;
  m.array() -= pq.b;
  return m;
}

}  // namespace

double predicted_q_probability(const PairQuery& pq, const PosteriorBatch& batch) {
  const Vector m = sample_margins(pq, batch);
  double sum = 0.0;
  for (Index s = 0; s < m.size(); ++s) sum += logistic(-pq.k * m(s));
  return sum / static_cast<double>(m.size());
}

double info_gain_utility(const PairQuery& pq, const PosteriorBatch& batch) {
  if (batch.size() == 0) throw ArgumentError("empty posterior batch");
  const Vector m = sample_margins(pq, batch);
  double p1 = 0.0, cond = 0.0;
  for (Index s = 0; s < m.size(); ++s) {
    const double z = -pq.k * m(s);
    p1 += logistic(z);
    cond += binary_entropy_of_logistic(z);
  }
  const double n = static_cast<double>(m.size());
  const double gain = binary_entropy(p1 / n) - cond / n;
  return std::max(0.0, gain);
}

double epmv_utility(const PairQuery& pq, const PosteriorBatch& batch, double lambda) {
  const double spread = std::sqrt(std::max(0.0, pq.a.dot(batch.covariance() * pq.a)));
  const double p1 = predicted_q_probability(pq, batch);
  return pq.k * spread - lambda * std::abs(p1 - 0.5);
}

double mcmv_utility(const PairQuery& pq, const Vector& mean, const Matrix& cov, double lambda) {
  const double spread = std::sqrt(std::max(0.0, pq.a.dot(cov * pq.a)));
  const double distance = std::abs(pq.a.dot(mean) - pq.b) / pq.a.norm();
  return pq.k * spread - lambda * distance;
}

double strategy_utility(const StrategyConfig& cfg, const PairQuery& pq, const PosteriorBatch& batch) {
  switch (cfg.kind) {
    case StrategyKind::infogain: return info_gain_utility(pq, batch);
    case StrategyKind::epmv: return epmv_utility(pq, batch, cfg.lambda);
    case StrategyKind::mcmv: return mcmv_utility(pq, batch.mean(), batch.covariance(), cfg.lambda);
    case StrategyKind::random: return 0.0;
  }
  return 0.0;
}

std::vector<std::size_t> downsample_pool(std::size_t pool_size, double beta, Rng& rng) {
  if (pool_size == 0) throw SelectionError("candidate pool is empty");
  std::vector<std::size_t> keep;
  if (beta >= 1.0) {
    keep.resize(pool_size);
    for (std::size_t i = 0; i < pool_size; ++i) keep[i] = i;
    return keep;
  }
  std::bernoulli_distribution coin(beta);
  while (keep.empty()) {
    keep.reserve(static_cast<std::size_t>(beta * static_cast<double>(pool_size)) + 1);
    for (std::size_t i = 0; i < pool_size; ++i) {
      if (coin(rng)) keep.push_back(i);
    }
  }
  return keep;
}

bool better_candidate(double lhs_utility, const PairQuery& lhs, double rhs_utility,
                      const PairQuery& rhs) {
  if (lhs_utility != rhs_utility) return lhs_utility > rhs_utility;
  const auto key = [](const PairQuery& pq) {
    return std::pair<Index, Index>(pq.p_index.value_or(-1), pq.q_index.value_or(-1));
  };
  return key(lhs) < key(rhs);
}

PairQuery select_query(const StrategyConfig& cfg, const SelectionState& st, Rng& rng) {
  validate(cfg);
  if (st.pool.empty()) throw SelectionError("candidate pool is empty");
  const auto survivors = downsample_pool(st.pool.size(), cfg.beta, rng);
  if (cfg.kind == StrategyKind::random) {
    std::uniform_int_distribution<std::size_t> pick(0, survivors.size() - 1);
    return st.pool[survivors[pick(rng)]];
  }
  std::size_t best = survivors.front();
  double best_u = strategy_utility(cfg, st.pool[best], st.batch);
  for (std::size_t i = 1; i < survivors.size(); ++i) {
    const std::size_t idx = survivors[i];
    const double u = strategy_utility(cfg, st.pool[idx], st.batch);
    if (better_candidate(u, st.pool[idx], best_u, st.pool[best])) {
      best = idx;
      best_u = u;
    }
  }
  return st.pool[best];
}

Vector top_eigenvector(const Matrix& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  if (es.info() != Eigen::Success) throw NumericError("eigen-decomposition failed");
  Vector v = es.eigenvectors().col(cov.rows() - 1);
  v.normalize();
  for (Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-12) {
      if (v(i) < 0.0) v = -v;
      break;
    }
  }
  return v;
}

PairQuery continuous_epmv_query(const PosteriorBatch& batch, double k) {
  if (batch.size() == 0) throw ArgumentError("empty posterior batch");
  if (!(k >= 0.0) || !std::isfinite(k)) throw ArgumentError("noise constant must be >= 0");
  const Vector a = top_eigenvector(batch.covariance());
  const Vector proj = batch.samples() * a;
  const double n = static_cast<double>(proj.size());
  const double tol = 0.5 / std::sqrt(n);

  if (k == 0.0) return pair_from_hyperplane(a, a.dot(batch.mean()), k);

  // p1(b) = mean f(-k (proj - b)) increases with b.
  auto p1 = [&](double b) {
    double s = 0.0;
    for (Index i = 0; i < proj.size(); ++i) s += logistic(-k * (proj(i) - b));
    return s / n;
  };
  const double pad = 40.0 / k;
  double lo = proj.minCoeff() - pad;
  double hi = proj.maxCoeff() + pad;
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(p1(lo) < 0.5) || !(p1(hi) > 0.5)) {
    throw SelectionError("equiprobable threshold could not be bracketed");
  }
  double b = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    b = 0.5 * (lo + hi);
    const double v = p1(b);
    if (std::abs(v - 0.5) <= tol * 1e-3 || hi - lo < 1e-14 * std::max(1.0, std::abs(b))) break;
    (v < 0.5 ? lo : hi) = b;
  }
  if (std::abs(p1(b) - 0.5) > tol) throw SelectionError("equiprobable bisection did not converge");
  return pair_from_hyperplane(a, b, k);
}

}  // namespace pairsearch
