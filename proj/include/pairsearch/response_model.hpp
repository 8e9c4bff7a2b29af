#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "pairsearch/common.hpp"
#include "pairsearch/numeric.hpp"

namespace pairsearch {

// How the per-pair noise constant depends on the pair geometry.
enum class NoiseScheme { constant, normalized, decaying };

std::string_view to_string(NoiseScheme s) noexcept;
NoiseScheme parse_noise_scheme(std::string_view s);

struct NoiseSchemeConfig {
  NoiseScheme scheme = NoiseScheme::constant;
  double k0 = 1.0;
};

/// k for a hyperplane with normal norm ||a||.
double noise_constant(const NoiseSchemeConfig& cfg, double normal_norm);

/// A paired comparison "p or q?" and its bisecting hyperplane a^T w = b,
/// with a = 2(p - q) and b = ||p||^2 - ||q||^2. Synthetic pairs (built from
/// an arbitrary hyperplane) carry no item indices.
struct PairQuery {
  Vector p;
  Vector q;
  Vector a;
  double b = 0.0;
  double k = 0.0;
  std::optional<Index> p_index;
  std::optional<Index> q_index;

  double normal_norm() const { return a.norm(); }
  /// a^T w - b; positive when w is closer to p.
  double margin(const Vector& w) const { return a.dot(w) - b; }
};

PairQuery make_pair(const Vector& p, const Vector& q, const NoiseSchemeConfig& cfg);
PairQuery make_indexed_pair(const Vector& p, const Vector& q, Index p_index, Index q_index,
                            const NoiseSchemeConfig& cfg);

/// Items p, q whose bisecting hyperplane is exactly (a, b), with an explicit
/// noise constant.
PairQuery pair_from_hyperplane(const Vector& a, double b, double k);

/// Probability that a user at w prefers p (response 0).
double response_probability(const Vector& w, const PairQuery& pq);

/// Probability of response `y` for a user at w.
double response_likelihood(const Vector& w, const PairQuery& pq, int y);

enum class NoiseFamily { logistic, gaussian };

std::string_view to_string(NoiseFamily f) noexcept;
NoiseFamily parse_noise_family(std::string_view s);

/// The simulated user: ground truth point plus the noise process it answers
/// with. The scheme here may differ from the one the estimator assumes.
struct OracleConfig {
  NoiseFamily noise_family = NoiseFamily::logistic;
  NoiseSchemeConfig scheme;
  Vector true_w;
  std::uint64_t seed = 0;
};

/// Response bit for the pair: 0 means p preferred, 1 means q preferred.
/// The oracle recomputes k from its own scheme; the pair's k is what the
/// estimator believes.
int simulate_response(const PairQuery& pq, const OracleConfig& oracle, Rng& rng);

}  // namespace pairsearch
