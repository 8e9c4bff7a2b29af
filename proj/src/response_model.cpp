#include "pairsearch/response_model.hpp"

#include <cmath>
#include <random>

namespace pairsearch {

std::string_view to_string(NoiseScheme s) noexcept {
  switch (s) {
    case NoiseScheme::constant: return "constant";
    case NoiseScheme::normalized: return "normalized";
    case NoiseScheme::decaying: return "decaying";
  }
  return "constant";
}

NoiseScheme parse_noise_scheme(std::string_view s) {
  if (s == "constant" || s == "K1") return NoiseScheme::constant;
  if (s == "normalized" || s == "K2") return NoiseScheme::normalized;
  if (s == "decaying" || s == "K3") return NoiseScheme::decaying;
  throw ArgumentError("unknown noise scheme '" + std::string(s) + "'");
}

std::string_view to_string(NoiseFamily f) noexcept {
  return f == NoiseFamily::logistic ? "logistic" : "gaussian";
}

NoiseFamily parse_noise_family(std::string_view s) {
  if (s == "logistic") return NoiseFamily::logistic;
  if (s == "gaussian") return NoiseFamily::gaussian;
  throw ArgumentError("unknown noise family '" + std::string(s) + "'");
}

double noise_constant(const NoiseSchemeConfig& cfg, double normal_norm) {
  if (!std::isfinite(cfg.k0) || cfg.k0 < 0.0) throw ArgumentError("k0 must be finite and >= 0");
  switch (cfg.scheme) {
    case NoiseScheme::constant: return cfg.k0;
    case NoiseScheme::normalized: return cfg.k0 / normal_norm;
    case NoiseScheme::decaying: return cfg.k0 * std::exp(-normal_norm);
  }
  return cfg.k0;
}

PairQuery make_pair(const Vector& p, const Vector& q, const NoiseSchemeConfig& cfg) {
  if (p.size() != q.size()) throw ArgumentError("pair items differ in dimension");
  if ((p - q).cwiseAbs().maxCoeff() <= 1e-12) throw DegenerateError("degenerate pair: p == q");
  PairQuery pq;
  pq.p = p;
  pq.q = q;
  pq.a = 2.0 * (p - q);
  pq.b = p.squaredNorm() - q.squaredNorm();
  pq.k = noise_constant(cfg, pq.a.norm());
  return pq;
}

PairQuery make_indexed_pair(const Vector& p, const Vector& q, Index p_index, Index q_index,
                            const NoiseSchemeConfig& cfg) {
  PairQuery pq = make_pair(p, q, cfg);
  pq.p_index = p_index;
  pq.q_index = q_index;
  return pq;
}

PairQuery pair_from_hyperplane(const Vector& a, double b, double k) {
  const double nn = a.squaredNorm();
  if (nn <= 0.0) throw DegenerateError("hyperplane normal is zero");
  // p - q = a/2 and (p - q).(p + q) = b with p + q = 2 a b / ||a||^2.
  const Vector mid = a * (b / nn);
  PairQuery pq;
  pq.p = mid + 0.25 * a;
  pq.q = mid - 0.25 * a;
  pq.a = a;
  pq.b = b;
  pq.k = k;
  return pq;
}

double response_probability(const Vector& w, const PairQuery& pq) {
  return logistic(pq.k * pq.margin(w));
}

double response_likelihood(const Vector& w, const PairQuery& pq, int y) {
  const double z = pq.k * pq.margin(w);
  return y == 0 ? logistic(z) : logistic(-z);
}

int simulate_response(const PairQuery& pq, const OracleConfig& oracle, Rng& rng) {
  const double k = noise_constant(oracle.scheme, pq.a.norm());
  const double signal = k * pq.margin(oracle.true_w);
  if (oracle.noise_family == NoiseFamily::logistic) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return u(rng) < logistic(signal) ? 0 : 1;
  }
  std::normal_distribution<double> z(0.0, 1.0);
  return signal + z(rng) < 0.0 ? 1 : 0;
}

}  // namespace pairsearch
