#include <doctest.h>

#include <cmath>
#include <random>

#include "pairsearch/response_model.hpp"
#include "test_util.hpp"

using namespace pairsearch;
using testutil::vec;

namespace {
double logistic_oracle(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

TEST_CASE("make_pair builds the bisecting hyperplane") {
  const NoiseSchemeConfig k1{NoiseScheme::constant, 1.0};
  const PairQuery pq = make_pair(vec({1, 0}), vec({-1, 0}), k1);
  CHECK(pq.a(0) == 4.0);
  CHECK(pq.a(1) == 0.0);
  CHECK(pq.b == 0.0);
  CHECK(pq.k == 1.0);
  CHECK_FALSE(pq.p_index.has_value());
}

TEST_CASE("noise schemes set k from the normal length") {
  const PairQuery k2 = make_pair(vec({1, 0}), vec({0, 0}), {NoiseScheme::normalized, 2.0});
  CHECK(k2.normal_norm() == doctest::Approx(2.0));
  CHECK(k2.k == doctest::Approx(1.0));
  const PairQuery k3 = make_pair(vec({1, 0}), vec({0, 0}), {NoiseScheme::decaying, 2.0});
  CHECK(k3.k == doctest::Approx(2.0 * std::exp(-2.0)));
  CHECK(parse_noise_scheme("K2") == NoiseScheme::normalized);
  CHECK(parse_noise_scheme("decaying") == NoiseScheme::decaying);
  CHECK_THROWS_AS(parse_noise_scheme("K9"), ArgumentError);
}

TEST_CASE("coincident items are rejected") {
  CHECK_THROWS_AS(make_pair(vec({1, 2}), vec({1, 2}), {}), DegenerateError);
}

TEST_CASE("response probability examples") {
  const NoiseSchemeConfig k1{NoiseScheme::constant, 1.0};
  const PairQuery pq = make_pair(vec({1, 0}), vec({-1, 0}), k1);
  CHECK(response_probability(vec({0, 3}), pq) == doctest::Approx(0.5));
  CHECK(response_probability(vec({1, 0}), pq) == doctest::Approx(0.98201).epsilon(1e-5));
  const PairQuery k0 = make_pair(vec({1, 0}), vec({-1, 0}), {NoiseScheme::constant, 0.0});
  CHECK(response_probability(vec({0.3, -0.8}), k0) == 0.5);
  CHECK(response_likelihood(vec({1, 0}), pq, 1) == doctest::Approx(1.0 - 0.98201).epsilon(1e-4));
}

TEST_CASE("pair order antisymmetry and the distance form agree") {
  Rng rng(5);
  std::uniform_real_distribution<double> kd(0.0, 5.0);
  for (int t = 0; t < 1000; ++t) {
    const Vector w = testutil::uniform_vector(3, -1, 1, rng);
    const Vector p = testutil::uniform_vector(3, -1, 1, rng);
    const Vector q = testutil::uniform_vector(3, -1, 1, rng);
    const double k0 = kd(rng);
    for (NoiseScheme s : {NoiseScheme::constant, NoiseScheme::normalized, NoiseScheme::decaying}) {
      const PairQuery pq = make_pair(p, q, {s, k0});
      const PairQuery qp = make_pair(q, p, {s, k0});
      CHECK(response_probability(w, pq) + response_probability(w, qp) == doctest::Approx(1.0).epsilon(1e-9));
      const double dist_form = logistic_oracle(pq.k * ((w - q).squaredNorm() - (w - p).squaredNorm()));
      CHECK(std::abs(response_probability(w, pq) - dist_form) < 1e-9);
    }
  }
}

TEST_CASE("response probability is monotone in the margin") {
  const PairQuery pq = make_pair(vec({0.5, 0.2}), vec({-0.3, 0.1}), {NoiseScheme::constant, 3.0});
  const Vector dir = pq.a.normalized();
  double prev = 0.0;
  for (double t = -2.0; t <= 2.0; t += 0.05) {
    const double p = response_probability(dir * t, pq);
    CHECK(p >= prev);
    prev = p;
  }
}

TEST_CASE("hyperplane pairs reproduce the requested hyperplane") {
  const Vector a = vec({0.6, -0.8});
  const PairQuery pq = pair_from_hyperplane(a, 0.25, 7.0);
  CHECK((pq.a - a).norm() < 1e-12);
  CHECK(pq.b == doctest::Approx(0.25));
  CHECK(pq.k == 7.0);
}

TEST_CASE("simulated responses follow the model frequencies") {
  const int n = 10000;
  SUBCASE("k = 0 is a fair coin") {
    const PairQuery pq = make_pair(vec({1, 0}), vec({-1, 0}), {NoiseScheme::constant, 0.0});
    OracleConfig o{NoiseFamily::logistic, {NoiseScheme::constant, 0.0}, vec({0.7, 0.1}), 0};
    Rng rng(11);
    int ones = 0;
    for (int i = 0; i < n; ++i) ones += simulate_response(pq, o, rng);
    CHECK(std::abs(ones / double(n) - 0.5) <= 0.015);
  }
  SUBCASE("gaussian oracle on the hyperplane is a fair coin") {
    const PairQuery pq = make_pair(vec({1, 0}), vec({-1, 0}), {NoiseScheme::constant, 5.0});
    OracleConfig o{NoiseFamily::gaussian, {NoiseScheme::constant, 5.0}, vec({0.0, 0.4}), 0};
    Rng rng(12);
    int ones = 0;
    for (int i = 0; i < n; ++i) ones += simulate_response(pq, o, rng);
    CHECK(std::abs(ones / double(n) - 0.5) <= 0.015);
  }
  SUBCASE("signal 4 gives about 0.982 for p") {
    const PairQuery pq = make_pair(vec({1, 0}), vec({-1, 0}), {NoiseScheme::constant, 1.0});
    OracleConfig o{NoiseFamily::logistic, {NoiseScheme::constant, 1.0}, vec({1, 0}), 0};
    Rng rng(13);
    int zeros = 0;
    for (int i = 0; i < n; ++i) zeros += simulate_response(pq, o, rng) == 0;
    CHECK(std::abs(zeros / double(n) - logistic_oracle(4.0)) <= 0.004);
  }
  SUBCASE("the oracle uses its own noise scheme") {
    // The estimator believes k = 0 but the user answers almost noiselessly.
    const PairQuery pq = make_pair(vec({1, 0}), vec({-1, 0}), {NoiseScheme::constant, 0.0});
    OracleConfig o{NoiseFamily::logistic, {NoiseScheme::constant, 100.0}, vec({0.5, 0}), 0};
    Rng rng(14);
    int zeros = 0;
    for (int i = 0; i < 1000; ++i) zeros += simulate_response(pq, o, rng) == 0;
    CHECK(zeros == 1000);
  }
}
