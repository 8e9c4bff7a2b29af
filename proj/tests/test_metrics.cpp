#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "oracles.hpp"
#include "pairsearch/metrics.hpp"
#include "test_util.hpp"

using namespace pairsearch;
using testutil::vec;

TEST_CASE("mse") {
  CHECK(mse(vec({0.3, 0.4}), vec({0.3, 0.4})) == 0.0);
  CHECK(mse(vec({1, 0}), vec({0, 0})) == 1.0);
  Rng rng(1);
  const Vector a = testutil::uniform_vector(5, -2, 2, rng), b = testutil::uniform_vector(5, -2, 2, rng);
  double sum = 0.0;
  for (Index i = 0; i < 5; ++i) sum += (a(i) - b(i)) * (a(i) - b(i));
  CHECK(mse(a, b) == doctest::Approx(sum).epsilon(1e-14));
  CHECK_THROWS_AS(mse(vec({1, 2}), vec({1, 2, 3})), ArgumentError);
}

TEST_CASE("kendall tau examples") {
  std::vector<Index> id(15);
  std::iota(id.begin(), id.end(), Index{0});
  std::vector<Index> rev(id.rbegin(), id.rend());
  std::vector<Index> swap = id;
  std::swap(swap[6], swap[7]);
  CHECK(kendall_tau_normalized(id, id) == 0.0);
  CHECK(kendall_tau_normalized(id, rev) == 1.0);
  CHECK(kendall_tau_normalized(id, swap) == doctest::Approx(1.0 / 105.0));
  std::vector<Index> bad{0, 1, 1};
  std::vector<Index> ok{0, 1, 2};
  CHECK_THROWS_AS(kendall_tau_normalized(ok, bad), ArgumentError);
}

TEST_CASE("kendall tau matches the quadratic count on random permutations") {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    std::vector<Index> a(40), b(40);
    std::iota(a.begin(), a.end(), Index{0});
    std::iota(b.begin(), b.end(), Index{0});
    std::shuffle(a.begin(), a.end(), rng);
    std::shuffle(b.begin(), b.end(), rng);
    CHECK(kendall_tau_normalized(a, b) == doctest::Approx(oracle::kendall_brute(a, b)).epsilon(1e-14));
  }
}

TEST_CASE("ranking metric") {
  RowMatrix x(4, 2);
  x << 0, 0, 1, 0, 2, 0, 3, 0;
  const Embedding e = make_embedding(x);
  Rng rng(3);
  CHECK(ranking_metric(vec({0.2, 0.1}), vec({0.2, 0.1}), e, 4, 5, rng) == 0.0);
  // From the far left the order is 0 1 2 3; from far right it is reversed.
  CHECK(ranking_metric(vec({-10, 0}), vec({10, 0}), e, 4, 3, rng) == 1.0);
  // Hand count: from (1.6, 0) the order is 2 1 3 0, which disagrees with
  // 0 1 2 3 on (0,1) (0,2) (0,3) (1,2): 4 of 6 pairs. Batches of all four
  // items give that value every time.
  CHECK(ranking_metric(vec({0, 0}), vec({1.6, 0}), e, 4, 3, rng) == doctest::Approx(4.0 / 6.0));
  CHECK_THROWS_AS(ranking_metric(vec({0, 0}), vec({1, 0}), e, 5, 1, rng), ArgumentError);
}

TEST_CASE("rank by distance breaks ties by id") {
  RowMatrix x(3, 2);
  x << 1, 0, -1, 0, 0, 2;
  const Embedding e = make_embedding(x);
  std::vector<Index> items{2, 1, 0};
  const auto r = rank_by_distance(e, items, vec({0, 0}));
  CHECK(r == std::vector<Index>{0, 1, 2});
}
