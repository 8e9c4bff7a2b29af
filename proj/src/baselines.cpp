#include "pairsearch/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "pairsearch/lp.hpp"

namespace pairsearch {

Polytope Polytope::box(Index dim, double half_width) {
  if (dim < 1 || !(half_width > 0.0)) throw ArgumentError("invalid box");
  Polytope p;
  p.dim_ = dim;
  p.half_width_ = half_width;
  for (Index i = 0; i < dim; ++i) {
    for (double sign : {1.0, -1.0}) {
      Vector n = Vector::Zero(dim);
      n(i) = sign;
      p.constraints_.push_back({std::move(n), half_width});
    }
  }
  return p;
}

Polytope Polytope::with(Halfspace h) const {
  if (h.normal.size() != dim_) throw ArgumentError("halfspace dimension mismatch");
  if (!h.normal.allFinite() || !std::isfinite(h.offset)) throw ArgumentError("non-finite halfspace");
  Polytope p = *this;
  p.constraints_.push_back(std::move(h));
  return p;
}

bool Polytope::contains(const Vector& w, double tol) const {
  return std::all_of(constraints_.begin(), constraints_.end(),
                     [&](const Halfspace& h) { return h.normal.dot(w) <= h.offset + tol; });
}

ChebyshevBall chebyshev_center(const Polytope& poly) {
  const Index d = poly.dim();
  const auto& cons = poly.constraints();
  const auto m = static_cast<Index>(cons.size());
  // Variables: c+ (d), c- (d), r. Rows normalized by ||n_i||.
  Matrix A = Matrix::Zero(m, 2 * d + 1);
  Vector b(m);
  for (Index i = 0; i < m; ++i) {
    const auto& h = cons[static_cast<std::size_t>(i)];
    const double norm = h.normal.norm();
    if (norm <= 0.0) {
      if (h.offset < 0.0) return {};
      A(i, 2 * d) = 0.0;
      b(i) = 1.0;
      continue;
    }
    A.block(i, 0, 1, d) = h.normal.transpose() / norm;
    A.block(i, d, 1, d) = -h.normal.transpose() / norm;
    A(i, 2 * d) = 1.0;
    b(i) = h.offset / norm;
  }
  Vector c = Vector::Zero(2 * d + 1);
  c(2 * d) = 1.0;
  const LpResult res = solve_lp(A, b, c);
  if (res.status == LpStatus::infeasible) return {};
  if (res.status == LpStatus::unbounded) throw NumericError("Chebyshev LP unbounded; box missing?");
  ChebyshevBall ball;
  ball.feasible = true;
  ball.center = res.x.head(d) - res.x.segment(d, d);
  ball.radius = res.x(2 * d);
  return ball;
}

Halfspace response_halfspace(const PairQuery& pq, int response) {
  if (response == 0) return {-pq.a, -pq.b};
  return {pq.a, pq.b};
}

bool hyperplane_intersects(const Polytope& poly, const PairQuery& pq) {
  for (int side : {0, 1}) {
    const ChebyshevBall ball = chebyshev_center(poly.with(response_halfspace(pq, side)));
    if (!ball.feasible || ball.radius <= kEmptyRadius) return false;
  }
  return true;
}

const PairQuery& actrank_select(const Polytope& poly, std::span<const PairQuery> pool, Rng& rng) {
  if (pool.empty()) throw SelectionError("candidate pool is empty");
  // Scanning a uniformly shuffled order and keeping the first hit picks
  // uniformly among intersecting pairs without testing all of them.
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  const ChebyshevBall ball = chebyshev_center(poly);
  for (std::size_t idx : order) {
    const PairQuery& pq = pool[idx];
    // The inscribed ball straddling the hyperplane already proves both sides.
    if (ball.feasible && std::abs(pq.margin(ball.center)) / pq.a.norm() < ball.radius - 1e-9) return pq;
    if (hyperplane_intersects(poly, pq)) return pq;
  }
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  return pool[pick(rng)];
}

Polytope actrank_update(const Polytope& poly, const PairQuery& pq, int majority_response) {
  Polytope next = poly.with(response_halfspace(pq, majority_response));
  const ChebyshevBall ball = chebyshev_center(next);
  if (!ball.feasible || ball.radius <= kEmptyRadius) return poly;
  return next;
}

int majority_vote(std::span<const int> responses) {
  if (responses.empty() || responses.size() % 2 == 0) {
    throw ArgumentError("majority vote needs an odd number of responses");
  }
  std::size_t ones = 0;
  for (int r : responses) ones += r == 1;
  return 2 * ones > responses.size() ? 1 : 0;
}

GaussCloudState make_gausscloud_state(Index dim, int stages_total, int total_queries,
                                      double initial_scale) {
  if (stages_total < 1 || total_queries < 1) throw ArgumentError("invalid GaussCloud schedule");
  GaussCloudState s;
  s.stages_total = stages_total;
  s.queries_per_stage = (total_queries + stages_total - 1) / stages_total;
  s.current_center = Vector::Zero(dim);
  s.initial_scale = initial_scale;
  s.stage_scale = initial_scale;
  return s;
}

const PairQuery& gausscloud_select(GaussCloudState& state, std::span<const PairQuery> pool, Rng& rng) {
  if (pool.empty()) throw SelectionError("candidate pool is empty");
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector target = state.current_center;
  for (Index i = 0; i < target.size(); ++i) target(i) += state.stage_scale * normal(rng);
  std::size_t best = 0;
  double best_dist = std::abs(pool[0].margin(target)) / pool[0].a.norm();
  for (std::size_t i = 1; i < pool.size(); ++i) {
    const double dist = std::abs(pool[i].margin(target)) / pool[i].a.norm();
    const PairQuery& cand = pool[i];
    const PairQuery& cur = pool[best];
    if (dist < best_dist ||
        (dist == best_dist &&
         std::pair(cand.p_index.value_or(-1), cand.q_index.value_or(-1)) <
             std::pair(cur.p_index.value_or(-1), cur.q_index.value_or(-1)))) {
      best = i;
      best_dist = dist;
    }
  }
  if (++state.calls_in_stage == state.queries_per_stage) {
    state.calls_in_stage = 0;
    ++state.stage;
    state.stage_scale = state.initial_scale * std::ldexp(1.0, -state.stage);
  }
  return pool[best];
}

Vector soft_chebyshev_center(const Polytope& box, std::span<const Halfspace> cuts) {
  const Index d = box.dim();
  const auto& hard = box.constraints();
  const auto n_hard = static_cast<Index>(hard.size());
  const auto n_cut = static_cast<Index>(cuts.size());
  // Variables: c+ (d), c- (d), r, slack (n_cut).
  const Index nv = 2 * d + 1 + n_cut;
  Matrix A = Matrix::Zero(n_hard + n_cut, nv);
  Vector b(n_hard + n_cut);
  auto fill = [&](Index row, const Halfspace& h, Index slack_col) {
    const double norm = h.normal.norm();
    A.block(row, 0, 1, d) = h.normal.transpose() / norm;
    A.block(row, d, 1, d) = -h.normal.transpose() / norm;
    A(row, 2 * d) = 1.0;
    if (slack_col >= 0) A(row, slack_col) = -1.0;
    b(row) = h.offset / norm;
  };
  for (Index i = 0; i < n_hard; ++i) fill(i, hard[static_cast<std::size_t>(i)], -1);
  for (Index i = 0; i < n_cut; ++i) fill(n_hard + i, cuts[static_cast<std::size_t>(i)], 2 * d + 1 + i);
  Vector c = Vector::Zero(nv);
  c(2 * d) = 1.0;
  c.tail(n_cut).setConstant(-1.0);
  const LpResult res = solve_lp(A, b, c);
  if (res.status != LpStatus::optimal) throw NumericError("soft Chebyshev LP failed");
  return res.x.head(d) - res.x.segment(d, d);
}

}  // namespace pairsearch
