#pragma once

#include <span>
#include <vector>

#include "pairsearch/common.hpp"
#include "pairsearch/numeric.hpp"
#include "pairsearch/response_model.hpp"

namespace pairsearch {

/// normal^T w <= offset
struct Halfspace {
  Vector normal;
  double offset = 0.0;
};

/// Feasible region of user points: a bounding box [-r, r]^d plus cuts.
class Polytope {
 public:
  static Polytope box(Index dim, double half_width);

  Index dim() const noexcept { return dim_; }
  double half_width() const noexcept { return half_width_; }
  /// Box rows first (2d of them), then cuts in insertion order.
  const std::vector<Halfspace>& constraints() const noexcept { return constraints_; }
  std::size_t cut_count() const noexcept { return constraints_.size() - 2 * static_cast<std::size_t>(dim_); }

  Polytope with(Halfspace h) const;
  bool contains(const Vector& w, double tol = 1e-12) const;

 private:
  Index dim_ = 0;
  double half_width_ = 1.0;
  std::vector<Halfspace> constraints_;
};

struct ChebyshevBall {
  bool feasible = false;
  Vector center;
  double radius = 0.0;
};

inline constexpr double kEmptyRadius = 1e-9;

/// Largest inscribed ball via the LP  max r  s.t.  n_i^T c + r ||n_i|| <= o_i.
/// feasible == false when the constraints admit no point at all.
ChebyshevBall chebyshev_center(const Polytope& poly);

/// Halfspace that a response to `pq` implies: response 0 (p preferred)
/// keeps a^T w >= b, response 1 keeps a^T w <= b.
Halfspace response_halfspace(const PairQuery& pq, int response);

/// Does the pair's bisecting hyperplane split the polytope's interior?
/// Two feasibility LPs, one per side.
bool hyperplane_intersects(const Polytope& poly, const PairQuery& pq);

/// A uniformly random pool pair whose hyperplane crosses the polytope, or a
/// uniformly random pool pair when none does.
const PairQuery& actrank_select(const Polytope& poly, std::span<const PairQuery> pool, Rng& rng);

/// Adds the response cut. If the result has no interior (radius <= 1e-9 or
/// infeasible) the cut is dropped and the input polytope is returned.
Polytope actrank_update(const Polytope& poly, const PairQuery& pq, int majority_response);

/// Majority of an odd number of responses.
int majority_vote(std::span<const int> responses);

/// Dyadically shrinking Gaussian cloud around the current estimate.
struct GaussCloudState {
  int stage = 0;
  int stages_total = 1;
  int queries_per_stage = 1;
  int calls_in_stage = 0;
  Vector current_center;
  double initial_scale = 1.0;
  double stage_scale = 1.0;
};

GaussCloudState make_gausscloud_state(Index dim, int stages_total, int total_queries,
                                      double initial_scale);

/// Draws a target t ~ N(center, scale^2 I) and returns the pool pair whose
/// hyperplane passes closest to t (ties: lowest index pair). Advances the
/// stage every queries_per_stage calls, halving the scale.
const PairQuery& gausscloud_select(GaussCloudState& state, std::span<const PairQuery> pool, Rng& rng);

/// Inscribed-ball estimate that tolerates contradictory cuts: maximize
/// r - sum(slack) with each response cut relaxed by its own slack and the
/// box kept hard.
Vector soft_chebyshev_center(const Polytope& box, std::span<const Halfspace> cuts);

}  // namespace pairsearch
