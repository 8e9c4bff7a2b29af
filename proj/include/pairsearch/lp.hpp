#pragma once

#include "pairsearch/common.hpp"

namespace pairsearch {

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  Vector x;
  double objective = 0.0;
};

/// maximize c^T x  subject to  A x <= b,  x >= 0.
///
/// Dense two-phase tableau simplex with Bland's rule, so it always
/// terminates. Meant for the small programs the baselines build (a few
/// dozen variables, a few hundred rows).
LpResult solve_lp(const Matrix& A, const Vector& b, const Vector& c, double eps = 1e-9);

}  // namespace pairsearch
