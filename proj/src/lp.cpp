#include "pairsearch/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace pairsearch {

namespace {

class Tableau {
 public:
  // rows 0..m-1 are constraints, row m is the objective (z - c^T x = 0 form:
  // a negative entry means the column improves the objective).
  Tableau(Index rows, Index cols) : t_(Matrix::Zero(rows + 1, cols + 1)), basis_(rows, -1) {}

  Matrix& t() { return t_; }
  std::vector<Index>& basis() { return basis_; }
  Index rows() const { return t_.rows() - 1; }
  Index cols() const { return t_.cols() - 1; }
  double& rhs(Index r) { return t_(r, t_.cols() - 1); }

  void pivot(Index r, Index c) {
    t_.row(r) /= t_(r, c);
    for (Index i = 0; i < t_.rows(); ++i) {
      if (i != r && t_(i, c) != 0.0) t_.row(i) -= t_(i, c) * t_.row(r);
    }
    basis_[static_cast<std::size_t>(r)] = c;
  }

  // Returns false when the objective is unbounded along some column.
  bool optimize(Index allowed_cols, double eps) {
    const Index m = rows();
    for (int guard = 0; guard < 100000; ++guard) {
      Index enter = -1;
      for (Index j = 0; j < allowed_cols; ++j) {
        if (t_(m, j) < -eps) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      Index leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < m; ++i) {
        if (t_(i, enter) > eps) {
          const double ratio = rhs(i) / t_(i, enter);
          if (ratio < best_ratio - eps ||
              (std::abs(ratio - best_ratio) <= eps && leave >= 0 &&
               basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
            best_ratio = ratio;
            leave = i;
          }
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
    throw NumericError("simplex iteration limit reached");
  }

 private:
  Matrix t_;
  std::vector<Index> basis_;
};

}  // namespace

LpResult solve_lp(const Matrix& A, const Vector& b, const Vector& c, double eps) {
  const Index m = A.rows();
  const Index n = A.cols();
  if (b.size() != m || c.size() != n) throw ArgumentError("LP dimensions disagree");
  if (!A.allFinite() || !b.allFinite() || !c.allFinite()) throw ArgumentError("LP has non-finite data");

  Index n_art = 0;
  for (Index i = 0; i < m; ++i) n_art += b(i) < 0.0;
  // Columns: x (n) | slack (m) | artificial (n_art)
  const Index slack0 = n, art0 = n + m;
  Tableau tab(m, n + m + n_art);
  Matrix& t = tab.t();
  Index art = 0;
  for (Index i = 0; i < m; ++i) {
    const double sign = b(i) < 0.0 ? -1.0 : 1.0;
    t.block(i, 0, 1, n) = sign * A.row(i);
    t(i, slack0 + i) = sign;
    tab.rhs(i) = sign * b(i);
    if (sign < 0.0) {
      t(i, art0 + art) = 1.0;
      tab.basis()[static_cast<std::size_t>(i)] = art0 + art;
      ++art;
    } else {
      tab.basis()[static_cast<std::size_t>(i)] = slack0 + i;
    }
  }

  if (n_art > 0) {
    // Phase 1: maximize -sum(artificials).
    for (Index j = art0; j < art0 + n_art; ++j) t(m, j) = 1.0;
    for (Index i = 0; i < m; ++i) {
      if (tab.basis()[static_cast<std::size_t>(i)] >= art0) t.row(m) -= t.row(i);
    }
    tab.optimize(n + m + n_art, eps);
    if (tab.rhs(m) < -eps * std::max(1.0, b.cwiseAbs().maxCoeff())) return {LpStatus::infeasible, {}, 0.0};
    // Drive zero-level artificials out of the basis where possible.
    for (Index i = 0; i < m; ++i) {
      if (tab.basis()[static_cast<std::size_t>(i)] < art0) continue;
      for (Index j = 0; j < art0; ++j) {
        if (std::abs(t(i, j)) > eps) {
          tab.pivot(i, j);
          break;
        }
      }
    }
  }

  // Phase 2.
  t.row(m).setZero();
  for (Index j = 0; j < n; ++j) t(m, j) = -c(j);
  for (Index i = 0; i < m; ++i) {
    const Index col = tab.basis()[static_cast<std::size_t>(i)];
    if (t(m, col) != 0.0) t.row(m) -= t(m, col) * t.row(i);
  }
  if (!tab.optimize(art0, eps)) return {LpStatus::unbounded, {}, 0.0};

  LpResult res;
  res.status = LpStatus::optimal;
  res.x = Vector::Zero(n);
  for (Index i = 0; i < m; ++i) {
    const Index col = tab.basis()[static_cast<std::size_t>(i)];
    if (col < n) res.x(col) = tab.rhs(i);
  }
  res.objective = c.dot(res.x);
  return res;
}

}  // namespace pairsearch
