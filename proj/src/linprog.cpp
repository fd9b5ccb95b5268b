#include "lsm/linprog.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace lsm {

namespace {

constexpr double kPivotEps = 1e-11;
constexpr double kCostEps = 1e-9;

class Simplex {
 public:
  Simplex(Matrix tableau, Vector rhs, std::vector<int> basis)
      : T_(std::move(tableau)), rhs_(std::move(rhs)), basis_(std::move(basis)) {}

  // Minimizes cost.x over the current feasible region.  `enterable[j]`
  // gates which columns may enter the basis.
  LpStatus run(const Vector& cost, const std::vector<bool>& enterable) {
    const int m = static_cast<int>(T_.rows());
    const int K = static_cast<int>(T_.cols());
    // reduced costs relative to the current basis
    Vector red = cost;
    for (int i = 0; i < m; ++i) {
      const double cb = cost(basis_[i]);
      if (cb != 0.0) red -= cb * T_.row(i).transpose();
    }
    double obj = 0.0;
    for (int i = 0; i < m; ++i) obj += cost(basis_[i]) * rhs_(i);

    const int stall_limit = 200 + 10 * m;
    const long max_iters = 2000 + 200L * (m + K);
    bool bland = false;
    int stall = 0;
    double last_obj = obj;

    for (long iter = 0; iter < max_iters; ++iter) {
      int enter = -1;
      if (!bland) {
        double best = -kCostEps;
        for (int j = 0; j < K; ++j)
          if (enterable[j] && red(j) < best) {
            best = red(j);
            enter = j;
          }
      } else {
        for (int j = 0; j < K; ++j)
          if (enterable[j] && red(j) < -kCostEps) {
            enter = j;
            break;
          }
      }
      if (enter < 0) {
        red_ = std::move(red);
        return LpStatus::optimal;
      }

      // ratio test; ties resolved by smallest basis variable index
      int leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) {
        const double a = T_(i, enter);
        if (a > kPivotEps) {
          const double ratio = rhs_(i) / a;
          if (ratio < best_ratio - 1e-12 ||
              (ratio < best_ratio + 1e-12 &&
               (leave < 0 || basis_[i] < basis_[leave]))) {
            best_ratio = ratio;
            leave = i;
          }
        }
      }
      if (leave < 0) return LpStatus::unbounded;

      pivot(leave, enter, red, obj);

      if (obj < last_obj - 1e-12 * (1.0 + std::abs(last_obj))) {
        stall = 0;
        last_obj = obj;
      } else if (++stall > stall_limit) {
        bland = true;
      }
    }
    throw std::runtime_error("lp: simplex iteration limit exceeded");
  }

  const Vector& rhs() const { return rhs_; }
  const std::vector<int>& basis() const { return basis_; }
  const Vector& reduced_costs() const { return red_; }
  const Matrix& tableau() const { return T_; }

  void pivot(int row, int col, Vector& red, double& obj) {
    const int m = static_cast<int>(T_.rows());
    const double piv = T_(row, col);
    T_.row(row) /= piv;
    rhs_(row) /= piv;
    for (int i = 0; i < m; ++i) {
      if (i == row) continue;
      const double f = T_(i, col);
      if (f != 0.0) {
        T_.row(i) -= f * T_.row(row);
        rhs_(i) -= f * rhs_(row);
        if (rhs_(i) < 0.0 && rhs_(i) > -1e-11) rhs_(i) = 0.0;
      }
    }
    const double fr = red(col);
    if (fr != 0.0) {
      red -= fr * T_.row(row).transpose();
      obj -= fr * rhs_(row);
    }
    basis_[row] = col;
  }

 private:
  Matrix T_;
  Vector rhs_;
  std::vector<int> basis_;
  Vector red_;
};

}  // namespace

LpSolution solve_lp_inequality(const Vector& c, const Matrix& A, const Vector& b) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  if (c.size() != n || b.size() != m)
    throw std::invalid_argument("lp: dimension mismatch");

  // standard form columns: x+ (n), x- (n), slack (m), artificials (appended)
  std::vector<int> art_rows;
  for (int i = 0; i < m; ++i)
    if (b(i) < 0.0) art_rows.push_back(i);
  const int n_art = static_cast<int>(art_rows.size());
  const int K = 2 * n + m + n_art;

  Matrix T = Matrix::Zero(m, K);
  Vector rhs = b;
  for (int i = 0; i < m; ++i) {
    const double sgn = b(i) < 0.0 ? -1.0 : 1.0;
    T.block(i, 0, 1, n) = sgn * A.row(i);
    T.block(i, n, 1, n) = -sgn * A.row(i);
    T(i, 2 * n + i) = sgn;  // slack
    rhs(i) = sgn * b(i);
  }
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = 2 * n + i;
  for (int k = 0; k < n_art; ++k) {
    T(art_rows[k], 2 * n + m + k) = 1.0;
    basis[art_rows[k]] = 2 * n + m + k;
  }

  Simplex simplex(std::move(T), std::move(rhs), std::move(basis));
  std::vector<bool> enterable(K, true);

  if (n_art > 0) {
    Vector phase1 = Vector::Zero(K);
    for (int k = 0; k < n_art; ++k) phase1(2 * n + m + k) = 1.0;
    const LpStatus st = simplex.run(phase1, enterable);
    double art_sum = 0.0;
    for (int i = 0; i < m; ++i)
      if (simplex.basis()[i] >= 2 * n + m) art_sum += simplex.rhs()(i);
    if (st != LpStatus::optimal || art_sum > 1e-7) {
      LpSolution sol;
      sol.status = LpStatus::infeasible;
      return sol;
    }
    // drive artificials out of the basis; rows that resist are redundant
    for (int i = 0; i < m; ++i) {
      if (simplex.basis()[i] < 2 * n + m) continue;
      for (int j = 0; j < 2 * n + m; ++j) {
        if (std::abs(simplex.tableau()(i, j)) > 1e-8) {
          Vector dummy = Vector::Zero(K);
          double dobj = 0.0;
          simplex.pivot(i, j, dummy, dobj);
          break;
        }
      }
    }
  }
  for (int k = 0; k < n_art; ++k) enterable[2 * n + m + k] = false;

  Vector phase2 = Vector::Zero(K);
  phase2.head(n) = c;
  phase2.segment(n, n) = -c;
  const LpStatus st = simplex.run(phase2, enterable);

  LpSolution sol;
  sol.status = st;
  if (st != LpStatus::optimal) return sol;

  sol.x = Vector::Zero(n);
  for (int i = 0; i < m; ++i) {
    const int v = simplex.basis()[i];
    if (v < n)
      sol.x(v) += simplex.rhs()(i);
    else if (v < 2 * n)
      sol.x(v - n) -= simplex.rhs()(i);
  }
  sol.objective = c.dot(sol.x);

  // alternative-optimum indicator: a nonbasic structural column pricing out
  // at zero (twin columns of basic free variables always do; skip them)
  std::vector<bool> is_basic(K, false);
  for (int i = 0; i < m; ++i) is_basic[simplex.basis()[i]] = true;
  for (int j = 0; j < 2 * n + m && !sol.degenerate; ++j) {
    if (is_basic[j]) continue;
    if (j < 2 * n && is_basic[j < n ? j + n : j - n]) continue;
    if (std::abs(simplex.reduced_costs()(j)) <= kCostEps) sol.degenerate = true;
  }
  return sol;
}

}  // namespace lsm
