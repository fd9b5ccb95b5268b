#include "lsm/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "lsm/linprog.hpp"
#include "lsm/parallel.hpp"
#include "lsm/rng.hpp"

namespace lsm {

LadResult lad_regression(const Matrix& X_sub, const Vector& y_sub) {
  const int n = static_cast<int>(X_sub.rows());
  const int k = static_cast<int>(X_sub.cols());
  if (k < 1) throw std::invalid_argument("lad_regression: empty mode");
  if (y_sub.size() != k)
    throw std::invalid_argument("lad_regression: dimension mismatch");

  // variables (a, e); constraints  X^T a - e <= y,  -X^T a - e <= -y
  const int nv = n + k;
  Vector c = Vector::Zero(nv);
  c.tail(k).setOnes();
  Matrix A = Matrix::Zero(2 * k, nv);
  Vector b(2 * k);
  A.block(0, 0, k, n) = X_sub.transpose();
  A.block(k, 0, k, n) = -X_sub.transpose();
  A.block(0, n, k, k) = -Matrix::Identity(k, k);
  A.block(k, n, k, k) = -Matrix::Identity(k, k);
  b.head(k) = y_sub;
  b.tail(k) = -y_sub;

  const LpSolution sol = solve_lp_inequality(c, A, b);
  if (sol.status != LpStatus::optimal)
    throw std::runtime_error("lad_regression: LP solve failed");
  LadResult out;
  out.a = sol.x.head(n);
  out.objective = (y_sub - X_sub.transpose() * out.a).lpNorm<1>();
  out.degenerate = sol.degenerate;
  return out;
}

namespace {

void subset_view(const Dataset& data, const std::vector<int>& idx,
                 Matrix* X_sub, Vector* y_sub) {
  const int n = data.n();
  X_sub->resize(n, idx.size());
  y_sub->resize(idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    X_sub->col(j) = data.X.col(idx[j]);
    (*y_sub)(j) = data.y(idx[j]);
  }
}

// Column that interpolates sample t exactly (minimum-norm choice).
Vector interpolation_column(const Dataset& data, int t) {
  const Vector x = data.X.col(t);
  const double q = x.squaredNorm();
  if (q < 1e-300) return Vector::Zero(data.n());
  return x * (data.y(t) / q);
}

struct RestartOutcome {
  Matrix A;
  double cost = std::numeric_limits<double>::infinity();
  SolverStatus status = SolverStatus::iter_limit;
  std::vector<double> trajectory;
  bool degenerate_lad = false;
};

RestartOutcome run_restart(const Dataset& data, int s, const EstimatorConfig& cfg,
                           std::uint64_t seed) {
  const int N = data.N();
  const int n = data.n();
  Rng rng = Rng::derived(seed, 0);
  RestartOutcome out;

  // initialize from a LAD fit of a random partition into s balanced blocks
  const std::vector<int> perm = rng.permutation(N);
  Matrix A(n, s);
  {
    int pos = 0;
    for (int i = 0; i < s; ++i) {
      const int size = N / s + (i < N % s ? 1 : 0);
      std::vector<int> block(perm.begin() + pos, perm.begin() + pos + size);
      pos += size;
      Matrix Xb;
      Vector yb;
      subset_view(data, block, &Xb, &yb);
      A.col(i) = lad_regression(Xb, yb).a;
    }
  }

  double prev_cost = std::numeric_limits<double>::infinity();
  double lad_bound = std::numeric_limits<double>::infinity();
  Matrix best_A = A;
  double best_cost = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    const AssignmentResult asg = canonical_assignment(data, A, cfg.tie_tol);
    // the assignment step can only tighten the bound left by the LAD step
    // (slack covers LP accuracy and tie-tolerance label choices)
    const double slack =
        (1e-8 + 2.0 * N * cfg.tie_tol) * (1.0 + std::abs(lad_bound));
    if (std::isfinite(lad_bound) && asg.cost > lad_bound + slack)
      throw std::logic_error("lsm_alternating: assignment step increased cost");
    out.trajectory.push_back(asg.cost);
    if (asg.cost < best_cost) {
      best_cost = asg.cost;
      best_A = A;
    }
    if (prev_cost - asg.cost < cfg.cost_tol) {
      out.status = SolverStatus::converged;
      break;
    }
    prev_cost = asg.cost;

    double lad_total = 0.0;
    for (int i = 0; i < s; ++i) {
      if (asg.partition[i].empty()) {
        int t_seed;
        if (cfg.empty_mode_policy == EstimatorConfig::EmptyModePolicy::reseed_worst_residual) {
          t_seed = 0;
          for (int t = 1; t < N; ++t)
            if (std::abs(asg.phi(t)) > std::abs(asg.phi(t_seed))) t_seed = t;
        } else {
          t_seed = static_cast<int>(rng.uniform_int(N));
        }
        A.col(i) = interpolation_column(data, t_seed);
        continue;
      }
      Matrix Xb;
      Vector yb;
      subset_view(data, asg.partition[i], &Xb, &yb);
      const LadResult fit = lad_regression(Xb, yb);
      out.degenerate_lad = out.degenerate_lad || fit.degenerate;
      A.col(i) = fit.a;
      lad_total += fit.objective;
    }
    if (lad_total > asg.cost + 1e-8 * (1.0 + asg.cost))
      throw std::logic_error("lsm_alternating: LAD step increased cost");
    lad_bound = lad_total;
  }

  // the last refit may have improved past the recorded assignments
  const double final_cost = cost(data, A);
  if (final_cost < best_cost) {
    best_cost = final_cost;
    best_A = A;
  }
  out.A = best_A;
  out.cost = best_cost;
  return out;
}

// Canonical column order so duplicate optima can be recognized.
Matrix sort_columns(const Matrix& A) {
  const int s = static_cast<int>(A.cols());
  std::vector<int> order(s);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    for (int r = 0; r < A.rows(); ++r) {
      if (A(r, i) < A(r, j) - 1e-12) return true;
      if (A(r, i) > A(r, j) + 1e-12) return false;
    }
    return i < j;
  });
  Matrix out(A.rows(), s);
  for (int i = 0; i < s; ++i) out.col(i) = A.col(order[i]);
  return out;
}

void collect_optimum(std::vector<Matrix>* optima, const Matrix& A, double scale) {
  const Matrix canon = sort_columns(A);
  for (const Matrix& kept : *optima)
    if (matched_column_distance(kept, canon) <= 1e-8 * (1.0 + scale)) return;
  optima->push_back(canon);
}

}  // namespace

EstimateResult lsm_alternating(const Dataset& data, int s,
                               const EstimatorConfig& cfg) {
  data.validate();
  if (s < 1) throw std::invalid_argument("lsm_alternating: s must be >= 1");
  if (data.N() < s)
    throw std::invalid_argument("lsm_alternating: need N >= s");
  if (cfg.restarts < 1 || cfg.max_iters < 1 || cfg.cost_tol <= 0)
    throw std::invalid_argument("lsm_alternating: bad config");

  std::vector<RestartOutcome> outcomes(cfg.restarts);
  parallel_for(cfg.restarts, cfg.threads, [&](int r) {
    outcomes[r] = run_restart(data, s, cfg, cfg.seed ^ static_cast<std::uint64_t>(r));
  });

  int best = 0;
  for (int r = 1; r < cfg.restarts; ++r)
    if (outcomes[r].cost < outcomes[best].cost) best = r;

  EstimateResult res;
  res.A_hat = outcomes[best].A;
  res.cost = cost(data, res.A_hat);
  res.assignment = canonical_assignment(data, res.A_hat, cfg.tie_tol);
  res.trajectory = outcomes[best].trajectory;
  res.status = outcomes[best].status;
  res.restarts_used = cfg.restarts;
  const double scale = data.y.cwiseAbs().maxCoeff();
  for (const auto& oc : outcomes) {
    res.degenerate_lad = res.degenerate_lad || oc.degenerate_lad;
    res.restart_trajectories.push_back(oc.trajectory);
    if (oc.cost <= outcomes[best].cost + 1e-9 * (1.0 + outcomes[best].cost))
      collect_optimum(&res.optima, oc.A, scale);
  }
  return res;
}

EstimateResult lsm_bruteforce(const Dataset& data, int s, long long budget,
                              double tie_tol) {
  data.validate();
  const int N = data.N();
  const int n = data.n();
  if (s < 1) throw std::invalid_argument("lsm_bruteforce: s must be >= 1");
  double combos = 1.0;
  for (int t = 0; t < N; ++t) {
    combos *= s;
    if (combos > static_cast<double>(budget))
      throw BudgetError("lsm_bruteforce: s^N exceeds budget");
  }

  std::vector<int> labels(N, 0);  // 0-based mode per sample
  Matrix best_A;
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<Matrix> optima;
  bool best_has_empty_mode = false;
  bool best_degenerate = false;
  const double scale = data.y.cwiseAbs().maxCoeff();

  Matrix A(n, s);
  std::vector<std::vector<int>> groups(s);
  for (;;) {
    for (auto& g : groups) g.clear();
    for (int t = 0; t < N; ++t) groups[labels[t]].push_back(t);

    double total = 0.0;
    bool has_empty = false;
    bool any_degenerate = false;
    for (int i = 0; i < s; ++i) {
      if (groups[i].empty()) {
        A.col(i).setZero();
        has_empty = true;
        continue;
      }
      Matrix Xb;
      Vector yb;
      Xb.resize(n, groups[i].size());
      yb.resize(groups[i].size());
      for (std::size_t j = 0; j < groups[i].size(); ++j) {
        Xb.col(j) = data.X.col(groups[i][j]);
        yb(j) = data.y(groups[i][j]);
      }
      const LadResult fit = lad_regression(Xb, yb);
      A.col(i) = fit.a;
      total += fit.objective;
      any_degenerate = any_degenerate || fit.degenerate;
    }

    if (total < best_cost - 1e-12) {
      best_cost = total;
      best_A = A;
      best_has_empty_mode = has_empty;
      best_degenerate = any_degenerate;
      optima.clear();
    }
    if (total <= best_cost + 1e-9 * (1.0 + best_cost))
      collect_optimum(&optima, A, scale);

    // odometer over labelings
    int pos = 0;
    while (pos < N && ++labels[pos] == s) labels[pos++] = 0;
    if (pos == N) break;
  }

  EstimateResult res;
  res.A_hat = best_A;
  res.cost = best_cost;
  res.assignment = canonical_assignment(data, best_A, tie_tol);
  res.trajectory = {best_cost};
  res.status = SolverStatus::oracle_exact;
  res.restarts_used = 0;
  res.degenerate_lad = best_degenerate;
  res.empty_mode = best_has_empty_mode;
  res.optima = std::move(optima);

  // the canonical assignment of the winner cannot beat the enumerated optimum
  if (res.assignment.cost < best_cost - 1e-9 * (1.0 + best_cost))
    throw std::logic_error("lsm_bruteforce: enumeration missed a better labeling");
  return res;
}

double matched_column_distance(const Matrix& A, const Matrix& B,
                               std::vector<int>* perm) {
  const int s = static_cast<int>(A.cols());
  if (B.cols() != s || B.rows() != A.rows())
    throw std::invalid_argument("matched_column_distance: shape mismatch");
  if (s > 8)
    throw std::invalid_argument("matched_column_distance: s too large");
  std::vector<int> p(s);
  std::iota(p.begin(), p.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> best_p = p;
  do {
    double d = 0.0;
    for (int i = 0; i < s; ++i) d += (A.col(i) - B.col(p[i])).norm();
    if (d < best) {
      best = d;
      best_p = p;
    }
  } while (std::next_permutation(p.begin(), p.end()));
  if (perm) *perm = best_p;
  return best;
}

}  // namespace lsm
