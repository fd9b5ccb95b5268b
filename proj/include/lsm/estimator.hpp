#ifndef LSM_ESTIMATOR_HPP_
#define LSM_ESTIMATOR_HPP_

#include <cstdint>
#include <vector>

#include "lsm/assign.hpp"
#include "lsm/types.hpp"

namespace lsm {

struct LadResult {
  Vector a;
  double objective = 0.0;
  bool degenerate = false;  // multiple optimal vertices exist
};

// Exact least-absolute-deviation fit: minimizes |y_sub - X_sub^T a|_1 via
// the standard linear program.  Returns a vertex solution.
LadResult lad_regression(const Matrix& X_sub, const Vector& y_sub);

struct EstimatorConfig {
  int restarts = 20;
  int max_iters = 100;
  double cost_tol = 1e-10;
  double tie_tol = kDefaultTieTol;
  enum class EmptyModePolicy { reseed_random_point, reseed_worst_residual };
  EmptyModePolicy empty_mode_policy = EmptyModePolicy::reseed_worst_residual;
  std::uint64_t seed = 0;
  enum class Mode { heuristic, exact_bruteforce, both };
  Mode mode = Mode::heuristic;
  long long bruteforce_budget = 1'000'000;
  int threads = 1;
};

enum class SolverStatus { converged, iter_limit, oracle_exact };

struct EstimateResult {
  Matrix A_hat;  // n x s
  double cost = 0.0;
  AssignmentResult assignment;
  std::vector<double> trajectory;  // best restart's per-iteration costs
  SolverStatus status = SolverStatus::converged;
  int restarts_used = 0;
  bool degenerate_lad = false;
  bool empty_mode = false;  // oracle winner left a mode unused (zero column)
  // distinct optimal column sets found (cost within 1e-9 of the best)
  std::vector<Matrix> optima;
  // per-restart trajectories, for the trace CSV
  std::vector<std::vector<double>> restart_trajectories;
};

// Alternating minimization: canonical assignment followed by per-mode LAD,
// multi-started from random partitions.  Deterministic for a fixed seed,
// independent of thread count.
EstimateResult lsm_alternating(const Dataset& data, int s,
                               const EstimatorConfig& cfg);

// Exhaustive enumeration of all s^N labelings; exact global optimum of the
// sum-of-minimums cost.  Requires s^N <= budget.
EstimateResult lsm_bruteforce(const Dataset& data, int s,
                              long long budget = 1'000'000,
                              double tie_tol = kDefaultTieTol);

// Minimum over column permutations of sum_i |a_i - b_{perm(i)}|_2, and the
// minimizing permutation (perm[i] = column of B matched to column i of A).
double matched_column_distance(const Matrix& A, const Matrix& B,
                               std::vector<int>* perm = nullptr);

}  // namespace lsm

#endif  // LSM_ESTIMATOR_HPP_
