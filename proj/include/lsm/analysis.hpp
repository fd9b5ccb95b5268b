#ifndef LSM_ANALYSIS_HPP_
#define LSM_ANALYSIS_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lsm/assign.hpp"
#include "lsm/metrics.hpp"
#include "lsm/types.hpp"

namespace lsm {

// --- comparability --------------------------------------------------------

struct ComparabilityVerdict {
  bool comparable = false;
  std::vector<int> pi;  // pi[i] = 0-based mode of A' matched to mode i of A
  Eigen::MatrixXi overlap;  // overlap(i, j) = |I_i(A) n I_j(A')|
  int threshold = 0;        // nu_n(X)
};

// Decides whether a permutation pi exists with every overlap
// |I_i(A) n I_{pi(i)}(A')| >= nu; returns the lexicographically smallest
// witness.  `nu` <= 0 means compute the genericity index internally.
ComparabilityVerdict comparability(const Dataset& data, const Matrix& A,
                                   const Matrix& A_prime, int nu = 0,
                                   double tie_tol = kDefaultTieTol);

enum class CheckOutcome { holds, fails, not_applicable };

// Cardinality-based sufficient condition for comparability: for all i != j,
//   |I_i(A)| + |I_j(A)| >= max_l [|I_i(A) n I_l(A')| + |I_j(A) n I_l(A')|]
//                          + 2(s-1) nu.
// Applicable only when min_i |I_i(A)| >= s nu.
CheckOutcome lemma5_sufficient(const Dataset& data, const Matrix& A,
                               const Matrix& A_prime, int nu = 0,
                               double tie_tol = kDefaultTieTol);

// --- the residual-difference lower bound g and the constant D -------------

// Exact value of g(Lambda) = min over disjoint {J_i}, |J_i| = nu, of
// sum_i |X_{J_i}^T eta_i|_1 (transportation problem, solved by min-cost
// flow).  Requires s * nu <= N.
double g_of_lambda(const Matrix& X, const Matrix& Lambda, int nu);

// Bracket for D = inf over unit column-sum-of-2-norms Lambda of g(Lambda).
// Lower side is d_hat(X, nu) (certified); upper side from sampled descent.
Bracket estimate_D(const Matrix& X, int s, int nu, int samples,
                   std::uint64_t seed,
                   long long budget = kDefaultSubsetBudget);

// --- parametric error bounds ----------------------------------------------

enum class XiSide { certified_upper, mc_lower };

struct BoundValue {
  enum class Status {
    value,
    vacuous_xi,             // xi >= 1/2 (or evidence of it)
    vacuous_D,              // no positive lower bound on D
    vacuous_comparability,  // pair not comparable
    vacuous_empty_grid      // no admissible r
  };
  Status status = Status::vacuous_xi;
  double value = 0.0;
  bool optimistic = false;  // computed with a Monte Carlo xi lower estimate

  bool has_value() const { return status == Status::value; }
};

// (J(A') - J(A) + 2 delta_r(A)) / (D_lower (1 - 2 xi)) for a comparable pair.
BoundValue theorem2_bound(const Dataset& data, const Matrix& A,
                          const Matrix& A_prime, int r, double xi_value,
                          XiSide side, double D_lower, int nu = 0,
                          double tie_tol = kDefaultTieTol);

struct Corollary1Result {
  BoundValue bound;          // min over admissible r of the delta_r form
  std::optional<int> r_opt;  // minimizing r
  // noise-side relaxation 2 |v|_{1,r} / (D (1 - 2 xi)) when truth is known
  std::optional<double> noise_bound;
  bool delta_le_noise = true;  // delta_r(A_true) <= |v|_{1,r} on the grid
};

// r-optimized estimation-error bound 2 delta_r(A_true)/(D_lower (1-2 xi_r)).
// xi_by_r[k] pairs each grid r with its xi value (one side for all).
Corollary1Result corollary1_bound(const Dataset& data, const Matrix& A_true,
                                  const Matrix& A_hat,
                                  const std::vector<std::pair<int, double>>& xi_by_r,
                                  XiSide side, double D_lower, int nu = 0,
                                  double tie_tol = kDefaultTieTol);

// --- condition checkers -----------------------------------------------------

struct Prop1Result {
  bool condition_holds = false;
  bool sigma_matches = false;
  double margin = 0.0;  // min_t of threshold_t - |v_t|
};

// Noise-below-threshold condition |v_t| < (1/2) min_{i != j} |x_t.(a_i - a_j)|
// and whether the canonical assignment of A_true reproduces the true
// switching signal.
Prop1Result proposition1_check(const Dataset& data, const Matrix& A_true,
                               double tie_tol = kDefaultTieTol);

// Parametric distinguishability:
//   min_{i != j} |a_i - a_j|_2 > 2 delta_r(A_true) / (gamma_lower (1 - 2 xi)).
// Requires min_i |I_i(A_true)| >= s m with m >= nu and a certified xi side.
CheckOutcome lemma7_check(const Dataset& data, const Matrix& A_true, int r,
                          double xi_value, XiSide side, double gamma_lower,
                          int m, int nu, double tie_tol = kDefaultTieTol);

struct Theorem1Options {
  double tie_tol = kDefaultTieTol;
  double zero_tol = -1.0;  // < 0: use 1e-8 (1 + |y|_inf)
  int nu = 0;              // <= 0: compute internally
  long long subset_budget = kDefaultSubsetBudget;
  long long bruteforce_budget = 1'000'000;
  bool run_oracle = true;
  double match_tol = 1e-8;
};

struct Theorem1Result {
  bool unique_recovery_predicted = false;
  std::optional<bool> witnessed;  // oracle outcome when feasible
  int nu = 0;
  int residual_support = 0;  // |phi(A_tilde)|_0 at zero_tol
  int min_cardinality = 0;
};

Theorem1Result theorem1_check(const Dataset& data, const Matrix& A_tilde,
                              int r_star_lower, const Theorem1Options& opts = {});

// --- bound report -----------------------------------------------------------

struct ConditionFlag {
  std::string name;
  std::optional<bool> holds;
  std::optional<double> margin;
};

struct BoundReport {
  int r_used = 0;
  double xi_used = 1.0;
  XiSide xi_side = XiSide::mc_lower;
  double delta_r_value = 0.0;
  double D_lower = 0.0;
  BoundValue theorem2;
  Corollary1Result corollary1;
  std::vector<ConditionFlag> conditions;
  std::optional<double> matched_error;  // |A_hat_pi - A_true| (2,col norm)
};

std::string bound_report_to_json(const BoundReport& report);
std::string condition_table_csv(const std::vector<ConditionFlag>& flags);

// Column-permuted error sum_i |a_i - b_{pi(i)}|_2 with pi from a
// comparability witness when present, otherwise min-cost column matching.
double matched_error_2col(const Matrix& A_true, const Matrix& A_hat,
                          const std::optional<std::vector<int>>& pi);

}  // namespace lsm

#endif  // LSM_ANALYSIS_HPP_
