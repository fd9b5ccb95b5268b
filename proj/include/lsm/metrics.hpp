#ifndef LSM_METRICS_HPP_
#define LSM_METRICS_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lsm/types.hpp"

namespace lsm {

constexpr long long kDefaultSubsetBudget = 2'000'000;

// --- genericity index ---------------------------------------------------

struct GenericityResult {
  int nu = 0;
  // a rank-deficient subset of size nu-1 (empty when nu == n)
  std::vector<int> witness_deficient;
};

// Minimum m such that every n x m column submatrix of X has rank n.
// Certified by full enumeration; throws BudgetError past `budget` subset
// evaluations, and invalid_argument when rank(X) < n.
GenericityResult genericity_index(const Matrix& X, double rank_tol = 1e-9,
                                  long long budget = kDefaultSubsetBudget);

// --- single-mode concentration ratio ------------------------------------

// Exact sup of c.eta over {eta : |X^T eta|_1 <= 1} by cutting planes on the
// sign-pattern polytope.  `cut_pool` (optional) carries accumulated cuts
// across calls with the same X.
struct CutPool {
  std::vector<Vector> cuts;  // rows g with constraint g.eta <= 1
};

double polytope_support(const Matrix& X, const Vector& obj,
                        CutPool* cut_pool = nullptr, double tol = 1e-9);

// Exact xi_1 for the single-mode ratio (largest single-sample share of
// |X^T eta|_1).  Requires rank(X) = n.
double xi1_single_mode(const Matrix& X, double rank_tol = 1e-9);

// Certified upper bound min(1, r * xi_1); exact at r = 0 and r = 1.
double xi_single_mode_upper(const Matrix& X, int r, double rank_tol = 1e-9);

// Exact xi_r by enumeration over index subsets and sign patterns
// (C(N,r) * 2^(r-1) support problems; throws BudgetError when too many).
double xi_single_mode_exact(const Matrix& X, int r,
                            long long budget = kDefaultSubsetBudget,
                            double rank_tol = 1e-9);

// Sampled lower estimate of xi_r for the single-mode ratio.
double xi_single_mode_lower(const Matrix& X, int r, int samples,
                            std::uint64_t seed);

// --- switched concentration ratio (Monte Carlo lower estimates) ---------

struct XiSwitchedOptions {
  bool comparable_only = false;  // restrict sampling to comparable pairs
  int nu = 0;                    // genericity threshold when comparable_only
  std::vector<Matrix> extra_candidates;  // e.g. estimator trajectory points
  double tie_tol = 1e-9;
};

// Max over sampled pairs (A, A') of the share of |phi(A)-phi(A')|_1 carried
// by its r largest entries.  A lower estimate of xi_r by construction.
double xi_switched_lower(const Dataset& data, int s, int r, int samples,
                         std::uint64_t seed,
                         const XiSwitchedOptions& opts = {});

// Whole curve r = 0..N in one pass over the same sampled pairs.
std::vector<double> xi_switched_lower_curve(const Dataset& data, int s,
                                            int samples, std::uint64_t seed,
                                            const XiSwitchedOptions& opts = {});

// --- r* ------------------------------------------------------------------

struct RStarResult {
  int r_star_lower = 0;  // certified: from the upper xi curve
  int r_star_upper = 0;  // optimistic: from the lower xi curve
};

// Largest r with xi_r < 1/2, bracketed from both curve sides.  Curves are
// isotonically clamped (running max) before thresholding.
RStarResult r_star(std::vector<double> xi_upper_per_r,
                   std::vector<double> xi_lower_per_r);

// --- gamma_m, d_hat, lambda ---------------------------------------------

struct Bracket {
  double lower_certified = 0.0;
  double upper_estimate = 0.0;
};

// gamma_m = inf over |I| >= m, |eta|_2 = 1 of |X_I^T eta|_1.
// lower: exact min over |I| = m of lambda_min^(1/2)(X_I X_I^T);
// upper: multi-start projected subgradient descent.
Bracket gamma_m(const Matrix& X, int m, int restarts, std::uint64_t seed,
                long long budget = kDefaultSubsetBudget);

// Certified lower bound on D for the column-sum-of-2-norms norm:
// min over |I| = m of lambda_min^(1/2)(X_I X_I^T), exact by enumeration.
double d_hat(const Matrix& X, int m, long long budget = kDefaultSubsetBudget);

// lambda = inf over |eta|_1 = 1 of |X^T eta|_1.
// lower: sigma_min(X)/sqrt(n); upper: multi-start descent on the l1 sphere.
Bracket lambda_l1(const Matrix& X, int restarts, std::uint64_t seed);

// --- report ---------------------------------------------------------------

struct MetricsField {
  double value = 0.0;
  bool certified = false;
  std::string note;
};

struct XiRecord {
  int r = 0;
  double upper_bound = 1.0;      // certified for s = 1 only
  double lower_estimate = 0.0;   // Monte Carlo / sampled
  std::optional<double> exact;   // small instances, s = 1 only
};

struct MetricsReport {
  int n = 0, N = 0, s = 0;
  std::optional<int> nu_n;
  std::vector<int> nu_witness;
  std::vector<XiRecord> xi;      // indexed by r = 0..N
  bool xi_upper_is_certified = false;  // true iff s == 1
  std::optional<RStarResult> r_star;
  std::optional<Bracket> gamma;
  int gamma_m_value = 0;
  std::optional<double> D_hat;
  std::optional<double> D_upper_estimate;
  std::optional<Bracket> lambda;
  std::vector<std::string> notes;
};

std::string metrics_report_to_json(const MetricsReport& report);

}  // namespace lsm

#endif  // LSM_METRICS_HPP_
