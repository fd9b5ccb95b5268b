#include "lsm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>
#include <json.hpp>

#include "lsm/assign.hpp"
#include "lsm/io.hpp"
#include "lsm/linprog.hpp"
#include "lsm/rng.hpp"

namespace lsm {

namespace {

// Lexicographic enumeration of size-m subsets of {0..N-1}.  The callback
// returns false to stop early.  Each visited subset costs one budget unit.
void for_each_subset(int N, int m, long long* budget,
                     const std::function<bool(const std::vector<int>&)>& fn,
                     const char* op_name) {
  std::vector<int> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  for (;;) {
    if (--(*budget) < 0)
      throw BudgetError(std::string(op_name) +
                        ": exceeds combinatorial budget; reduce the subset "
                        "size or N, or raise the budget");
    if (!fn(idx)) return;
    int i = m - 1;
    while (i >= 0 && idx[i] == N - m + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (int j = i + 1; j < m; ++j) idx[j] = idx[j - 1] + 1;
  }
}

double largest_singular_value(const Matrix& X) {
  return Eigen::JacobiSVD<Matrix>(X).singularValues()(0);
}

double smallest_singular_value(const Matrix& X) {
  const auto sv = Eigen::JacobiSVD<Matrix>(X).singularValues();
  return sv(sv.size() - 1);
}

void require_full_row_rank(const Matrix& X, double rank_tol) {
  const auto sv = Eigen::JacobiSVD<Matrix>(X).singularValues();
  if (X.rows() > X.cols() || sv(sv.size() - 1) <= rank_tol * sv(0))
    throw std::invalid_argument("X not full row rank");
}

bool submatrix_full_rank(const Matrix& X, const std::vector<int>& cols,
                         double rank_tol) {
  const int n = static_cast<int>(X.rows());
  Matrix sub(n, cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) sub.col(j) = X.col(cols[j]);
  const auto sv = Eigen::JacobiSVD<Matrix>(sub).singularValues();
  return sv(sv.size() - 1) > rank_tol * sv(0);
}

}  // namespace

GenericityResult genericity_index(const Matrix& X, double rank_tol,
                                  long long budget) {
  const int n = static_cast<int>(X.rows());
  const int N = static_cast<int>(X.cols());
  require_full_row_rank(X, rank_tol);
  GenericityResult res;
  std::vector<int> last_witness;
  for (int m = n; m <= N; ++m) {
    bool all_full = true;
    for_each_subset(N, m, &budget,
                    [&](const std::vector<int>& idx) {
                      if (!submatrix_full_rank(X, idx, rank_tol)) {
                        all_full = false;
                        last_witness = idx;
                        return false;  // early exit: this m fails
                      }
                      return true;
                    },
                    "genericity_index");
    if (all_full) {
      res.nu = m;
      if (m > n) res.witness_deficient = last_witness;
      return res;
    }
  }
  throw std::logic_error("genericity_index: no certifying m found");
}

double polytope_support(const Matrix& X, const Vector& obj, CutPool* cut_pool,
                        double tol) {
  const int n = static_cast<int>(X.rows());
  const int N = static_cast<int>(X.cols());
  if (obj.size() != n)
    throw std::invalid_argument("polytope_support: objective dimension");
  // |eta|_inf <= |eta|_2 <= |X^T eta|_2 / sigma_min <= 1 / sigma_min
  const double box = 1.0 / smallest_singular_value(X) * (1.0 + 1e-9);

  CutPool local;
  CutPool& pool = cut_pool ? *cut_pool : local;

  for (int round = 0; round < 100000; ++round) {
    const int rows = 2 * n + static_cast<int>(pool.cuts.size());
    Matrix G = Matrix::Zero(rows, n);
    Vector h(rows);
    for (int j = 0; j < n; ++j) {
      G(2 * j, j) = 1.0;
      h(2 * j) = box;
      G(2 * j + 1, j) = -1.0;
      h(2 * j + 1) = box;
    }
    for (std::size_t k = 0; k < pool.cuts.size(); ++k) {
      G.row(2 * n + static_cast<int>(k)) = pool.cuts[k].transpose();
      h(2 * n + static_cast<int>(k)) = 1.0;
    }
    const LpSolution sol = solve_lp_inequality(-obj, G, h);
    if (sol.status != LpStatus::optimal)
      throw std::logic_error("polytope_support: relaxation LP not optimal");
    const Vector w = X.transpose() * sol.x;
    if (w.lpNorm<1>() <= 1.0 + tol) return obj.dot(sol.x);
    Vector sign(N);
    for (int t = 0; t < N; ++t) sign(t) = w(t) < 0.0 ? -1.0 : 1.0;
    pool.cuts.push_back(X * sign);
  }
  throw std::runtime_error("polytope_support: cutting plane did not converge");
}

double xi1_single_mode(const Matrix& X, double rank_tol) {
  require_full_row_rank(X, rank_tol);
  const int N = static_cast<int>(X.cols());
  CutPool pool;
  double best = 0.0;
  // the feasible polytope is symmetric under eta -> -eta, so the support of
  // x_t already equals sup |x_t . eta|
  for (int t = 0; t < N; ++t)
    best = std::max(best, polytope_support(X, X.col(t), &pool));
  return std::min(1.0, best);
}

double xi_single_mode_upper(const Matrix& X, int r, double rank_tol) {
  const int N = static_cast<int>(X.cols());
  if (r < 0 || r > N)
    throw std::invalid_argument("xi_single_mode_upper: r out of range");
  if (r == 0) return 0.0;
  return std::min(1.0, r * xi1_single_mode(X, rank_tol));
}

double xi_single_mode_exact(const Matrix& X, int r, long long budget,
                            double rank_tol) {
  require_full_row_rank(X, rank_tol);
  const int N = static_cast<int>(X.cols());
  if (r < 0 || r > N)
    throw std::invalid_argument("xi_single_mode_exact: r out of range");
  if (r == 0) return 0.0;

  double combos = 1.0;  // C(N,r) * 2^(r-1) support problems
  for (int i = 1; i <= r; ++i) combos = combos * (N - r + i) / i;
  for (int i = 1; i < r; ++i) combos *= 2.0;
  if (combos > static_cast<double>(budget))
    throw BudgetError("xi_single_mode_exact: exceeds combinatorial budget");

  CutPool pool;
  double best = 0.0;
  long long subset_budget = budget;
  for_each_subset(
      N, r, &subset_budget,
      [&](const std::vector<int>& idx) {
        // sign of the first selected column fixed by eta -> -eta symmetry
        const long patterns = 1L << (r - 1);
        for (long mask = 0; mask < patterns; ++mask) {
          Vector obj = X.col(idx[0]);
          for (int j = 1; j < r; ++j) {
            const double tau = (mask >> (j - 1)) & 1 ? -1.0 : 1.0;
            obj += tau * X.col(idx[j]);
          }
          best = std::max(best, polytope_support(X, obj, &pool));
        }
        return true;
      },
      "xi_single_mode_exact");
  return std::min(1.0, best);
}

double xi_single_mode_lower(const Matrix& X, int r, int samples,
                            std::uint64_t seed) {
  const int n = static_cast<int>(X.rows());
  const int N = static_cast<int>(X.cols());
  if (r < 0 || r > N)
    throw std::invalid_argument("xi_single_mode_lower: r out of range");
  if (r == 0) return 0.0;
  double best = 0.0;
  for (int k = 0; k < samples; ++k) {
    Rng rng = Rng::derived(seed, static_cast<std::uint64_t>(k));
    Vector eta(n);
    for (int j = 0; j < n; ++j) eta(j) = rng.gaussian();
    Vector w = (X.transpose() * eta).cwiseAbs();
    const double total = w.sum();
    if (total < 1e-300) continue;
    std::sort(w.data(), w.data() + N, std::greater<double>());
    best = std::max(best, w.head(r).sum() / total);
  }
  return best;
}

namespace {

bool pair_is_comparable(const std::vector<std::vector<int>>& part_a,
                        const std::vector<std::vector<int>>& part_b, int nu) {
  const int s = static_cast<int>(part_a.size());
  std::vector<int> perm(s);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    bool ok = true;
    for (int i = 0; i < s && ok; ++i) {
      int overlap = 0;
      for (int t : part_a[i])
        overlap += static_cast<int>(
            std::find(part_b[perm[i]].begin(), part_b[perm[i]].end(), t) !=
            part_b[perm[i]].end());
      ok = overlap >= nu;
    }
    if (ok) return true;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return false;
}

}  // namespace

std::vector<double> xi_switched_lower_curve(const Dataset& data, int s,
                                            int samples, std::uint64_t seed,
                                            const XiSwitchedOptions& opts) {
  data.validate();
  if (samples < 1)
    throw std::invalid_argument("xi_switched_lower: samples must be >= 1");
  const int n = data.n();
  const int N = data.N();
  std::vector<double> curve(N + 1, 0.0);
  int valid_pairs = 0;

  auto consider = [&](const Matrix& A, const Matrix& A2) {
    const AssignmentResult ra = canonical_assignment(data, A, opts.tie_tol);
    const AssignmentResult rb = canonical_assignment(data, A2, opts.tie_tol);
    Vector d = (ra.phi - rb.phi).cwiseAbs();
    const double total = d.sum();
    if (total < 1e-12 * (1.0 + ra.cost + rb.cost)) return;
    if (opts.comparable_only &&
        !pair_is_comparable(ra.partition, rb.partition, opts.nu))
      return;
    ++valid_pairs;
    std::sort(d.data(), d.data() + N, std::greater<double>());
    double prefix = 0.0;
    for (int r = 1; r <= N; ++r) {
      prefix += d(r - 1);
      curve[r] = std::max(curve[r], prefix / total);
    }
  };

  for (std::size_t k = 1; k < opts.extra_candidates.size(); ++k)
    consider(opts.extra_candidates[k - 1], opts.extra_candidates[k]);
  for (int k = 0; k < samples; ++k) {
    Rng rng = Rng::derived(seed, static_cast<std::uint64_t>(k));
    Matrix A(n, s), A2(n, s);
    for (int i = 0; i < s; ++i)
      for (int j = 0; j < n; ++j) {
        A(j, i) = rng.gaussian();
        A2(j, i) = rng.gaussian();
      }
    consider(A, A2);
  }
  if (valid_pairs == 0)
    throw std::runtime_error("xi_switched_lower: no valid pairs");
  return curve;
}

double xi_switched_lower(const Dataset& data, int s, int r, int samples,
                         std::uint64_t seed, const XiSwitchedOptions& opts) {
  const int N = data.N();
  if (r < 0 || r > N)
    throw std::invalid_argument("xi_switched_lower: r out of range");
  return xi_switched_lower_curve(data, s, samples, seed, opts)[r];
}

RStarResult r_star(std::vector<double> xi_upper_per_r,
                   std::vector<double> xi_lower_per_r) {
  if (xi_upper_per_r.size() != xi_lower_per_r.size() || xi_upper_per_r.empty())
    throw std::invalid_argument("r_star: curve size mismatch");
  const int N = static_cast<int>(xi_upper_per_r.size()) - 1;
  // isotonic clamp, then keep the lower curve below the upper one
  for (int r = 1; r <= N; ++r) {
    xi_upper_per_r[r] = std::max(xi_upper_per_r[r], xi_upper_per_r[r - 1]);
    xi_lower_per_r[r] = std::max(xi_lower_per_r[r], xi_lower_per_r[r - 1]);
  }
  for (int r = 0; r <= N; ++r)
    xi_lower_per_r[r] = std::min(xi_lower_per_r[r], xi_upper_per_r[r]);
  RStarResult res;
  for (int r = N; r >= 0; --r)
    if (xi_upper_per_r[r] < 0.5) {
      res.r_star_lower = r;
      break;
    }
  for (int r = N; r >= 0; --r)
    if (xi_lower_per_r[r] < 0.5) {
      res.r_star_upper = r;
      break;
    }
  return res;
}

namespace {

double min_subset_lambda_min_sqrt(const Matrix& X, int m, long long budget,
                                  const char* op_name) {
  const int N = static_cast<int>(X.cols());
  const int n = static_cast<int>(X.rows());
  if (m < 1 || m > N)
    throw std::invalid_argument(std::string(op_name) + ": m out of range");
  double best = std::numeric_limits<double>::infinity();
  Matrix sub(n, m);
  for_each_subset(N, m, &budget,
                  [&](const std::vector<int>& idx) {
                    for (int j = 0; j < m; ++j) sub.col(j) = X.col(idx[j]);
                    Eigen::SelfAdjointEigenSolver<Matrix> es(sub * sub.transpose());
                    const double lmin = std::max(0.0, es.eigenvalues()(0));
                    best = std::min(best, std::sqrt(lmin));
                    return true;
                  },
                  op_name);
  return best;
}

// Multi-start projected local descent shared by gamma_m and lambda_l1.
// `project` renormalizes a proposal; `objective` evaluates it.
double local_descent_min(const std::vector<Vector>& starts, int random_starts,
                         std::uint64_t seed, int dim,
                         const std::function<Vector(const Vector&)>& project,
                         const std::function<double(const Vector&)>& objective,
                         const std::function<Vector(const Vector&)>& subgradient) {
  double best = std::numeric_limits<double>::infinity();
  std::vector<Vector> all_starts = starts;
  for (int k = 0; k < random_starts; ++k) {
    Rng rng = Rng::derived(seed, static_cast<std::uint64_t>(k));
    Vector v(dim);
    for (int j = 0; j < dim; ++j) v(j) = rng.gaussian();
    all_starts.push_back(v);
  }
  for (std::size_t si = 0; si < all_starts.size(); ++si) {
    Vector eta = project(all_starts[si]);
    if (!eta.allFinite()) continue;
    double f = objective(eta);
    Rng rng = Rng::derived(seed ^ 0x5bd1e995u, si);
    double step = 1.0;
    for (int it = 0; it < 400 && step > 1e-10; ++it) {
      Vector dir = -subgradient(eta);
      bool improved = false;
      for (int probe = 0; probe < 2 && !improved; ++probe) {
        if (probe == 1) {
          for (int j = 0; j < dim; ++j) dir(j) = rng.gaussian();
        }
        const double dn = dir.norm();
        if (dn < 1e-300) continue;
        const Vector cand = project(eta + (step / dn) * dir);
        if (!cand.allFinite()) continue;
        const double fc = objective(cand);
        if (fc < f - 1e-15) {
          eta = cand;
          f = fc;
          improved = true;
        }
      }
      if (!improved) step *= 0.5;
    }
    best = std::min(best, f);
  }
  return best;
}

std::vector<Vector> axis_starts(int dim) {
  std::vector<Vector> starts;
  for (int j = 0; j < dim; ++j) {
    Vector e = Vector::Zero(dim);
    e(j) = 1.0;
    starts.push_back(e);
    starts.push_back(-e);
  }
  return starts;
}

}  // namespace

Bracket gamma_m(const Matrix& X, int m, int restarts, std::uint64_t seed,
                long long budget) {
  const int n = static_cast<int>(X.rows());
  const int N = static_cast<int>(X.cols());
  Bracket out;
  out.lower_certified = min_subset_lambda_min_sqrt(X, m, budget, "gamma_m");

  // objective: sum of the m smallest |x_t . eta| over the unit l2 sphere
  auto project = [](const Vector& v) -> Vector { return v / v.norm(); };
  auto smallest_idx = [&](const Vector& eta) {
    Vector w = X.transpose() * eta;
    std::vector<int> idx(N);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      return std::abs(w(a)) < std::abs(w(b));
    });
    idx.resize(m);
    return idx;
  };
  auto objective = [&](const Vector& eta) {
    const Vector w = X.transpose() * eta;
    double f = 0.0;
    for (int t : smallest_idx(eta)) f += std::abs(w(t));
    return f;
  };
  auto subgradient = [&](const Vector& eta) {
    const Vector w = X.transpose() * eta;
    Vector g = Vector::Zero(n);
    for (int t : smallest_idx(eta))
      g += (w(t) < 0.0 ? -1.0 : 1.0) * X.col(t);
    // project onto the sphere tangent
    return Vector(g - g.dot(eta) * eta);
  };
  out.upper_estimate = local_descent_min(axis_starts(n), restarts, seed, n,
                                         project, objective, subgradient);
  return out;
}

double d_hat(const Matrix& X, int m, long long budget) {
  return min_subset_lambda_min_sqrt(X, m, budget, "d_hat");
}

Bracket lambda_l1(const Matrix& X, int restarts, std::uint64_t seed) {
  const int n = static_cast<int>(X.rows());
  require_full_row_rank(X, 1e-12);
  Bracket out;
  out.lower_certified = smallest_singular_value(X) / std::sqrt(static_cast<double>(n));

  auto project = [](const Vector& v) -> Vector { return v / v.lpNorm<1>(); };
  auto objective = [&](const Vector& eta) {
    return (X.transpose() * eta).lpNorm<1>();
  };
  auto subgradient = [&](const Vector& eta) {
    const Vector w = X.transpose() * eta;
    Vector sgn(w.size());
    for (int t = 0; t < w.size(); ++t) sgn(t) = w(t) < 0.0 ? -1.0 : 1.0;
    return Vector(X * sgn);
  };
  out.upper_estimate = local_descent_min(axis_starts(n), restarts, seed, n,
                                         project, objective, subgradient);
  return out;
}

std::string metrics_report_to_json(const MetricsReport& rep) {
  nlohmann::json j;
  j["n"] = rep.n;
  j["N"] = rep.N;
  j["s"] = rep.s;
  if (rep.nu_n) {
    j["nu_n"] = {{"value", *rep.nu_n},
                 {"certified", true},
                 {"note", "full enumeration of column subsets"}};
    if (!rep.nu_witness.empty()) {
      std::vector<int> w1;
      for (int t : rep.nu_witness) w1.push_back(t + 1);
      j["nu_n"]["witness_deficient"] = w1;
    }
  }
  if (!rep.xi.empty()) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& rec : rep.xi) {
      nlohmann::json e;
      e["r"] = rec.r;
      e["upper_bound"] = rec.upper_bound;
      e["upper_certified"] = rep.xi_upper_is_certified;
      e["lower_estimate"] = rec.lower_estimate;
      e["lower_certified"] = false;
      if (rec.exact) e["exact"] = *rec.exact;
      arr.push_back(e);
    }
    j["xi"] = arr;
  }
  if (rep.r_star) {
    j["r_star"] = {
        {"lower", {{"value", rep.r_star->r_star_lower},
                   {"certified", rep.xi_upper_is_certified}}},
        {"upper", {{"value", rep.r_star->r_star_upper}, {"certified", false}}}};
  }
  if (rep.gamma) {
    j["gamma_m"] = {{"m", rep.gamma_m_value},
                    {"lower_certified", rep.gamma->lower_certified},
                    {"upper_estimate", rep.gamma->upper_estimate},
                    {"certified", true},
                    {"note", "lower side certified; upper side from local descent"}};
  }
  if (rep.D_hat)
    j["d_hat"] = {{"value", *rep.D_hat},
                  {"certified", true},
                  {"note", "exact enumeration of size-m subsets"}};
  if (rep.D_upper_estimate)
    j["D_upper_estimate"] = {{"value", *rep.D_upper_estimate},
                             {"certified", false},
                             {"note", "sampled descent over unit-norm slopes"}};
  if (rep.lambda)
    j["lambda_l1"] = {{"lower_certified", rep.lambda->lower_certified},
                      {"upper_estimate", rep.lambda->upper_estimate},
                      {"certified", true},
                      {"note", "lower side sigma_min/sqrt(n)"}};
  if (!rep.notes.empty()) j["notes"] = rep.notes;
  return j.dump(2) + "\n";
}

}  // namespace lsm
