#include "lsm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "lsm/estimator.hpp"
#include "lsm/flow.hpp"
#include "lsm/io.hpp"
#include "lsm/rng.hpp"

namespace lsm {

namespace {

Eigen::MatrixXi overlap_matrix(const std::vector<std::vector<int>>& part_a,
                               const std::vector<std::vector<int>>& part_b,
                               int N) {
  const int s = static_cast<int>(part_a.size());
  std::vector<int> owner_b(N, -1);
  for (int j = 0; j < s; ++j)
    for (int t : part_b[j]) owner_b[t] = j;
  Eigen::MatrixXi overlap = Eigen::MatrixXi::Zero(s, s);
  for (int i = 0; i < s; ++i)
    for (int t : part_a[i]) ++overlap(i, owner_b[t]);
  return overlap;
}

int resolve_nu(const Dataset& data, int nu) {
  if (nu > 0) return nu;
  return genericity_index(data.X).nu;
}

}  // namespace

ComparabilityVerdict comparability(const Dataset& data, const Matrix& A,
                                   const Matrix& A_prime, int nu,
                                   double tie_tol) {
  if (A.rows() != A_prime.rows() || A.cols() != A_prime.cols())
    throw std::invalid_argument("comparability: shape mismatch");
  const int s = static_cast<int>(A.cols());
  ComparabilityVerdict verdict;
  verdict.threshold = resolve_nu(data, nu);

  const AssignmentResult ra = canonical_assignment(data, A, tie_tol);
  const AssignmentResult rb = canonical_assignment(data, A_prime, tie_tol);
  verdict.overlap = overlap_matrix(ra.partition, rb.partition, data.N());

  // adjacency of the thresholded overlap graph
  std::vector<std::vector<int>> adj(s);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j)
      if (verdict.overlap(i, j) >= verdict.threshold) adj[i].push_back(j);

  if (max_bipartite_matching(adj, s, nullptr) != s) return verdict;

  // lexicographically smallest perfect matching: fix modes in order, keeping
  // the remainder matchable
  verdict.comparable = true;
  verdict.pi.assign(s, -1);
  std::vector<bool> used(s, false);
  for (int i = 0; i < s; ++i) {
    for (int j : adj[i]) {
      if (used[j]) continue;
      std::vector<std::vector<int>> rest;
      for (int i2 = i + 1; i2 < s; ++i2) {
        std::vector<int> row;
        for (int j2 : adj[i2])
          if (!used[j2] && j2 != j) row.push_back(j2);
        rest.push_back(row);
      }
      if (max_bipartite_matching(rest, s, nullptr) ==
          static_cast<int>(rest.size())) {
        verdict.pi[i] = j;
        used[j] = true;
        break;
      }
    }
    if (verdict.pi[i] < 0)
      throw std::logic_error("comparability: matching completion failed");
  }
  return verdict;
}

CheckOutcome lemma5_sufficient(const Dataset& data, const Matrix& A,
                               const Matrix& A_prime, int nu, double tie_tol) {
  const int s = static_cast<int>(A.cols());
  const int threshold = resolve_nu(data, nu);
  const AssignmentResult ra = canonical_assignment(data, A, tie_tol);
  const AssignmentResult rb = canonical_assignment(data, A_prime, tie_tol);
  if (ra.min_cardinality < s * threshold) return CheckOutcome::not_applicable;

  const Eigen::MatrixXi overlap =
      overlap_matrix(ra.partition, rb.partition, data.N());
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j) {
      if (i == j) continue;
      int worst = 0;
      for (int l = 0; l < s; ++l)
        worst = std::max(worst, overlap(i, l) + overlap(j, l));
      const int lhs = static_cast<int>(ra.partition[i].size()) +
                      static_cast<int>(ra.partition[j].size());
      if (lhs < worst + 2 * (s - 1) * threshold) return CheckOutcome::fails;
    }
  }
  return CheckOutcome::holds;
}

double g_of_lambda(const Matrix& X, const Matrix& Lambda, int nu) {
  const int N = static_cast<int>(X.cols());
  const int s = static_cast<int>(Lambda.cols());
  if (Lambda.rows() != X.rows())
    throw std::invalid_argument("g_of_lambda: shape mismatch");
  if (nu < 0 || static_cast<long long>(s) * nu > N)
    throw std::invalid_argument("g_of_lambda: infeasible tuple");
  if (nu == 0) return 0.0;
  Matrix costs(s, N);
  for (int i = 0; i < s; ++i)
    costs.row(i) = (X.transpose() * Lambda.col(i)).cwiseAbs().transpose();
  return min_cost_assignment(costs, nu, nullptr);
}

namespace {

double norm_2col(const Matrix& Lambda) {
  double total = 0.0;
  for (int i = 0; i < Lambda.cols(); ++i) total += Lambda.col(i).norm();
  return total;
}

}  // namespace

Bracket estimate_D(const Matrix& X, int s, int nu, int samples,
                   std::uint64_t seed, long long budget) {
  const int n = static_cast<int>(X.rows());
  Bracket out;
  out.lower_certified = d_hat(X, nu, budget);

  auto ratio = [&](const Matrix& Lambda) {
    const double norm = norm_2col(Lambda);
    if (norm < 1e-300) return std::numeric_limits<double>::infinity();
    return g_of_lambda(X, Lambda / norm, nu);
  };

  double best = std::numeric_limits<double>::infinity();
  // single-column axis slopes reach the single-mode optimum exactly
  for (int j = 0; j < n; ++j) {
    Matrix Lambda = Matrix::Zero(n, s);
    Lambda(j, 0) = 1.0;
    best = std::min(best, ratio(Lambda));
  }
  for (int k = 0; k < samples; ++k) {
    Rng rng = Rng::derived(seed, static_cast<std::uint64_t>(k));
    Matrix Lambda(n, s);
    for (int i = 0; i < s; ++i)
      for (int j = 0; j < n; ++j) Lambda(j, i) = rng.gaussian();
    double f = ratio(Lambda);
    double step = 0.5;
    Matrix cur = Lambda;
    for (int it = 0; it < 60 && step > 1e-9; ++it) {
      Matrix cand = cur;
      for (int i = 0; i < s; ++i)
        for (int j = 0; j < n; ++j) cand(j, i) += step * rng.gaussian();
      const double fc = ratio(cand);
      if (fc < f) {
        f = fc;
        cur = cand;
      } else {
        step *= 0.7;
      }
    }
    best = std::min(best, f);
  }
  out.upper_estimate = best;
  return out;
}

BoundValue theorem2_bound(const Dataset& data, const Matrix& A,
                          const Matrix& A_prime, int r, double xi_value,
                          XiSide side, double D_lower, int nu, double tie_tol) {
  BoundValue out;
  out.optimistic = side == XiSide::mc_lower;
  const ComparabilityVerdict verdict =
      comparability(data, A, A_prime, nu, tie_tol);
  if (!verdict.comparable) {
    out.status = BoundValue::Status::vacuous_comparability;
    return out;
  }
  if (xi_value >= 0.5) {
    out.status = BoundValue::Status::vacuous_xi;
    return out;
  }
  if (D_lower <= 0.0) {
    out.status = BoundValue::Status::vacuous_D;
    return out;
  }
  const AssignmentResult ra = canonical_assignment(data, A, tie_tol);
  const double numerator =
      cost(data, A_prime) - cost(data, A) + 2.0 * delta_r(ra.phi, r);
  if (numerator < 0.0) {
    // impossible under a true xi_r < 1/2: the Monte Carlo side understated xi
    out.status = BoundValue::Status::vacuous_xi;
    return out;
  }
  out.status = BoundValue::Status::value;
  out.value = numerator / (D_lower * (1.0 - 2.0 * xi_value));
  return out;
}

Corollary1Result corollary1_bound(const Dataset& data, const Matrix& A_true,
                                  const Matrix& A_hat,
                                  const std::vector<std::pair<int, double>>& xi_by_r,
                                  XiSide side, double D_lower, int nu,
                                  double tie_tol) {
  Corollary1Result res;
  res.bound.optimistic = side == XiSide::mc_lower;
  const ComparabilityVerdict verdict =
      comparability(data, A_true, A_hat, nu, tie_tol);
  if (!verdict.comparable) {
    res.bound.status = BoundValue::Status::vacuous_comparability;
    return res;
  }
  if (D_lower <= 0.0) {
    res.bound.status = BoundValue::Status::vacuous_D;
    return res;
  }
  const AssignmentResult ra = canonical_assignment(data, A_true, tie_tol);

  double best = std::numeric_limits<double>::infinity();
  double best_noise = std::numeric_limits<double>::infinity();
  for (const auto& [r, xi] : xi_by_r) {
    if (xi >= 0.5) continue;
    const double denom = D_lower * (1.0 - 2.0 * xi);
    const double dr = delta_r(ra.phi, r);
    const double value = 2.0 * dr / denom;
    if (value < best) {
      best = value;
      res.r_opt = r;
    }
    if (data.truth) {
      const double vr = l1_tail_norm(data.truth->v_true, r);
      best_noise = std::min(best_noise, 2.0 * vr / denom);
      if (dr > vr + 1e-9 * (1.0 + vr)) res.delta_le_noise = false;
    }
  }
  if (!res.r_opt) {
    res.bound.status = BoundValue::Status::vacuous_empty_grid;
    return res;
  }
  res.bound.status = BoundValue::Status::value;
  res.bound.value = best;
  if (data.truth) res.noise_bound = best_noise;
  return res;
}

Prop1Result proposition1_check(const Dataset& data, const Matrix& A_true,
                               double tie_tol) {
  if (!data.truth)
    throw std::invalid_argument("proposition1_check: dataset truth required");
  const int N = data.N();
  const int s = static_cast<int>(A_true.cols());
  if (s < 2)
    throw std::invalid_argument("proposition1_check: needs s >= 2");
  Prop1Result res;
  res.margin = std::numeric_limits<double>::infinity();
  for (int t = 0; t < N; ++t) {
    double sep = std::numeric_limits<double>::infinity();
    for (int i = 0; i < s; ++i)
      for (int j = 0; j < s; ++j) {
        if (i == j) continue;
        sep = std::min(sep, std::abs(data.X.col(t).dot(A_true.col(i) -
                                                       A_true.col(j))));
      }
    res.margin = std::min(res.margin, 0.5 * sep - std::abs(data.truth->v_true(t)));
  }
  res.condition_holds = res.margin > 0.0;
  const AssignmentResult asg = canonical_assignment(data, A_true, tie_tol);
  res.sigma_matches = asg.sigma == data.truth->sigma_true;
  // the implication is exact arithmetic; enforce it when the margin clears
  // the tie tolerance comfortably
  const double safety = 10.0 * tie_tol * (1.0 + data.y.cwiseAbs().maxCoeff());
  if (res.condition_holds && !res.sigma_matches && res.margin > safety)
    throw std::logic_error("proposition1_check: threshold condition held but "
                           "canonical assignment missed the true signal");
  return res;
}

CheckOutcome lemma7_check(const Dataset& data, const Matrix& A_true, int r,
                          double xi_value, XiSide side, double gamma_lower,
                          int m, int nu, double tie_tol) {
  if (side != XiSide::certified_upper) return CheckOutcome::not_applicable;
  const int s = static_cast<int>(A_true.cols());
  const int threshold = resolve_nu(data, nu);
  if (m < threshold) return CheckOutcome::not_applicable;
  const AssignmentResult asg = canonical_assignment(data, A_true, tie_tol);
  if (asg.min_cardinality < s * m) return CheckOutcome::not_applicable;
  if (xi_value >= 0.5 || gamma_lower <= 0.0) return CheckOutcome::not_applicable;

  double min_sep = std::numeric_limits<double>::infinity();
  for (int i = 0; i < s; ++i)
    for (int j = i + 1; j < s; ++j)
      min_sep = std::min(min_sep, (A_true.col(i) - A_true.col(j)).norm());
  const double rhs = 2.0 * delta_r(asg.phi, r) /
                     (gamma_lower * (1.0 - 2.0 * xi_value));
  return min_sep > rhs ? CheckOutcome::holds : CheckOutcome::fails;
}

Theorem1Result theorem1_check(const Dataset& data, const Matrix& A_tilde,
                              int r_star_lower, const Theorem1Options& opts) {
  Theorem1Result res;
  res.nu = opts.nu > 0
               ? opts.nu
               : genericity_index(data.X, 1e-9, opts.subset_budget).nu;
  const int s = static_cast<int>(A_tilde.cols());
  const AssignmentResult asg = canonical_assignment(data, A_tilde, opts.tie_tol);
  res.min_cardinality = asg.min_cardinality;

  const double zero_tol = opts.zero_tol >= 0
                              ? opts.zero_tol
                              : 1e-8 * (1.0 + data.y.cwiseAbs().maxCoeff());
  res.residual_support = 0;
  for (int t = 0; t < data.N(); ++t)
    if (std::abs(asg.phi(t)) > zero_tol) ++res.residual_support;

  bool distinct = true;
  const double col_scale = 1.0 + A_tilde.cwiseAbs().maxCoeff();
  for (int i = 0; i < s && distinct; ++i)
    for (int j = i + 1; j < s && distinct; ++j)
      if ((A_tilde.col(i) - A_tilde.col(j)).norm() <= 1e-12 * col_scale)
        distinct = false;

  res.unique_recovery_predicted = asg.min_cardinality >= s * res.nu &&
                                  res.residual_support <= r_star_lower &&
                                  distinct;

  double combos = 1.0;
  bool oracle_feasible = true;
  for (int t = 0; t < data.N() && oracle_feasible; ++t) {
    combos *= s;
    if (combos > static_cast<double>(opts.bruteforce_budget))
      oracle_feasible = false;
  }
  if (opts.run_oracle && oracle_feasible) {
    const EstimateResult oracle =
        lsm_bruteforce(data, s, opts.bruteforce_budget, opts.tie_tol);
    const double tol = opts.match_tol * (1.0 + A_tilde.cwiseAbs().maxCoeff());
    bool all_match = true;
    for (const Matrix& opt : oracle.optima)
      all_match = all_match && matched_column_distance(opt, A_tilde) <= tol;
    res.witnessed = all_match;
    if (res.unique_recovery_predicted && !all_match)
      throw std::logic_error(
          "theorem1_check: predicted unique recovery but the oracle found a "
          "different optimum");
  }
  return res;
}

double matched_error_2col(const Matrix& A_true, const Matrix& A_hat,
                          const std::optional<std::vector<int>>& pi) {
  if (pi) {
    double total = 0.0;
    for (int i = 0; i < A_true.cols(); ++i)
      total += (A_true.col(i) - A_hat.col((*pi)[i])).norm();
    return total;
  }
  return matched_column_distance(A_true, A_hat);
}

namespace {

nlohmann::json bound_value_to_json(const BoundValue& bv) {
  nlohmann::json j;
  switch (bv.status) {
    case BoundValue::Status::value:
      j["value"] = bv.value;
      break;
    case BoundValue::Status::vacuous_xi:
      j["vacuous"] = "xi_at_least_half";
      break;
    case BoundValue::Status::vacuous_D:
      j["vacuous"] = "no_positive_D_lower";
      break;
    case BoundValue::Status::vacuous_comparability:
      j["vacuous"] = "not_comparable";
      break;
    case BoundValue::Status::vacuous_empty_grid:
      j["vacuous"] = "empty_admissible_r_grid";
      break;
  }
  j["tag"] = bv.optimistic ? "optimistic" : "certified";
  return j;
}

}  // namespace

std::string bound_report_to_json(const BoundReport& rep) {
  nlohmann::json j;
  j["r_used"] = rep.r_used;
  j["xi_used"] = rep.xi_used;
  j["xi_side"] =
      rep.xi_side == XiSide::certified_upper ? "certified_upper" : "mc_lower";
  j["delta_r_value"] = rep.delta_r_value;
  j["D_lower"] = rep.D_lower;
  j["theorem2_bound"] = bound_value_to_json(rep.theorem2);
  j["corollary1_bound"] = bound_value_to_json(rep.corollary1.bound);
  if (rep.corollary1.r_opt) j["corollary1_bound"]["r_opt"] = *rep.corollary1.r_opt;
  if (rep.corollary1.noise_bound)
    j["corollary1_bound"]["noise_bound"] = *rep.corollary1.noise_bound;
  j["corollary1_bound"]["delta_le_noise"] = rep.corollary1.delta_le_noise;
  nlohmann::json conds = nlohmann::json::object();
  for (const auto& c : rep.conditions) {
    nlohmann::json e;
    if (c.holds)
      e["holds"] = *c.holds;
    else
      e["holds"] = "not_applicable";
    if (c.margin) e["margin"] = *c.margin;
    conds[c.name] = e;
  }
  j["conditions"] = conds;
  if (rep.matched_error) j["matched_error"] = *rep.matched_error;
  return j.dump(2) + "\n";
}

std::string condition_table_csv(const std::vector<ConditionFlag>& flags) {
  std::ostringstream out;
  out << "condition,holds,margin\n";
  for (const auto& c : flags) {
    out << c.name << ",";
    if (c.holds)
      out << (*c.holds ? "true" : "false");
    else
      out << "not_applicable";
    out << ",";
    if (c.margin) out << format_double(*c.margin);
    out << "\n";
  }
  return out.str();
}

}  // namespace lsm
