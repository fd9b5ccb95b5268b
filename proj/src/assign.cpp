#include "lsm/assign.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lsm/flow.hpp"

namespace lsm {

namespace {

// True when every mode can reach `target` members using only the free
// samples, given `fixed` members already committed per mode.
bool quotas_feasible(const std::vector<std::vector<int>>& admissible,
                     const std::vector<int>& free_samples,
                     const std::vector<int>& fixed, int target) {
  const int s = static_cast<int>(fixed.size());
  int total_demand = 0;
  std::vector<int> demand(s);
  for (int i = 0; i < s; ++i) {
    demand[i] = std::max(0, target - fixed[i]);
    total_demand += demand[i];
  }
  if (total_demand == 0) return true;
  if (total_demand > static_cast<int>(free_samples.size())) return false;

  // nodes: 0 source, 1..F free samples, F+1..F+s modes, F+s+1 sink
  const int F = static_cast<int>(free_samples.size());
  MaxFlow flow(F + s + 2);
  const int src = 0;
  const int snk = F + s + 1;
  for (int k = 0; k < F; ++k) {
    flow.add_edge(src, 1 + k, 1);
    for (int mode : admissible[free_samples[k]])
      flow.add_edge(1 + k, F + 1 + mode, 1);
  }
  for (int i = 0; i < s; ++i)
    if (demand[i] > 0) flow.add_edge(F + 1 + i, snk, demand[i]);
  return flow.solve(src, snk) == total_demand;
}

}  // namespace

AssignmentResult canonical_assignment(const Dataset& data, const Matrix& A,
                                      double tie_tol) {
  const int N = data.N();
  const int n = data.n();
  const int s = static_cast<int>(A.cols());
  if (A.rows() != n)
    throw std::invalid_argument("canonical_assignment: A row dimension mismatch");
  if (tie_tol < 0) throw std::invalid_argument("canonical_assignment: tie_tol < 0");

  // residual magnitudes and admissible label sets
  Matrix R(s, N);
  for (int i = 0; i < s; ++i)
    R.row(i) = (data.y.transpose() - A.col(i).transpose() * data.X);
  std::vector<std::vector<int>> admissible(N);
  for (int t = 0; t < N; ++t) {
    double best = std::abs(R(0, t));
    for (int i = 1; i < s; ++i) best = std::min(best, std::abs(R(i, t)));
    const double cutoff = best + tie_tol * (1.0 + best);
    for (int i = 0; i < s; ++i)
      if (std::abs(R(i, t)) <= cutoff) admissible[t].push_back(i);
  }

  // largest feasible minimum cardinality, scanning k downward
  std::vector<int> all_samples(N);
  std::iota(all_samples.begin(), all_samples.end(), 0);
  std::vector<int> zero_fixed(s, 0);
  int k_star = 0;
  for (int k = N / s; k >= 1; --k) {
    if (quotas_feasible(admissible, all_samples, zero_fixed, k)) {
      k_star = k;
      break;
    }
  }

  // lexicographically smallest completion that keeps k_star achievable
  AssignmentResult res;
  res.sigma.assign(N, 0);
  std::vector<int> fixed(s, 0);
  for (int t = 0; t < N; ++t) {
    std::vector<int> remaining(all_samples.begin() + t + 1, all_samples.end());
    bool placed = false;
    for (int mode : admissible[t]) {
      ++fixed[mode];
      if (quotas_feasible(admissible, remaining, fixed, k_star)) {
        res.sigma[t] = mode + 1;
        placed = true;
        break;
      }
      --fixed[mode];
    }
    if (!placed)
      throw std::logic_error("canonical_assignment: completion infeasible");
  }

  res.partition.assign(s, {});
  res.phi = Vector(N);
  res.cost = 0.0;
  for (int t = 0; t < N; ++t) {
    const int i = res.sigma[t] - 1;
    res.partition[i].push_back(t);
    res.phi(t) = R(i, t);
    res.cost += std::abs(res.phi(t));
  }
  res.min_cardinality = N;
  for (int i = 0; i < s; ++i)
    res.min_cardinality =
        std::min(res.min_cardinality, static_cast<int>(res.partition[i].size()));
  return res;
}

double cost(const Dataset& data, const Matrix& A) {
  const int N = data.N();
  const int s = static_cast<int>(A.cols());
  if (A.rows() != data.n())
    throw std::invalid_argument("cost: A row dimension mismatch");
  double total = 0.0;
  for (int t = 0; t < N; ++t) {
    double best = std::abs(data.y(t) - data.X.col(t).dot(A.col(0)));
    for (int i = 1; i < s; ++i)
      best = std::min(best, std::abs(data.y(t) - data.X.col(t).dot(A.col(i))));
    total += best;
  }
  return total;
}

double delta_r(const Vector& phi, int r) {
  const int N = static_cast<int>(phi.size());
  if (r < 0 || r > N) throw std::invalid_argument("delta_r: r out of range");
  std::vector<double> mags(N);
  for (int t = 0; t < N; ++t) mags[t] = std::abs(phi(t));
  std::sort(mags.begin(), mags.end());
  double sum = 0.0;
  for (int t = 0; t < N - r; ++t) sum += mags[t];
  return sum;
}

double l1_tail_norm(const Vector& v, int r) { return delta_r(v, r); }

std::vector<int> top_r_indices(const Vector& v, int r) {
  const int N = static_cast<int>(v.size());
  if (r < 0 || r > N) throw std::invalid_argument("top_r_indices: r out of range");
  std::vector<int> idx(N);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return std::abs(v(a)) > std::abs(v(b));
  });
  idx.resize(r);
  return idx;
}

double lemma1_gap(const Vector& v, const Vector& v_prime, int r) {
  const int N = static_cast<int>(v.size());
  if (v_prime.size() != N)
    throw std::invalid_argument("lemma1_gap: length mismatch");
  if (r < 0 || r > N) throw std::invalid_argument("lemma1_gap: r out of range");
  const Vector diff = v_prime - v;
  double diff_on_top = 0.0;
  for (int t : top_r_indices(v, r)) diff_on_top += std::abs(diff(t));
  const double lhs = diff.lpNorm<1>() - 2.0 * diff_on_top;
  const double rhs =
      v_prime.lpNorm<1>() - v.lpNorm<1>() + 2.0 * delta_r(v, r);
  return rhs - lhs;
}

}  // namespace lsm
