#ifndef LSM_ASSIGN_HPP_
#define LSM_ASSIGN_HPP_

#include <vector>

#include "lsm/types.hpp"

namespace lsm {

constexpr double kDefaultTieTol = 1e-9;

// Canonical per-sample assignment induced by a candidate parameter matrix.
struct AssignmentResult {
  std::vector<int> sigma;               // labels in {1..s}, length N
  std::vector<std::vector<int>> partition;  // s lists of 0-based time indices
  Vector phi;                           // residual y_t - x_t . a_{sigma(t)}
  double cost = 0.0;                    // sum |phi_t|
  int min_cardinality = 0;              // min_i |I_i|
};

// Selects, among all per-sample residual argmins (ties within
// tie_tol * (1 + min residual)), the labeling that maximizes the smallest
// mode cardinality; among those, the lexicographically smallest label
// sequence.  Feasibility of a candidate minimum cardinality is decided by a
// bipartite max-flow check.
AssignmentResult canonical_assignment(const Dataset& data, const Matrix& A,
                                      double tie_tol = kDefaultTieTol);

// J(A) = sum_t min_i |y_t - x_t . a_i|.
double cost(const Dataset& data, const Matrix& A);

// Sum of the N-r smallest |phi_t| (the l1 distance from phi to the set of
// r-sparse vectors).  delta_0 = |phi|_1, delta_N = 0.
double delta_r(const Vector& phi, int r);

// Sum of the N-r smallest |v_t| of an arbitrary vector (same operation as
// delta_r; exposed under the report name used for noise sequences).
double l1_tail_norm(const Vector& v, int r);

// Indices of the r largest |v_t|, ties broken toward the smallest index.
std::vector<int> top_r_indices(const Vector& v, int r);

// RHS - LHS of the sparse-truncation inequality
//   |v'-v|_1 - 2|(v'-v)_{T_r(v)}|_1 <= |v'|_1 - |v|_1 + 2 inf_{w r-sparse} |w-v|_1.
// Nonnegative up to roundoff.
double lemma1_gap(const Vector& v, const Vector& v_prime, int r);

}  // namespace lsm

#endif  // LSM_ASSIGN_HPP_
