#ifndef LSM_LINPROG_HPP_
#define LSM_LINPROG_HPP_

#include "lsm/types.hpp"

namespace lsm {

enum class LpStatus { optimal, infeasible, unbounded };

struct LpSolution {
  LpStatus status = LpStatus::optimal;
  Vector x;           // primal point (original free variables)
  double objective = 0.0;
  // True when a nonbasic column prices out at zero: alternative optima
  // may exist (vertex returned is one of them).
  bool degenerate = false;
};

// Minimize c.x subject to A x <= b with all variables free.
//
// Dense two-phase primal simplex: Dantzig pricing with lowest-index
// tie-breaks, Bland's rule after a stall, deterministic throughout.  Sized
// for the desk-scale LPs this project produces (hundreds of rows).
LpSolution solve_lp_inequality(const Vector& c, const Matrix& A, const Vector& b);

}  // namespace lsm

#endif  // LSM_LINPROG_HPP_
