#ifndef DLOE_QP_SOLVER_HPP_
#define DLOE_QP_SOLVER_HPP_

#include <optional>
#include <vector>

#include "dloe/types.hpp"

namespace dloe {

// min 1/2 x^T Q x + c^T x  s.t.  sum(x) = sum_target, x >= 0,
//                                x_k = 0 for k in fixed_zero.
struct SimplexQP {
  MatX hessian;
  VecX linear;
  std::vector<int> fixed_zero;
  double sum_target = 1.0;
  // Full eigenvalue test of Q over the free variables before solving. Callers
  // whose Hessian is a Gram matrix by construction may skip it; indefinite
  // curvature met during the iterations is reported either way.
  bool check_convexity = true;

  int size() const { return static_cast<int>(linear.size()); }
  double Objective(const VecX& x) const;
};

struct SimplexQPResult {
  VecX x;
  double objective = 0.0;
  int iterations = 0;
  // False when the iteration cap (10 n) was reached; x is then the best
  // feasible iterate.
  bool converged = true;
};

// Primal active-set method. Starts from `start` when it is feasible, else
// from the cheapest feasible vertex. Ties (entering or blocking variables)
// go to the lowest index. Throws Error("infeasible") for an empty feasible
// set and Error("nonconvex subproblem") for indefinite curvature.
SimplexQPResult SolveSimplexQPDetailed(const SimplexQP& qp,
                                       const std::optional<VecX>& start = {});
VecX SolveSimplexQP(const SimplexQP& qp,
                    const std::optional<VecX>& start = {});

// Largest violation of the KKT conditions at a feasible x: spread of the
// gradient over the support and shortfall of off-support gradient entries
// below the support multiplier.
double SimplexKKTResidual(const SimplexQP& qp, const VecX& x);

}  // namespace dloe

#endif  // DLOE_QP_SOLVER_HPP_
