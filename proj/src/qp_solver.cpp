#include "dloe/qp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace dloe {

double SimplexQP::Objective(const VecX& x) const {
  return 0.5 * x.dot(hessian * x) + linear.dot(x);
}

namespace {

VecX Gradient(const SimplexQP& qp, const VecX& x,
              const std::vector<int>& support) {
  VecX g = qp.linear;
  for (int j : support) g.noalias() += qp.hessian.col(j) * x(j);
  return g;
}

std::vector<int> SupportOf(const VecX& x) {
  std::vector<int> s;
  for (int j = 0; j < x.size(); ++j)
    if (x(j) > 0.0) s.push_back(j);
  return s;
}

void Renormalize(VecX& x, double target) {
  x = x.cwiseMax(0.0);
  const double sum = x.sum();
  if (sum > 0.0) x *= target / sum;
}

}  // namespace

SimplexQPResult SolveSimplexQPDetailed(const SimplexQP& qp,
                                       const std::optional<VecX>& start) {
  const int n = qp.size();
  if (qp.hessian.rows() != n || qp.hessian.cols() != n)
    throw Error("QP dimension mismatch");
  if (!(qp.sum_target > 0.0)) throw Error("infeasible");

  std::vector<char> pinned(n, 0);
  for (int k : qp.fixed_zero) {
    if (k < 0 || k >= n) throw Error("fixed index out of range");
    pinned[k] = 1;
  }
  if (std::count(pinned.begin(), pinned.end(), 0) == 0)
    throw Error("infeasible");

  const double t = qp.sum_target;
  const double q_scale =
      n > 0 ? qp.hessian.cwiseAbs().maxCoeff() : 0.0;
  if ((qp.hessian - qp.hessian.transpose()).cwiseAbs().maxCoeff() >
      1e-9 * std::max(1.0, q_scale))
    throw Error("nonconvex subproblem");
  for (int j = 0; j < n; ++j)
    if (!pinned[j] && qp.hessian(j, j) < -1e-12 * std::max(1.0, q_scale))
      throw Error("nonconvex subproblem");
  if (qp.check_convexity) {
    std::vector<int> free;
    for (int j = 0; j < n; ++j)
      if (!pinned[j]) free.push_back(j);
    MatX qff(free.size(), free.size());
    for (size_t a = 0; a < free.size(); ++a)
      for (size_t b = 0; b < free.size(); ++b)
        qff(a, b) = qp.hessian(free[a], free[b]);
    const Eigen::SelfAdjointEigenSolver<MatX> eig(qff,
                                                  Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-9 * std::max(1.0, q_scale))
      throw Error("nonconvex subproblem");
  }

  // Gradient magnitudes are O(|Q| t + |c|); multiplier and null-space tests
  // are relative to that.
  const double g_scale =
      std::max(q_scale * t + qp.linear.cwiseAbs().maxCoeff(), 1e-300);
  const double mult_tol = 1e-13 * g_scale;

  VecX x = VecX::Zero(n);
  bool warm = false;
  if (start && start->size() == n && start->allFinite()) {
    VecX s = *start;
    bool ok = s.minCoeff() >= -1e-12 * t &&
              std::abs(s.sum() - t) <= 1e-9 * t;
    for (int j = 0; j < n && ok; ++j)
      if (pinned[j] && std::abs(s(j)) > 1e-12 * t) ok = false;
    if (ok) {
      for (int j = 0; j < n; ++j)
        if (pinned[j]) s(j) = 0.0;
      Renormalize(s, t);
      if (s.sum() > 0.0) {
        x = s;
        warm = true;
      }
    }
  }
  if (!warm) {
    int best = -1;
    double best_value = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      if (pinned[j]) continue;
      const double v = 0.5 * t * t * qp.hessian(j, j) + t * qp.linear(j);
      if (v < best_value) {
        best_value = v;
        best = j;
      }
    }
    x(best) = t;
  }

  std::vector<int> free_set = SupportOf(x);
  SimplexQPResult result;
  const int max_iterations = 10 * n;
  bool converged = false;
  int it = 0;
  // Set after an unblocked Newton step: x minimises over the free set, and
  // recomputing the step would only return roundoff.
  bool subspace_optimal = false;
  for (; it < max_iterations; ++it) {
    const VecX g = Gradient(qp, x, free_set);
    const int k = static_cast<int>(free_set.size());

    VecX step = VecX::Zero(k);
    bool unbounded = false;
    if (k > 1 && !subspace_optimal) {
      // Null-space basis of 1^T on the free set: Z = [I_{k-1}; -1^T].
      const int m = k - 1;
      MatX qff(k, k);
      VecX gf(k);
      for (int a = 0; a < k; ++a) {
        gf(a) = g(free_set[a]);
        for (int b = 0; b < k; ++b)
          qff(a, b) = qp.hessian(free_set[a], free_set[b]);
      }
      MatX hr = qff.topLeftCorner(m, m);
      hr.colwise() -= qff.col(m).head(m);
      hr.rowwise() -= qff.row(m).head(m);
      hr.array() += qff(m, m);
      const VecX gr = gf.head(m).array() - gf(m);

      Eigen::SelfAdjointEigenSolver<MatX> eig(hr);
      const VecX& lambda = eig.eigenvalues();
      const MatX& V = eig.eigenvectors();
      const double curv_tol =
          1e-11 * std::max(lambda.cwiseAbs().maxCoeff(), q_scale);
      if (lambda.minCoeff() < -std::max(1e-9 * q_scale, 1e-300))
        throw Error("nonconvex subproblem");

      const VecX z = V.transpose() * gr;
      VecX y = VecX::Zero(m);
      VecX y_null = VecX::Zero(m);
      for (int i = 0; i < m; ++i) {
        if (lambda(i) > curv_tol)
          y -= (z(i) / lambda(i)) * V.col(i);
        else if (std::abs(z(i)) > mult_tol)
          y_null -= z(i) * V.col(i);
      }
      if (y_null.squaredNorm() > 0.0) {
        unbounded = true;
        y = y_null;
      }
      step.head(m) = y;
      step(m) = -y.sum();
    }

    const double step_norm = step.cwiseAbs().maxCoeff();
    if (k <= 1 || step_norm <= 1e-15 * t) {
      // Optimal on the free set: price out the bound variables.
      double mu = 0.0;
      for (int j : free_set) mu += g(j);
      mu /= std::max(1, k);
      int entering = -1;
      double most_negative = -mult_tol;
      std::vector<char> in_free(n, 0);
      for (int j : free_set) in_free[j] = 1;
      for (int j = 0; j < n; ++j) {
        if (pinned[j] || in_free[j]) continue;
        const double price = g(j) - mu;
        if (price < most_negative) {
          most_negative = price;
          entering = j;
        }
      }
      if (entering < 0) {
        converged = true;
        break;
      }
      free_set.insert(
          std::lower_bound(free_set.begin(), free_set.end(), entering),
          entering);
      subspace_optimal = false;
      continue;
    }

    double alpha = unbounded ? std::numeric_limits<double>::infinity() : 1.0;
    int blocking = -1;
    for (int a = 0; a < k; ++a) {
      if (step(a) >= 0.0) continue;
      const double ratio = -x(free_set[a]) / step(a);
      if (ratio < alpha) {
        alpha = ratio;
        blocking = a;
      }
    }
    if (!std::isfinite(alpha)) {
      // Unreachable for a nonzero step summing to zero; guard anyway.
      converged = false;
      break;
    }
    for (int a = 0; a < k; ++a)
      x(free_set[a]) = std::max(0.0, x(free_set[a]) + alpha * step(a));
    if (blocking >= 0) {
      x(free_set[blocking]) = 0.0;
      free_set.erase(free_set.begin() + blocking);
    } else if (!unbounded) {
      subspace_optimal = true;
    }
  }

  Renormalize(x, t);
  result.x = x;
  result.objective = qp.Objective(x);
  result.iterations = it;
  result.converged = converged;
  return result;
}

VecX SolveSimplexQP(const SimplexQP& qp, const std::optional<VecX>& start) {
  return SolveSimplexQPDetailed(qp, start).x;
}

double SimplexKKTResidual(const SimplexQP& qp, const VecX& x) {
  const VecX g = qp.hessian * x + qp.linear;
  std::vector<char> pinned(qp.size(), 0);
  for (int k : qp.fixed_zero) pinned[k] = 1;
  double mu = 0.0;
  int count = 0;
  for (int j = 0; j < qp.size(); ++j)
    if (x(j) > 0.0) {
      mu += g(j);
      ++count;
    }
  if (count == 0) return std::numeric_limits<double>::infinity();
  mu /= count;
  double residual = 0.0;
  for (int j = 0; j < qp.size(); ++j) {
    if (pinned[j]) continue;
    if (x(j) > 0.0)
      residual = std::max(residual, std::abs(g(j) - mu));
    else
      residual = std::max(residual, mu - g(j));
  }
  return residual;
}

}  // namespace dloe
