#include "dloe/laplacian_graph.hpp"

#include <cmath>
#include <string>

namespace dloe {

MatX LaplaceFactors::Affinity() const { return degree.asDiagonal() * weight; }

MatX LaplaceFactors::Laplacian() const {
  const int n = size();
  return degree.asDiagonal() * (MatX::Identity(n, n) - weight);
}

MatX LaplaceFactors::SymmetrizedLaplacian() const {
  const MatX A = Affinity();
  return LaplacianOf(A + A.transpose());
}

void LaplaceFactors::Validate() const {
  const int n = size();
  if (weight.rows() != n || weight.cols() != n)
    throw Error("weight matrix must be N x N");
  if (!degree.allFinite() || !weight.allFinite())
    throw Error("non-finite Laplace factors");
  if (degree.minCoeff() < 0.0) throw Error("negative degree");
  if (std::abs(degree.sum() - 1.0) > 1e-9) throw Error("degree trace is not 1");
  if (weight.minCoeff() < 0.0) throw Error("negative weight");
  for (int i = 0; i < n; ++i) {
    if (weight(i, i) != 0.0) throw Error("nonzero weight diagonal");
    if (std::abs(weight.row(i).sum() - 1.0) > 1e-9)
      throw Error("weight row " + std::to_string(i) + " is not stochastic");
  }
}

LaplaceFactors LaplaceFactors::Uniform(MatX weight) {
  const int n = static_cast<int>(weight.rows());
  return {VecX::Constant(n, 1.0 / n), std::move(weight)};
}

MatX ChainWeights(const std::vector<int>& order, int n) {
  MatX W = MatX::Zero(n, n);
  const int m = static_cast<int>(order.size());
  for (int k = 0; k < m; ++k) {
    const int i = order[k];
    if (k == 0 && m > 1) {
      W(i, order[1]) = 1.0;
    } else if (k == m - 1 && m > 1) {
      W(i, order[m - 2]) = 1.0;
    } else if (m > 1) {
      W(i, order[k - 1]) = 0.5;
      W(i, order[k + 1]) = 0.5;
    }
  }
  return W;
}

MatX LaplacianOf(const MatX& affinity) {
  MatX L = -affinity;
  L.diagonal() += affinity.rowwise().sum();
  return L;
}

MatX BuildLaplacian(const LaplaceFactors& factors) {
  return factors.Laplacian();
}

MatX SymmetrizedLaplacian(const LaplaceFactors& factors) {
  return factors.SymmetrizedLaplacian();
}

std::vector<std::vector<int>> EventPartition::Components() const {
  std::vector<std::vector<int>> out(component_count);
  for (int i = 0; i < static_cast<int>(component_id.size()); ++i)
    out[component_id[i]].push_back(i);
  return out;
}

double DefaultAffinityThreshold(const LaplaceFactors& factors) {
  return 1e-6 * factors.Affinity().maxCoeff();
}

EventPartition SegmentEvents(const LaplaceFactors& factors,
                             double affinity_threshold) {
  if (affinity_threshold < 0.0) throw Error("negative affinity threshold");
  const MatX A = factors.Affinity();
  const MatX sym = A + A.transpose();
  const int n = factors.size();

  EventPartition out;
  out.component_id.assign(n, -1);
  std::vector<int> stack;
  for (int seed = 0; seed < n; ++seed) {
    if (out.component_id[seed] >= 0) continue;
    const int label = out.component_count++;
    out.component_id[seed] = label;
    stack.push_back(seed);
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      for (int j = 0; j < n; ++j) {
        if (out.component_id[j] < 0 && sym(i, j) > affinity_threshold) {
          out.component_id[j] = label;
          stack.push_back(j);
        }
      }
    }
  }
  return out;
}

}  // namespace dloe
