#ifndef DLOE_LAPLACIAN_GRAPH_HPP_
#define DLOE_LAPLACIAN_GRAPH_HPP_

#include <vector>

#include "dloe/types.hpp"

namespace dloe {

// Laplacian of the structure graph kept in factored form L = D(I - W).
// `degree` is the diagonal of D (nonnegative, trace 1); `weight` is
// row-stochastic with a zero diagonal. A, L and L<-> are derived on demand.
struct LaplaceFactors {
  VecX degree;
  MatX weight;

  int size() const { return static_cast<int>(degree.size()); }

  // A = D W.
  MatX Affinity() const;
  // L = D (I - W).
  MatX Laplacian() const;
  // L_[A + A^T] = diag((A + A^T) 1) - (A + A^T).
  MatX SymmetrizedLaplacian() const;

  // Throws Error naming the first violated invariant (tolerance 1e-9).
  void Validate() const;

  // D = I/N with the given W.
  static LaplaceFactors Uniform(MatX weight);
};

// Chain graph over the given node order: interior nodes split weight 1/2
// between their two neighbours, endpoints put 1 on their single neighbour.
MatX ChainWeights(const std::vector<int>& order, int n);

// Laplacian of an arbitrary affinity matrix: diag(A 1) - A.
MatX LaplacianOf(const MatX& affinity);

MatX BuildLaplacian(const LaplaceFactors& factors);
MatX SymmetrizedLaplacian(const LaplaceFactors& factors);

struct EventPartition {
  std::vector<int> component_id;
  int component_count = 0;

  // Image indices of each component, ascending.
  std::vector<std::vector<int>> Components() const;
};

// Default edge threshold for event segmentation: 1e-6 * max(A).
double DefaultAffinityThreshold(const LaplaceFactors& factors);

// Connected components of the undirected graph with an edge (i, j) whenever
// (A + A^T)_ij > threshold. Labels follow first appearance in image order.
EventPartition SegmentEvents(const LaplaceFactors& factors,
                             double affinity_threshold);

}  // namespace dloe

#endif  // DLOE_LAPLACIAN_GRAPH_HPP_
