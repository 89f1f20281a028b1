#ifndef DLOE_ACS_SOLVER_HPP_
#define DLOE_ACS_SOLVER_HPP_

#include <optional>
#include <vector>

#include "dloe/embedding.hpp"
#include "dloe/laplacian_graph.hpp"
#include "dloe/objective.hpp"
#include "dloe/scene_model.hpp"

namespace dloe {

struct SolverConfig {
  CostWeights weights;
  int max_iterations = 300;
  // Relative change of the total cost over one full (W, D, X) sweep.
  double convergence_rel_tol = 1e-6;
  // Lower bound on every D_ii; <= 0 selects 1e-6 / N.
  double epsilon_degree = 0.0;
  // W_prior entry between consecutive frames of a stream.
  double w_prior_value = 0.05;
  // The intra-stream prior is applied only when the scene carries streams.
  bool use_stream_prior = true;
  bool use_spectral_prior = false;
  EmbeddingMethod embedding_method = EmbeddingMethod::kMds;
  DistanceKind distance_kind = DistanceKind::kEuclidean;
  // Workers for the W rows; <= 0 uses DefaultThreadCount().
  int threads = 0;

  void Validate() const;
  double EpsilonFor(int num_images) const;
};

struct SolveResult {
  StructureMatrix structure;
  LaplaceFactors factors;
  // One entry after every block step, in W, D, X order per sweep.
  std::vector<CostBreakdown> cost_history;
  int iterations = 0;
  bool converged = false;
  // Last line embedding used by the spectral prior.
  std::optional<LineEmbedding> embedding;
  StructureMatrix initial_structure;
  // Some QP hit its iteration cap and returned its best feasible iterate.
  bool qp_degraded = false;
  // Some X step had a singular system and fell back to a proximal step.
  bool x_proximal = false;
};

// Sparse additive weights on the previous and next frame of each image's
// stream, stored densely (N x N).
struct IntraStreamPrior {
  MatX prior;

  static IntraStreamPrior None(int num_images);
  static IntraStreamPrior FromStreams(const SceneObservations& scene,
                                      double value);
};

// Scene-dependent quantities shared by the three block steps.
struct BlockProblem {
  const SceneObservations* scene = nullptr;
  CostWeights weights;
  IntraStreamPrior prior;
  MatX ray_cosine_squares;
  int threads = 0;

  BlockProblem(const SceneObservations& scene, const CostWeights& weights,
               IntraStreamPrior prior, int threads = 0);

  CostBreakdown Cost(const StructureMatrix& X, const LaplaceFactors& factors,
                     const LineEmbedding* f) const;
};

// Exact minimiser over W (returned as W_var + W_prior). Each row is a simplex
// QP with the diagonal pinned to zero and row budget 1 - sum(prior row).
// With `f`, the T term uses the line embedding instead of X.
MatX StepW(const BlockProblem& problem, const StructureMatrix& X,
           const VecX* f, const VecX& degree,
           const MatX* warm_start = nullptr, bool* degraded = nullptr);

// Exact minimiser over diag(D) subject to trace 1 and D_ii >= epsilon.
VecX StepD(const BlockProblem& problem, const StructureMatrix& X,
           const VecX* f, const MatX& weight, double epsilon,
           const VecX* warm_start = nullptr, bool* degraded = nullptr);

// Exact minimiser over X of S + T + O (T omitted when `include_trace` is
// false). Throws Error("unconstrained point") for a singular system unless
// `anchor` is given: singular points then get the proximal step
// argmin cost + mu |x - anchor|^2 with a tiny mu, which never increases the
// cost relative to the anchor. `proximal` is set when that happens.
StructureMatrix StepX(const BlockProblem& problem,
                      const LaplaceFactors& factors, bool include_trace = true,
                      const StructureMatrix* anchor = nullptr,
                      bool* proximal = nullptr);

// Convenience forms without a shared BlockProblem.
StructureMatrix StepX(const SceneObservations& scene,
                      const LaplaceFactors& factors, const CostWeights& w);
MatX StepW(const SceneObservations& scene, const StructureMatrix& X,
           const VecX& degree, const CostWeights& w,
           const IntraStreamPrior& prior);
VecX StepD(const SceneObservations& scene, const StructureMatrix& X,
           const MatX& weight, const CostWeights& w, double epsilon);

// Alternating convex search over (W, D, X) from the pseudo-triangulated
// structure (or `initial`) and D = I/N.
SolveResult Solve(const SceneObservations& scene, const SolverConfig& config,
                  const StructureMatrix* initial = nullptr);

// Temporal scores of a solve: the spectral prior's last embedding when
// present, else the Fiedler ordering of the learned weights, else (graph
// disconnected) the shortest-path embedding of the estimate.
VecX RecoveredScores(const SolveResult& result);

}  // namespace dloe

#endif  // DLOE_ACS_SOLVER_HPP_
