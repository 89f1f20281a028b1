#ifndef DLOE_OBJECTIVE_HPP_
#define DLOE_OBJECTIVE_HPP_

#include "dloe/embedding.hpp"
#include "dloe/laplacian_graph.hpp"
#include "dloe/scene_model.hpp"

namespace dloe {

struct CostWeights {
  double lambda1 = 1e-5;   // T: collapsing neighbourhood
  double lambda2 = 0.0015;  // O: point-to-ray distance
  double lambda3 = 0.02;   // R: ray convergence
  // Multiplier on S. Only the ablation harness sets this to zero.
  double smoothness = 1.0;

  void Validate() const;
};

struct CostBreakdown {
  double s = 0.0;
  double t = 0.0;
  double o = 0.0;
  double r = 0.0;
  double total = 0.0;
};

// (1/P) ||D (I - W) X||_F^2 with X viewed as N x 3P.
double SmoothnessTerm(const LaplaceFactors& factors, const StructureMatrix& X);

// (lambda1/P) sum_ij D_ii W_ij ||X_i - X_j||^2.
double TraceTerm(const LaplaceFactors& factors, const StructureMatrix& X,
                 const CostWeights& w);

// (lambda1/P) sum_ij D_ii W_ij (f_i - f_j)^2.
double SpectralTraceTerm(const LaplaceFactors& factors, const VecX& f,
                         const CostWeights& w, int num_points);

// (lambda2/NP) sum over present (n,p) of the squared point-to-ray distance.
double RayTerm(const SceneObservations& scene, const StructureMatrix& X,
               const CostWeights& w);

// c_ij = sum over points present in both i and j of (r_ip . r_jp)^2.
MatX RayCosineSquares(const SceneObservations& scene);

// (lambda3/NP) sum_ijp (D_ii W_ij (r_ip . r_jp))^2 over pairs present in both.
double ReconstructabilityTerm(const SceneObservations& scene,
                              const LaplaceFactors& factors,
                              const CostWeights& w);
double ReconstructabilityTerm(const MatX& ray_cosine_squares,
                              const LaplaceFactors& factors,
                              const CostWeights& w, int num_points);

// S + T + O + R. With `prior`, T is evaluated on the line embedding instead
// of X. S is scaled by w.smoothness.
CostBreakdown TotalCost(const SceneObservations& scene,
                        const StructureMatrix& X,
                        const LaplaceFactors& factors, const CostWeights& w,
                        const LineEmbedding* prior = nullptr);

// Gradient of TotalCost (without prior) with respect to X, as N x 3P.
MatX TotalCostGradient(const SceneObservations& scene,
                       const StructureMatrix& X,
                       const LaplaceFactors& factors, const CostWeights& w);

}  // namespace dloe

#endif  // DLOE_OBJECTIVE_HPP_
