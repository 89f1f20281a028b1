#include "dloe/objective.hpp"

#include <cmath>

namespace dloe {

void CostWeights::Validate() const {
  for (double v : {lambda1, lambda2, lambda3, smoothness})
    if (!std::isfinite(v) || v < 0.0)
      throw Error("cost weights must be finite and nonnegative");
}

double SmoothnessTerm(const LaplaceFactors& factors, const StructureMatrix& X) {
  return (factors.Laplacian() * X.values()).squaredNorm() / X.num_points();
}

double TraceTerm(const LaplaceFactors& factors, const StructureMatrix& X,
                 const CostWeights& w) {
  const int n = factors.size();
  const MatX& values = X.values();
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double a = factors.degree(i) * factors.weight(i, j);
      if (a != 0.0) sum += a * (values.row(i) - values.row(j)).squaredNorm();
    }
  return w.lambda1 * sum / X.num_points();
}

double SpectralTraceTerm(const LaplaceFactors& factors, const VecX& f,
                         const CostWeights& w, int num_points) {
  if (f.size() != factors.size()) throw Error("embedding length mismatch");
  const int n = factors.size();
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double a = factors.degree(i) * factors.weight(i, j);
      const double d = f(i) - f(j);
      sum += a * d * d;
    }
  return w.lambda1 * sum / num_points;
}

double RayTerm(const SceneObservations& scene, const StructureMatrix& X,
               const CostWeights& w) {
  const int N = scene.num_images();
  const int P = scene.num_points();
  double sum = 0.0;
  for (int n = 0; n < N; ++n)
    for (int p = 0; p < P; ++p) {
      if (!scene.present(n, p)) continue;
      const double d = PointToRayDistance(X.point(n, p), scene.ray(n, p));
      sum += d * d;
    }
  return w.lambda2 * sum / (static_cast<double>(N) * P);
}

MatX RayCosineSquares(const SceneObservations& scene) {
  const int N = scene.num_images();
  const int P = scene.num_points();
  MatX c = MatX::Zero(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      if (i == j) continue;
      double sum = 0.0;
      for (int p = 0; p < P; ++p) {
        if (!scene.present(i, p) || !scene.present(j, p)) continue;
        const double dot = scene.direction(i, p).dot(scene.direction(j, p));
        sum += dot * dot;
      }
      c(i, j) = sum;
    }
  return c;
}

double ReconstructabilityTerm(const MatX& ray_cosine_squares,
                              const LaplaceFactors& factors,
                              const CostWeights& w, int num_points) {
  const int n = factors.size();
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double a = factors.degree(i) * factors.weight(i, j);
      sum += a * a * ray_cosine_squares(i, j);
    }
  return w.lambda3 * sum / (static_cast<double>(n) * num_points);
}

double ReconstructabilityTerm(const SceneObservations& scene,
                              const LaplaceFactors& factors,
                              const CostWeights& w) {
  return ReconstructabilityTerm(RayCosineSquares(scene), factors, w,
                                scene.num_points());
}

CostBreakdown TotalCost(const SceneObservations& scene,
                        const StructureMatrix& X,
                        const LaplaceFactors& factors, const CostWeights& w,
                        const LineEmbedding* prior) {
  CostBreakdown c;
  c.s = w.smoothness * SmoothnessTerm(factors, X);
  c.t = prior ? SpectralTraceTerm(factors, prior->values, w, X.num_points())
              : TraceTerm(factors, X, w);
  c.o = RayTerm(scene, X, w);
  c.r = ReconstructabilityTerm(scene, factors, w);
  c.total = c.s + c.t + c.o + c.r;
  return c;
}

MatX TotalCostGradient(const SceneObservations& scene,
                       const StructureMatrix& X,
                       const LaplaceFactors& factors, const CostWeights& w) {
  const int N = scene.num_images();
  const int P = scene.num_points();
  const MatX L = factors.Laplacian();
  const MatX& values = X.values();
  MatX grad = (2.0 * w.smoothness / P) * (L.transpose() * (L * values)) +
              (2.0 * w.lambda1 / P) * (factors.SymmetrizedLaplacian() * values);
  const double o = 2.0 * w.lambda2 / (static_cast<double>(N) * P);
  for (int n = 0; n < N; ++n)
    for (int p = 0; p < P; ++p) {
      if (!scene.present(n, p)) continue;
      const Vec3& r = scene.direction(n, p);
      const Vec3 v = X.point(n, p) - scene.camera(n).center;
      grad.row(n).segment<3>(3 * p) += o * (v - r * r.dot(v)).transpose();
    }
  return grad;
}

}  // namespace dloe
