#include "dloe/acs_solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "dloe/parallel.hpp"
#include "dloe/qp_solver.hpp"
#include "dloe/sequencing.hpp"

namespace dloe {

void SolverConfig::Validate() const {
  weights.Validate();
  if (max_iterations < 1) throw Error("max_iterations must be positive");
  if (!(convergence_rel_tol > 0.0))
    throw Error("convergence tolerance must be positive");
  if (!(w_prior_value >= 0.0)) throw Error("w_prior_value must be >= 0");
}

double SolverConfig::EpsilonFor(int num_images) const {
  return epsilon_degree > 0.0 ? epsilon_degree : 1e-6 / num_images;
}

IntraStreamPrior IntraStreamPrior::None(int num_images) {
  return {MatX::Zero(num_images, num_images)};
}

IntraStreamPrior IntraStreamPrior::FromStreams(const SceneObservations& scene,
                                               double value) {
  IntraStreamPrior out = None(scene.num_images());
  for (const auto& stream : scene.Streams())
    for (size_t k = 1; k < stream.size(); ++k) {
      out.prior(stream[k], stream[k - 1]) = value;
      out.prior(stream[k - 1], stream[k]) = value;
    }
  return out;
}

BlockProblem::BlockProblem(const SceneObservations& scene_,
                           const CostWeights& weights_, IntraStreamPrior prior_,
                           int threads_)
    : scene(&scene_),
      weights(weights_),
      prior(std::move(prior_)),
      ray_cosine_squares(RayCosineSquares(scene_)),
      threads(threads_) {
  weights.Validate();
}

CostBreakdown BlockProblem::Cost(const StructureMatrix& X,
                                 const LaplaceFactors& factors,
                                 const LineEmbedding* f) const {
  CostBreakdown c;
  c.s = weights.smoothness * SmoothnessTerm(factors, X);
  c.t = f ? SpectralTraceTerm(factors, f->values, weights, X.num_points())
          : TraceTerm(factors, X, weights);
  c.o = RayTerm(*scene, X, weights);
  c.r = ReconstructabilityTerm(ray_cosine_squares, factors, weights,
                               X.num_points());
  c.total = c.s + c.t + c.o + c.r;
  return c;
}

namespace {

// e_ij: squared distances between shapes, or between embedding values.
MatX PairwiseSquared(const StructureMatrix& X, const VecX* f) {
  const int n = X.num_images();
  MatX e(n, n);
  if (f) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) e(i, j) = ((*f)(i) - (*f)(j)) * ((*f)(i) - (*f)(j));
    return e;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      e(i, j) = (X.values().row(i) - X.values().row(j)).squaredNorm();
  return e;
}

}  // namespace

MatX StepW(const BlockProblem& problem, const StructureMatrix& X,
           const VecX* f, const VecX& degree, const MatX* warm_start,
           bool* degraded) {
  const int N = X.num_images();
  const int P = X.num_points();
  const CostWeights& w = problem.weights;
  const MatX& prior = problem.prior.prior;
  const MatX& cos2 = problem.ray_cosine_squares;
  const MatX& values = X.values();
  const MatX gram = values * values.transpose();
  const MatX e = PairwiseSquared(X, f);
  const double r_scale = 2.0 * w.lambda3 / (static_cast<double>(N) * P);

  MatX W = MatX::Zero(N, N);
  std::atomic<bool> any_degraded{false};
  ParallelFor(
      N,
      [&](int i) {
        const double d = degree(i);
        const VecX wp = prior.row(i).transpose();
        const double budget = 1.0 - wp.sum();
        if (!(budget > 0.0)) throw Error("prior exceeds stochastic budget");

        const double s_scale = 2.0 * w.smoothness * d * d / P;
        SimplexQP qp;
        qp.hessian = s_scale * gram;
        qp.hessian.diagonal() += r_scale * d * d * cos2.row(i).transpose();
        qp.linear = s_scale * (gram * wp - gram.col(i)) +
                    (w.lambda1 * d / P) * e.row(i).transpose() +
                    r_scale * d * d * wp.cwiseProduct(cos2.row(i).transpose());
        qp.fixed_zero = {i};
        qp.sum_target = budget;
        qp.check_convexity = false;

        std::optional<VecX> start;
        if (warm_start) start = VecX(warm_start->row(i).transpose() - wp);
        const SimplexQPResult res = SolveSimplexQPDetailed(qp, start);
        if (!res.converged) any_degraded = true;
        W.row(i) = (res.x + wp).transpose();
      },
      problem.threads);
  if (degraded) *degraded = *degraded || any_degraded;
  return W;
}

VecX StepD(const BlockProblem& problem, const StructureMatrix& X,
           const VecX* f, const MatX& weight, double epsilon,
           const VecX* warm_start, bool* degraded) {
  const int N = X.num_images();
  const int P = X.num_points();
  const CostWeights& w = problem.weights;
  if (!(epsilon >= 0.0) || epsilon * N >= 1.0)
    throw Error("degree floor leaves no budget");

  const MatX residual = X.values() - weight * X.values();
  const MatX e = PairwiseSquared(X, f);
  VecX quad(N), lin(N);
  for (int i = 0; i < N; ++i) {
    const double s = w.smoothness * residual.row(i).squaredNorm() / P;
    const double r = w.lambda3 / (static_cast<double>(N) * P) *
                     weight.row(i).array().square().matrix().dot(
                         problem.ray_cosine_squares.row(i));
    quad(i) = 2.0 * (s + r);
    lin(i) = w.lambda1 / P * weight.row(i).dot(e.row(i));
  }

  // D = epsilon + y with y on the simplex of size 1 - N epsilon.
  SimplexQP qp;
  qp.hessian = quad.asDiagonal();
  qp.linear = lin + quad * epsilon;
  qp.sum_target = 1.0 - N * epsilon;
  qp.check_convexity = false;
  std::optional<VecX> start;
  if (warm_start) start = VecX(warm_start->array() - epsilon);
  const SimplexQPResult res = SolveSimplexQPDetailed(qp, start);
  if (degraded && !res.converged) *degraded = true;
  VecX d = res.x.array() + epsilon;
  d /= d.sum();
  return d;
}

StructureMatrix StepX(const BlockProblem& problem,
                      const LaplaceFactors& factors, bool include_trace,
                      const StructureMatrix* anchor, bool* proximal) {
  const SceneObservations& scene = *problem.scene;
  const int N = scene.num_images();
  const int P = scene.num_points();
  const CostWeights& w = problem.weights;

  const MatX L = factors.Laplacian();
  MatX M = (w.smoothness / P) * (L.transpose() * L);
  if (include_trace) M += (w.lambda1 / P) * factors.SymmetrizedLaplacian();
  const double o = w.lambda2 / (static_cast<double>(N) * P);

  using SpMat = Eigen::SparseMatrix<double>;
  std::vector<Eigen::Triplet<double>> base;
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
      if (M(a, b) != 0.0 || a == b)
        for (int k = 0; k < 3; ++k)
          base.emplace_back(3 * a + k, 3 * b + k, M(a, b));

  StructureMatrix X(N, P);
  Eigen::SimplicialLDLT<SpMat> solver;
  bool analyzed = false;
  for (int p = 0; p < P; ++p) {
    std::vector<Eigen::Triplet<double>> trip = base;
    VecX rhs = VecX::Zero(3 * N);
    for (int n = 0; n < N; ++n) {
      // The 3x3 block is always inserted so every point shares one pattern.
      Mat3 proj = Mat3::Zero();
      if (scene.present(n, p)) {
        const Vec3& r = scene.direction(n, p);
        proj = o * (Mat3::Identity() - r * r.transpose());
        rhs.segment<3>(3 * n) = proj * scene.camera(n).center;
      }
      for (int u = 0; u < 3; ++u)
        for (int v = 0; v < 3; ++v)
          trip.emplace_back(3 * n + u, 3 * n + v, proj(u, v));
    }
    SpMat H(3 * N, 3 * N);
    H.setFromTriplets(trip.begin(), trip.end());
    // Symmetric Jacobi scaling. Rows tied only through epsilon-level
    // degrees are many orders below the rest and lose their pivots to
    // cancellation otherwise.
    const VecX diag = H.diagonal();
    const auto solve_scaled = [&](const SpMat& A, const VecX& b,
                                  VecX* out) -> bool {
      const VecX d = A.diagonal();
      if (!(d.minCoeff() > 0.0)) return false;
      const VecX scale = d.cwiseSqrt().cwiseInverse();
      const SpMat As = scale.asDiagonal() * A * scale.asDiagonal();
      if (!analyzed) {
        solver.analyzePattern(As);
        analyzed = true;
      }
      solver.factorize(As);
      if (solver.info() != Eigen::Success) return false;
      const VecX pivots = solver.vectorD();
      if (!(pivots.minCoeff() > 1e-13 * pivots.cwiseAbs().maxCoeff()))
        return false;
      *out = scale.cwiseProduct(solver.solve(scale.cwiseProduct(b)).eval());
      return true;
    };
    VecX sol;
    if (!solve_scaled(H, rhs, &sol)) {
      if (!anchor) throw Error("unconstrained point");
      const double mu = 1e-10 * diag.cwiseAbs().maxCoeff();
      SpMat I(3 * N, 3 * N);
      I.setIdentity();
      VecX b = rhs;
      for (int n = 0; n < N; ++n) b.segment<3>(3 * n) += mu * anchor->point(n, p);
      if (!(mu > 0.0) || !solve_scaled(H + mu * I, b, &sol))
        throw Error("unconstrained point");
      if (proximal) *proximal = true;
    }
    for (int n = 0; n < N; ++n) X.set_point(n, p, sol.segment<3>(3 * n));
  }
  return X;
}

StructureMatrix StepX(const SceneObservations& scene,
                      const LaplaceFactors& factors, const CostWeights& w) {
  const BlockProblem problem(scene, w, IntraStreamPrior::None(scene.num_images()));
  return StepX(problem, factors);
}

MatX StepW(const SceneObservations& scene, const StructureMatrix& X,
           const VecX& degree, const CostWeights& w,
           const IntraStreamPrior& prior) {
  const BlockProblem problem(scene, w, prior);
  return StepW(problem, X, nullptr, degree);
}

VecX StepD(const SceneObservations& scene, const StructureMatrix& X,
           const MatX& weight, const CostWeights& w, double epsilon) {
  const BlockProblem problem(scene, w, IntraStreamPrior::None(scene.num_images()));
  return StepD(problem, X, nullptr, weight, epsilon);
}

SolveResult Solve(const SceneObservations& scene, const SolverConfig& config,
                  const StructureMatrix* initial) {
  config.Validate();
  const int N = scene.num_images();
  if (N < 2) throw Error("need at least two images");
  const double epsilon = config.EpsilonFor(N);

  IntraStreamPrior prior =
      config.use_stream_prior && scene.has_streams()
          ? IntraStreamPrior::FromStreams(scene, config.w_prior_value)
          : IntraStreamPrior::None(N);
  const BlockProblem problem(scene, config.weights, std::move(prior),
                             config.threads);
  const auto streams = scene.Streams();

  SolveResult result;
  result.initial_structure = initial ? *initial : InitializeStructure(scene);
  if (result.initial_structure.num_images() != N ||
      result.initial_structure.num_points() != scene.num_points())
    throw Error("initial structure does not match the scene");
  StructureMatrix X = result.initial_structure;
  LaplaceFactors factors{VecX::Constant(N, 1.0 / N), MatX::Zero(N, N)};

  double previous = 0.0;
  for (int sweep = 1; sweep <= config.max_iterations; ++sweep) {
    std::optional<LineEmbedding> f;
    if (config.use_spectral_prior)
      f = GlobalSequencingPrior(X, streams, config.embedding_method,
                                config.distance_kind);
    const VecX* fv = f ? &f->values : nullptr;
    const LineEmbedding* fe = f ? &*f : nullptr;

    factors.weight = StepW(problem, X, fv, factors.degree,
                           sweep > 1 ? &factors.weight : nullptr,
                           &result.qp_degraded);
    result.cost_history.push_back(problem.Cost(X, factors, fe));

    factors.degree = StepD(problem, X, fv, factors.weight, epsilon,
                           &factors.degree, &result.qp_degraded);
    result.cost_history.push_back(problem.Cost(X, factors, fe));

    X = StepX(problem, factors, /*include_trace=*/!f, &X,
              &result.x_proximal);
    const CostBreakdown after = problem.Cost(X, factors, fe);
    result.cost_history.push_back(after);

    result.iterations = sweep;
    result.embedding = std::move(f);
    if (sweep > 1 && std::abs(previous - after.total) <=
                         config.convergence_rel_tol *
                             std::max(std::abs(previous), 1e-300)) {
      result.converged = true;
      break;
    }
    previous = after.total;
  }
  result.structure = std::move(X);
  result.factors = std::move(factors);
  return result;
}

VecX RecoveredScores(const SolveResult& result) {
  if (result.embedding) return result.embedding->values;
  try {
    return GraphOrdering(result.factors.weight).values;
  } catch (const Error&) {
    return EmbedShortestPath(EuclideanDistanceMatrix(result.structure)).values;
  }
}

}  // namespace dloe
