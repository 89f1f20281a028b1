#ifndef DLOE_RECONSTRUCTABILITY_HPP_
#define DLOE_RECONSTRUCTABILITY_HPP_

#include <vector>

#include "dloe/laplacian_graph.hpp"
#include "dloe/types.hpp"

namespace dloe {

// Depth error of a single tracked point (one per frame) when the structure is
// estimated from min ||L X||^2 + lambda1 tr(X^T L<-> X) with X_n constrained
// to its ray X*_n + l_n r_n.
struct DepthErrorSystem {
  MatX B;
  VecX b;
  // Signed offsets along each ray at the minimum: B l = -b.
  VecX l;
};

// `points` is N x 3 ground truth, `directions` the unit rays through them.
DepthErrorSystem AssembleSystem(const MatX& points,
                                const std::vector<Vec3>& directions,
                                const LaplaceFactors& factors, double lambda1);

struct ErrorBounds {
  double lower = 0.0;
  double upper = 0.0;
  double actual = 0.0;
};

// ||B||^-1 ||b|| <= ||l|| <= ||B^-1|| ||b||. Throws
// Error("unbounded configuration") when cond(B) >= 1e12.
ErrorBounds ComputeErrorBounds(const DepthErrorSystem& system);

struct SweepRow {
  double angle = 0.0;
  double actual = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double b_norm = 0.0;
  double B_norm = 0.0;
};

struct SweepOptions {
  int num_frames = 40;
  double radius = 1.0;
  // Far enough that each camera's rays are nearly parallel.
  double camera_distance = 30.0;
  double lambda1 = 1e-5;
};

// Two cameras alternately observe a circular motion; their viewing
// directions toward the motion center meet at angle theta.
std::vector<SweepRow> SweepConvergenceAngle(const std::vector<double>& thetas,
                                            const SweepOptions& options = {});

// Fixed right-angle rig whose bisector makes angle beta with the plane of a
// circular motion (beta = 0 views the motion edge-on).
std::vector<SweepRow> SweepIncidenceAngle(const std::vector<double>& betas,
                                          const SweepOptions& options = {});

// Open grid k * pi / (count + 1), k = 1..count.
std::vector<double> AngleGrid(int count);

}  // namespace dloe

#endif  // DLOE_RECONSTRUCTABILITY_HPP_
