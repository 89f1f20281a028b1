#include "dloe/reconstructability.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Geometry>
#include <Eigen/SVD>

namespace dloe {

namespace {

constexpr double kPi = std::numbers::pi;

LaplaceFactors ChainFactors(int n) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  return LaplaceFactors::Uniform(ChainWeights(order, n));
}

// Frames alternate between two cameras; rays go from each center through the
// circle sample of that frame.
SweepRow Analyze(const MatX& points, const Vec3& cam_a, const Vec3& cam_b,
                 double angle, const SweepOptions& options) {
  const int n = static_cast<int>(points.rows());
  std::vector<Vec3> dirs(n);
  for (int k = 0; k < n; ++k) {
    const Vec3 c = k % 2 == 0 ? cam_a : cam_b;
    dirs[k] = (points.row(k).transpose() - c).normalized();
  }
  const DepthErrorSystem sys =
      AssembleSystem(points, dirs, ChainFactors(n), options.lambda1);
  const ErrorBounds eb = ComputeErrorBounds(sys);
  SweepRow row;
  row.angle = angle;
  row.actual = eb.actual;
  row.lower = eb.lower;
  row.upper = eb.upper;
  row.b_norm = sys.b.norm();
  row.B_norm = Eigen::JacobiSVD<MatX>(sys.B).singularValues()(0);
  return row;
}

MatX Circle(int n, double radius, const Vec3& normal) {
  const Vec3 z = normal.normalized();
  const Vec3 x = z.unitOrthogonal();
  const Vec3 y = z.cross(x);
  MatX pts(n, 3);
  for (int k = 0; k < n; ++k) {
    const double a = 2.0 * kPi * k / n;
    pts.row(k) = radius * (std::cos(a) * x + std::sin(a) * y).transpose();
  }
  return pts;
}

}  // namespace

DepthErrorSystem AssembleSystem(const MatX& points,
                                const std::vector<Vec3>& directions,
                                const LaplaceFactors& factors, double lambda1) {
  const int n = static_cast<int>(points.rows());
  if (points.cols() != 3 || static_cast<int>(directions.size()) != n ||
      factors.size() != n)
    throw Error("depth system size mismatch");
  const MatX L = factors.Laplacian();
  const MatX M = L.transpose() * L + lambda1 * factors.SymmetrizedLaplacian();
  MatX R(n, 3);
  for (int k = 0; k < n; ++k) R.row(k) = directions[k].transpose();

  DepthErrorSystem sys;
  sys.B = M.cwiseProduct(R * R.transpose());
  const MatX MX = M * points;
  sys.b = MX.cwiseProduct(R).rowwise().sum();
  sys.l = sys.B.ldlt().solve(-sys.b);
  return sys;
}

ErrorBounds ComputeErrorBounds(const DepthErrorSystem& system) {
  Eigen::JacobiSVD<MatX> svd(system.B, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VecX& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  if (!(smax > 0.0) || !(smin > smax * 1e-12))
    throw Error("unbounded configuration");
  const VecX l = svd.solve(-system.b);
  const double bn = system.b.norm();
  return {bn / smax, bn / smin, l.norm()};
}

std::vector<SweepRow> SweepConvergenceAngle(const std::vector<double>& thetas,
                                            const SweepOptions& options) {
  // Motion plane symmetric under swapping x and y, which maps the rig at
  // theta to the rig at pi - theta.
  const MatX pts = Circle(options.num_frames, options.radius, Vec3(1.0, 1.0, 1.0));
  std::vector<SweepRow> rows;
  for (double theta : thetas) {
    const double h = 0.5 * theta;
    const double d = options.camera_distance;
    const Vec3 a = d * Vec3(std::sin(h), std::cos(h), 0.0);
    const Vec3 b = d * Vec3(-std::sin(h), std::cos(h), 0.0);
    rows.push_back(Analyze(pts, a, b, theta, options));
  }
  return rows;
}

std::vector<SweepRow> SweepIncidenceAngle(const std::vector<double>& betas,
                                          const SweepOptions& options) {
  const MatX pts = Circle(options.num_frames, options.radius, Vec3::UnitZ());
  const double half = kPi / 4.0;
  std::vector<SweepRow> rows;
  for (double beta : betas) {
    const Vec3 bisector(std::cos(beta), 0.0, std::sin(beta));
    const Vec3 side = Vec3::UnitY();
    const double d = options.camera_distance;
    const Vec3 a = d * (std::cos(half) * bisector + std::sin(half) * side);
    const Vec3 b = d * (std::cos(half) * bisector - std::sin(half) * side);
    rows.push_back(Analyze(pts, a, b, beta, options));
  }
  return rows;
}

std::vector<double> AngleGrid(int count) {
  std::vector<double> grid(count);
  for (int k = 0; k < count; ++k) grid[k] = (k + 1) * kPi / (count + 1);
  return grid;
}

}  // namespace dloe
