#include "dloe/scene_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <utility>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include "dloe/parallel.hpp"

namespace dloe {

Camera Camera::LookAt(const Vec3& center, const Vec3& target, const Vec3& up,
                      double focal, double cx, double cy) {
  const Vec3 z = (target - center).normalized();
  Vec3 x = z.cross(up);
  if (x.norm() < 1e-12) x = z.unitOrthogonal();
  x.normalize();
  const Vec3 y = z.cross(x);

  Camera cam;
  cam.rotation.row(0) = x.transpose();
  cam.rotation.row(1) = y.transpose();
  cam.rotation.row(2) = z.transpose();
  cam.center = center;
  cam.intrinsics << focal, 0, cx, 0, focal, cy, 0, 0, 1;
  return cam;
}

void Camera::Validate() const {
  if (!intrinsics.allFinite() || !rotation.allFinite() || !center.allFinite())
    throw Error("non-finite camera");
  if ((rotation * rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() >
      1e-9)
    throw Error("camera rotation is not orthonormal");
  const bool upper = intrinsics(1, 0) == 0.0 && intrinsics(2, 0) == 0.0 &&
                     intrinsics(2, 1) == 0.0;
  if (!upper || intrinsics(0, 0) <= 0.0 || intrinsics(1, 1) <= 0.0 ||
      intrinsics(2, 2) <= 0.0)
    throw Error("degenerate intrinsics");
}

double Camera::Depth(const Vec3& X) const {
  return rotation.row(2).dot(X - center);
}

Vec2 Camera::Project(const Vec3& X) const {
  const Vec3 x = intrinsics * (rotation * (X - center));
  return x.head<2>() / x.z();
}

StructureMatrix::StructureMatrix(int num_images, int num_points)
    : values_(MatX::Zero(num_images, 3 * num_points)) {}

StructureMatrix::StructureMatrix(MatX values) : values_(std::move(values)) {
  if (values_.cols() % 3 != 0)
    throw Error("structure matrix needs 3P columns");
}

ViewingRay MakeViewingRay(const Camera& camera, const Vec2& pixel) {
  const Eigen::FullPivLU<Mat3> lu(camera.intrinsics);
  if (!lu.isInvertible() || std::abs(camera.intrinsics.determinant()) < 1e-300)
    throw Error("degenerate intrinsics");
  const Vec3 d =
      camera.rotation.transpose() * lu.solve(Vec3(pixel.x(), pixel.y(), 1.0));
  return {camera.center, d.normalized()};
}

double PointToRayDistance(const Vec3& X, const ViewingRay& ray) {
  return (X - ray.origin).cross(ray.direction).norm();
}

PseudoTriangulation PseudoTriangulate(const ViewingRay& a,
                                      const ViewingRay& b) {
  const Vec3 w0 = a.origin - b.origin;
  const double c = a.direction.dot(b.direction);
  PseudoTriangulation out;
  if (std::abs(c) > 1.0 - 1e-9) {
    const Vec3 rel = b.origin - a.origin;
    const Vec3 foot = a.origin + rel.dot(a.direction) * a.direction;
    out.point = foot;
    out.error = (b.origin - foot).norm();
    out.degenerate = true;
    return out;
  }
  const double d = a.direction.dot(w0);
  const double e = b.direction.dot(w0);
  const double denom = 1.0 - c * c;
  const double s = (c * e - d) / denom;
  const double t = (e - c * d) / denom;
  const Vec3 pa = a.origin + s * a.direction;
  const Vec3 pb = b.origin + t * b.direction;
  out.point = 0.5 * (pa + pb);
  out.error = (pa - pb).norm();
  return out;
}

SceneObservations::SceneObservations(
    std::vector<Camera> cameras, int num_points,
    std::vector<Observation2D> observations,
    std::vector<std::optional<int>> stream_id,
    std::vector<std::optional<int>> stream_index)
    : cameras_(std::move(cameras)),
      num_points_(num_points),
      observations_(std::move(observations)),
      stream_id_(std::move(stream_id)),
      stream_index_(std::move(stream_index)) {
  const int n_images = num_images();
  if (num_points_ <= 0) throw Error("scene needs at least one point");
  if (static_cast<int>(observations_.size()) != n_images * num_points_)
    throw Error("observation grid does not match N x P");
  if (stream_id_.empty()) stream_id_.resize(n_images);
  if (stream_index_.empty()) stream_index_.resize(n_images);
  if (static_cast<int>(stream_id_.size()) != n_images ||
      static_cast<int>(stream_index_.size()) != n_images)
    throw Error("stream metadata does not match image count");

  std::set<std::pair<int, int>> seen;
  for (int n = 0; n < n_images; ++n) {
    cameras_[n].Validate();
    if (stream_id_[n].has_value() != stream_index_[n].has_value())
      throw Error("stream id and stream index must be given together");
    if (stream_id_[n] && !seen.emplace(*stream_id_[n], *stream_index_[n]).second)
      throw Error("duplicate (stream_id, stream_index)");
  }

  directions_.assign(observations_.size(), Vec3::UnitZ());
  for (int n = 0; n < n_images; ++n) {
    bool any = false;
    for (int p = 0; p < num_points_; ++p) {
      const Observation2D& obs = observation(n, p);
      if (!obs.present) continue;
      if (!obs.pixel.allFinite()) throw Error("non-finite pixel");
      directions_[n * num_points_ + p] =
          MakeViewingRay(cameras_[n], obs.pixel).direction;
      any = true;
    }
    if (!any) throw Error("image without observations");
  }
}

int SceneObservations::PresentCount() const {
  return static_cast<int>(std::count_if(
      observations_.begin(), observations_.end(),
      [](const Observation2D& o) { return o.present; }));
}

bool SceneObservations::has_streams() const {
  return std::any_of(stream_id_.begin(), stream_id_.end(),
                     [](const auto& s) { return s.has_value(); });
}

std::vector<std::vector<int>> SceneObservations::Streams() const {
  std::map<int, std::vector<int>> by_id;
  std::vector<std::vector<int>> loose;
  for (int n = 0; n < num_images(); ++n) {
    if (stream_id_[n])
      by_id[*stream_id_[n]].push_back(n);
    else
      loose.push_back({n});
  }
  std::vector<std::vector<int>> streams;
  for (auto& [id, images] : by_id) {
    std::sort(images.begin(), images.end(), [&](int a, int b) {
      return *stream_index_[a] < *stream_index_[b];
    });
    streams.push_back(std::move(images));
  }
  for (auto& s : loose) streams.push_back(std::move(s));
  return streams;
}

SceneObservations SceneObservations::Subset(
    std::span<const int> images) const {
  std::vector<Camera> cams;
  std::vector<Observation2D> obs;
  std::vector<std::optional<int>> sid, sidx;
  for (int n : images) {
    cams.push_back(cameras_[n]);
    for (int p = 0; p < num_points_; ++p) obs.push_back(observation(n, p));
    sid.push_back(stream_id_[n]);
    sidx.push_back(stream_index_[n]);
  }
  return SceneObservations(std::move(cams), num_points_, std::move(obs),
                           std::move(sid), std::move(sidx));
}

SceneObservations SceneObservations::WithoutStreams() const {
  return SceneObservations(cameras_, num_points_, observations_);
}

namespace {

double SceneScale(const SceneObservations& scene) {
  Vec3 mean = Vec3::Zero();
  for (const Camera& c : scene.cameras()) mean += c.center;
  mean /= std::max(1, scene.num_images());
  double scale = 0.0;
  for (const Camera& c : scene.cameras())
    scale = std::max(scale, (c.center - mean).norm());
  return std::max(scale, 1.0);
}

struct PartnerScore {
  double mean_error;
  int partner;
};

}  // namespace

StructureInitialization InitializeStructureDetailed(
    const SceneObservations& scene) {
  const int N = scene.num_images();
  const int P = scene.num_points();
  const double same_center_tol = 1e-9 * SceneScale(scene);

  StructureInitialization out;
  out.structure = StructureMatrix(N, P);
  out.partner.assign(N, -1);
  out.single_view.assign(static_cast<size_t>(N) * P, false);
  std::vector<char> known(static_cast<size_t>(N) * P, 0);

  // Partners are ranked per image by mean pseudo-triangulation error over
  // commonly observed points. Images sharing the camera center are skipped:
  // their rays meet trivially at that center.
  std::vector<std::vector<PartnerScore>> ranked(N);
  ParallelFor(N, [&](int n) {
    std::vector<PartnerScore>& scores = ranked[n];
    for (int m = 0; m < N; ++m) {
      if (m == n) continue;
      if ((scene.camera(m).center - scene.camera(n).center).norm() <=
          same_center_tol)
        continue;
      double sum = 0.0;
      int common = 0;
      for (int p = 0; p < P; ++p) {
        if (!scene.present(n, p) || !scene.present(m, p)) continue;
        sum += PseudoTriangulate(scene.ray(n, p), scene.ray(m, p)).error;
        ++common;
      }
      if (common > 0) scores.push_back({sum / common, m});
    }
    std::stable_sort(scores.begin(), scores.end(),
                     [](const PartnerScore& a, const PartnerScore& b) {
                       return a.mean_error < b.mean_error;
                     });
  });

  for (int n = 0; n < N; ++n) {
    if (ranked[n].empty()) throw Error("isolated image");
    out.partner[n] = ranked[n].front().partner;
  }

  ParallelFor(N, [&](int n) {
    for (int p = 0; p < P; ++p) {
      if (!scene.present(n, p)) continue;
      for (const PartnerScore& s : ranked[n]) {
        if (!scene.present(s.partner, p)) continue;
        out.structure.set_point(
            n, p,
            PseudoTriangulate(scene.ray(n, p), scene.ray(s.partner, p)).point);
        known[n * P + p] = 1;
        break;
      }
    }
  });

  // Entries seen in a single image sit on their ray at the median depth.
  std::vector<double> depths;
  for (int n = 0; n < N; ++n)
    for (int p = 0; p < P; ++p)
      if (known[n * P + p])
        depths.push_back((out.structure.point(n, p) - scene.camera(n).center)
                             .dot(scene.direction(n, p)));
  double median_depth = 1.0;
  if (!depths.empty()) {
    auto mid = depths.begin() + depths.size() / 2;
    std::nth_element(depths.begin(), mid, depths.end());
    median_depth = *mid;
  }
  for (int n = 0; n < N; ++n)
    for (int p = 0; p < P; ++p)
      if (scene.present(n, p) && !known[n * P + p]) {
        const ViewingRay ray = scene.ray(n, p);
        out.structure.set_point(n, p, ray.origin + median_depth * ray.direction);
        out.single_view[n * P + p] = true;
        known[n * P + p] = 2;
      }

  // Unobserved entries copy the partner's estimate, else the point's mean.
  std::vector<Vec3> point_mean(P, Vec3::Zero());
  std::vector<int> point_count(P, 0);
  Vec3 overall = Vec3::Zero();
  int overall_count = 0;
  for (int n = 0; n < N; ++n)
    for (int p = 0; p < P; ++p)
      if (known[n * P + p]) {
        point_mean[p] += out.structure.point(n, p);
        ++point_count[p];
        overall += out.structure.point(n, p);
        ++overall_count;
      }
  if (overall_count > 0) overall /= overall_count;
  for (int p = 0; p < P; ++p)
    point_mean[p] = point_count[p] > 0 ? Vec3(point_mean[p] / point_count[p])
                                       : overall;

  for (int n = 0; n < N; ++n)
    for (int p = 0; p < P; ++p) {
      if (known[n * P + p]) continue;
      Vec3 fill = point_mean[p];
      for (const PartnerScore& s : ranked[n])
        if (known[s.partner * P + p]) {
          fill = out.structure.point(s.partner, p);
          break;
        }
      out.structure.set_point(n, p, fill);
    }
  return out;
}

StructureMatrix InitializeStructure(const SceneObservations& scene) {
  return InitializeStructureDetailed(scene).structure;
}

}  // namespace dloe
