#ifndef DLOE_SCENE_MODEL_HPP_
#define DLOE_SCENE_MODEL_HPP_

#include <optional>
#include <span>
#include <vector>

#include "dloe/types.hpp"

namespace dloe {

// Pinhole camera with pose M = [R | -R*C].
struct Camera {
  Mat3 intrinsics = Mat3::Identity();
  Mat3 rotation = Mat3::Identity();
  Vec3 center = Vec3::Zero();

  // Camera at `center` with its optical axis through `target`.
  static Camera LookAt(const Vec3& center, const Vec3& target, const Vec3& up,
                       double focal, double cx, double cy);

  // Throws Error unless R is orthonormal and K upper-triangular with a
  // positive diagonal.
  void Validate() const;

  // Signed depth of X along the optical axis.
  double Depth(const Vec3& X) const;
  Vec2 Project(const Vec3& X) const;
};

struct ViewingRay {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
};

struct Observation2D {
  Vec2 pixel = Vec2::Zero();
  bool present = false;
};

// N x P grid of 3D points stored as an N x 3P matrix, one shape per row.
class StructureMatrix {
 public:
  StructureMatrix() = default;
  StructureMatrix(int num_images, int num_points);
  explicit StructureMatrix(MatX values);

  int num_images() const { return static_cast<int>(values_.rows()); }
  int num_points() const { return static_cast<int>(values_.cols() / 3); }

  Vec3 point(int n, int p) const { return values_.row(n).segment<3>(3 * p); }
  void set_point(int n, int p, const Vec3& X) {
    values_.row(n).segment<3>(3 * p) = X;
  }

  const MatX& values() const { return values_; }
  MatX& values() { return values_; }

 private:
  MatX values_;
};

// Calibrated images and their 2D observations. Construction validates the
// invariants and caches one unit viewing ray per present observation.
class SceneObservations {
 public:
  SceneObservations() = default;
  // `observations` is row-major N x P.
  SceneObservations(std::vector<Camera> cameras, int num_points,
                    std::vector<Observation2D> observations,
                    std::vector<std::optional<int>> stream_id = {},
                    std::vector<std::optional<int>> stream_index = {});

  int num_images() const { return static_cast<int>(cameras_.size()); }
  int num_points() const { return num_points_; }

  const Camera& camera(int n) const { return cameras_[n]; }
  const std::vector<Camera>& cameras() const { return cameras_; }
  const Observation2D& observation(int n, int p) const {
    return observations_[n * num_points_ + p];
  }
  const std::vector<Observation2D>& observations() const {
    return observations_;
  }
  bool present(int n, int p) const { return observation(n, p).present; }
  int PresentCount() const;

  ViewingRay ray(int n, int p) const {
    return {cameras_[n].center, directions_[n * num_points_ + p]};
  }
  const Vec3& direction(int n, int p) const {
    return directions_[n * num_points_ + p];
  }

  const std::optional<int>& stream_id(int n) const { return stream_id_[n]; }
  const std::optional<int>& stream_index(int n) const {
    return stream_index_[n];
  }
  bool has_streams() const;

  // Image indices grouped per stream, each ordered by stream_index. Streams
  // are listed by ascending id; images without an id form singleton streams
  // appended in image order.
  std::vector<std::vector<int>> Streams() const;

  // Copy restricted to `images` (in the given order).
  SceneObservations Subset(std::span<const int> images) const;
  // Copy with stream metadata removed.
  SceneObservations WithoutStreams() const;

 private:
  std::vector<Camera> cameras_;
  int num_points_ = 0;
  std::vector<Observation2D> observations_;
  std::vector<std::optional<int>> stream_id_;
  std::vector<std::optional<int>> stream_index_;
  std::vector<Vec3> directions_;
};

ViewingRay MakeViewingRay(const Camera& camera, const Vec2& pixel);

// Perpendicular distance from X to the infinite line through the ray.
double PointToRayDistance(const Vec3& X, const ViewingRay& ray);

struct PseudoTriangulation {
  Vec3 point = Vec3::Zero();
  double error = 0.0;
  bool degenerate = false;
};

// Midpoint of the common perpendicular of two lines. Near-parallel pairs
// (|cos| > 1 - 1e-9) are flagged and resolved by projecting b's origin onto a.
PseudoTriangulation PseudoTriangulate(const ViewingRay& a, const ViewingRay& b);

struct StructureInitialization {
  StructureMatrix structure;
  // Most convergent partner image of each image.
  std::vector<int> partner;
  // Row-major N x P; true where the entry was seen in a single image and was
  // placed at the median scene depth on its ray.
  std::vector<bool> single_view;
};

// Two-view pseudo-triangulation of every ray against the most convergent
// partner image (minimum mean pseudo-triangulation error over commonly
// observed points). Throws Error("isolated image") if an image has no
// partner.
StructureInitialization InitializeStructureDetailed(
    const SceneObservations& scene);
StructureMatrix InitializeStructure(const SceneObservations& scene);

}  // namespace dloe

#endif  // DLOE_SCENE_MODEL_HPP_
