#ifndef DLOE_SYNTH_HPP_
#define DLOE_SYNTH_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "dloe/acs_solver.hpp"
#include "dloe/scene_io.hpp"
#include "dloe/scene_model.hpp"

namespace dloe {

enum class MotionKind { kLinear, kCircular, kHelix, kLissajous, kPiecewiseSmooth };

std::string ToString(MotionKind kind);
MotionKind ParseMotionKind(const std::string& name);

// Parametric C1 motion of P points. Point p follows the base curve delayed by
// p * phase_lag (fraction of the duration) and displaced by a fixed offset,
// which makes the shape non-rigid.
struct MotionSpec {
  MotionKind kind = MotionKind::kHelix;
  int num_points = 5;
  // Global time samples over `duration`; the sampling rate is their ratio.
  int num_samples = 40;
  double duration = 1.0;
  // Revolutions (circular, helix) or base-frequency periods (lissajous).
  double cycles = 1.0;
  double scale = 1.0;
  double point_spread = 0.25;
  double phase_lag = 0.02;
  // Shift of the base curve in time, as a fraction of the duration.
  double time_offset = 0.0;
  Vec3 center = Vec3::Zero();

  void Validate() const;
  Vec3 Position(int point, double time) const;
};

// Static cameras on a ring around the motion center, all looking at it.
struct RigSpec {
  int num_cameras = 4;
  double distance = 3.0;
  double focal = 1000.0;
  int width = 1000;
  int height = 1000;
  // Elevation magnitude (radians); cameras alternate above and below.
  double elevation = 0.15;
  // Azimuth spacing; <= 0 selects 2 pi / C, or pi / 2 for two cameras.
  double azimuth_step = 0.0;
  // Random delay of each capture within its sample period, as a fraction.
  double phase_jitter = 0.3;

  void Validate() const;
  std::vector<Camera> Cameras(const Vec3& target) const;
};

struct CorruptionSpec {
  double noise_std = 0.0;         // pixels
  double missing_fraction = 0.0;  // of all (n, p) entries
  double drop_fraction = 0.0;     // of all frames
  std::uint64_t seed = 1;

  void Validate() const;
};

struct SyntheticScene {
  SceneObservations scene;
  StructureMatrix ground_truth;
  // Temporal rank of each image among the surviving frames.
  std::vector<int> true_order;
  std::vector<double> timestamps;
  // Event label of each image (all zero for a single motion).
  std::vector<int> event;
};

// Each global sample is seen by exactly one camera (round robin), so no two
// images are concurrent. Images are listed stream by stream (camera order),
// time-ordered within each stream. Throws Error("invalid rig for motion")
// if a point falls behind a camera.
SyntheticScene Generate(const MotionSpec& motion, const RigSpec& rig,
                        const CorruptionSpec& corrupt);

// Same capture protocol over recorded frames (rows of `frames`, 3P columns)
// spanning `duration`; positions between frames are interpolated linearly.
SyntheticScene GenerateFromFrames(const StructureMatrix& frames,
                                  double duration, const RigSpec& rig,
                                  const CorruptionSpec& corrupt);

// Temporally disjoint events played back to back in front of the same rig.
// Each event gets its own streams (id = event * cameras + camera).
SyntheticScene GenerateEvents(const std::vector<MotionSpec>& events,
                              const RigSpec& rig, const CorruptionSpec& corrupt);

// `subjects` copies of the motion, spaced by `separation` along y and
// shifted in time, observed together in every image. Subjects are listed in
// a random order per image with their true identity attached.
SceneFile GenerateMultiTarget(const MotionSpec& motion, const RigSpec& rig,
                              const CorruptionSpec& corrupt, int subjects,
                              double separation);

struct Evaluation {
  double mean_3d_error = 0.0;
  double tau_abs = 0.0;
};

double MeanPointError(const StructureMatrix& estimate,
                      const StructureMatrix& ground_truth);
// Largest distance between any two ground-truth points.
double MotionDiameter(const StructureMatrix& ground_truth);

// Mean 3D error over all entries and |tau| of the recovered scores against
// the true temporal ranks.
Evaluation Evaluate(const StructureMatrix& estimate, const VecX& scores,
                    const StructureMatrix& ground_truth,
                    const std::vector<int>& true_order);

// Scores from RecoveredScores(result).
Evaluation Evaluate(const SolveResult& result,
                    const StructureMatrix& ground_truth,
                    const std::vector<int>& true_order);

}  // namespace dloe

#endif  // DLOE_SYNTH_HPP_
