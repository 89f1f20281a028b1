#ifndef DLOE_PIPELINES_HPP_
#define DLOE_PIPELINES_HPP_

#include <string>
#include <vector>

#include "dloe/acs_solver.hpp"
#include "dloe/scene_io.hpp"
#include "dloe/synth.hpp"

namespace dloe {

// ---------------------------------------------------------------------------
// Event segmentation.

struct EventSolution {
  std::vector<int> images;  // indices into the aggregated scene
  // Temporal scores per entry of `images` (zeros for singletons).
  VecX scores;
  std::optional<SolveResult> result;  // absent for components below 3 images
};

struct SegmentationOutput {
  SolveResult aggregate;
  EventPartition partition;
  std::vector<EventSolution> events;
};

// Solves the aggregated scene, splits the learned graph into connected
// components and re-solves each component with three or more images.
// threshold < 0 selects DefaultAffinityThreshold.
SegmentationOutput SegmentAndSolve(const SceneObservations& scene,
                                   const SolverConfig& config,
                                   double threshold = -1.0);

// Components of an existing solution with per-component orders taken from
// the restricted learned weights.
std::vector<EventSolution> SequenceComponents(const SolveResult& result,
                                              const EventPartition& partition);

// ---------------------------------------------------------------------------
// Multi-target scenes: each image holds M subjects of P points whose
// cross-image identity is unknown.

struct MultiTargetOutput {
  // Proxy scene: one image per (image, subject) pair.
  std::vector<int> proxy_image;    // ancestor image of each proxy
  std::vector<int> proxy_subject;  // position within the ancestor's list
  EventPartition proxy_partition;
  // Decoupled per-proxy estimates (proxy count x 3P).
  StructureMatrix decoupled;
  // Subject slot of each proxy. Components that share no ancestor image
  // are coalesced so that every image has one proxy per slot.
  std::vector<int> proxy_slot;
  // Final joint estimate, N x 3MP with subject blocks in slot order.
  SolveResult joint;
  StructureMatrix coalesced_initial;
};

MultiTargetOutput SolveMultiTarget(const SceneFile& scene,
                                   const SolverConfig& config);

struct MultiTargetErrors {
  double decoupled = 0.0;
  double joint = 0.0;
};

// Needs `truth` labels on every subject and a ground-truth block.
MultiTargetErrors EvaluateMultiTarget(const SceneFile& scene,
                                      const MultiTargetOutput& out);

// ---------------------------------------------------------------------------
// Experiment harnesses.

enum class SweepVariable { kNoise, kFrameRate, kMissing, kDrop };

std::string ToString(SweepVariable v);
SweepVariable ParseSweepVariable(const std::string& name);

struct ExperimentSpec {
  MotionSpec motion;
  RigSpec rig;
  CorruptionSpec corrupt;
  SolverConfig config;
  bool use_streams = true;
};

struct ExperimentRow {
  std::string label;
  double value = 0.0;
  std::uint64_t seed = 0;
  double mean_3d_error = 0.0;
  double relative_error = 0.0;  // mean error / motion diameter
  double tau_abs = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string failure;  // non-empty if the solve threw
};

// Frame rate values are sample counts over the motion duration.
std::vector<ExperimentRow> RunTrendSweep(const ExperimentSpec& base,
                                         SweepVariable variable,
                                         const std::vector<double>& values,
                                         const std::vector<std::uint64_t>& seeds);

// Each entry of `ablations` lists cost terms ('s', 't', 'r') to disable;
// an empty entry is the full objective.
std::vector<ExperimentRow> RunAblation(const ExperimentSpec& base,
                                       const std::vector<std::string>& ablations,
                                       const std::vector<std::uint64_t>& seeds);

ExperimentRow RunFixture(const ExperimentSpec& spec);

std::string ExperimentCsv(const std::vector<ExperimentRow>& rows);

}  // namespace dloe

#endif  // DLOE_PIPELINES_HPP_
