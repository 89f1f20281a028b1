#ifndef DLOE_SCENE_IO_HPP_
#define DLOE_SCENE_IO_HPP_

#include <optional>
#include <string>
#include <vector>

#include "dloe/acs_solver.hpp"
#include "dloe/scene_model.hpp"

namespace dloe {

inline constexpr int kFileFormatVersion = 1;

// Points of one subject in a multi-target image. Subjects are listed in
// arbitrary order per image; `truth` optionally names the real subject.
struct SubjectObservations {
  std::vector<Observation2D> observations;  // size P
  std::optional<int> truth;
};

struct SceneImage {
  int camera = 0;
  std::optional<int> stream_id;
  std::optional<int> stream_index;
  std::vector<Observation2D> observations;  // size P; empty if multi-target
  std::vector<SubjectObservations> subjects;
};

struct SceneFile {
  int version = kFileFormatVersion;
  int num_points = 0;
  std::vector<Camera> cameras;
  std::vector<SceneImage> images;
  // N x 3P, or N x 3MP in true subject order for multi-target scenes.
  std::optional<StructureMatrix> ground_truth;
  std::vector<int> true_order;

  bool multi_target() const;
  SceneObservations ToScene() const;
  // Identical cameras are stored once.
  static SceneFile FromScene(const SceneObservations& scene);
};

struct Metrics {
  double mean_3d_error = 0.0;
  double tau_abs = 0.0;
};

struct ResultFile {
  int version = kFileFormatVersion;
  StructureMatrix structure;
  LaplaceFactors factors;
  // Recovered temporal rank of each image.
  std::vector<int> order;
  std::vector<CostBreakdown> cost_history;
  int iterations = 0;
  bool converged = false;
  SolverConfig config;
  std::optional<Metrics> metrics;
  std::optional<StructureMatrix> ground_truth;
  std::vector<int> true_order;
};

// Parse errors are reported as "<source>:<line>:<column>: <message>".
SceneFile ParseSceneFile(const std::string& text,
                         const std::string& source = "<scene>");
SceneFile LoadSceneFile(const std::string& path);
std::string EmitSceneFile(const SceneFile& file);
void SaveSceneFile(const SceneFile& file, const std::string& path);

ResultFile ParseResultFile(const std::string& text,
                           const std::string& source = "<result>");
ResultFile LoadResultFile(const std::string& path);
std::string EmitResultFile(const ResultFile& file);
void SaveResultFile(const ResultFile& file, const std::string& path);

// Whitespace-separated joint positions, one frame per row, 3P columns.
StructureMatrix LoadMocapText(const std::string& path);

std::string ReadTextFile(const std::string& path);
void WriteTextFile(const std::string& path, const std::string& text);

}  // namespace dloe

#endif  // DLOE_SCENE_IO_HPP_
