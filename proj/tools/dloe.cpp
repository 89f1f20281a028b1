// Command-line front end: synthetic scenes, solving, sequencing, analysis,
// event segmentation, multi-target scenes and experiment sweeps.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dloe/acs_solver.hpp"
#include "dloe/pipelines.hpp"
#include "dloe/reconstructability.hpp"
#include "dloe/scene_io.hpp"
#include "dloe/sequencing.hpp"
#include "dloe/synth.hpp"

namespace {

using namespace dloe;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNotConverged = 2;

struct SynthFlags {
  std::string motion = "helix";
  int points = 5;
  int frames = 40;
  double duration = 1.0;
  double cycles = 1.0;
  double scale = 1.0;
  double spread = 0.25;
  double lag = 0.02;
  int cameras = 4;
  double distance = 3.0;
  double focal = 1000.0;
  double elevation = 0.15;
  double jitter = 0.3;
  double noise = 0.0;
  double missing = 0.0;
  double drop = 0.0;
  std::uint64_t seed = 1;
  std::string mocap;

  void Register(CLI::App* app) {
    app->add_option("--motion", motion, "linear|circular|helix|lissajous|piecewise");
    app->add_option("--points", points, "points per shape");
    app->add_option("--frames", frames, "global time samples");
    app->add_option("--duration", duration, "motion duration");
    app->add_option("--cycles", cycles, "revolutions / periods");
    app->add_option("--scale", scale, "motion radius or half-length");
    app->add_option("--spread", spread, "point offset radius");
    app->add_option("--lag", lag, "per-point phase lag");
    app->add_option("--cameras", cameras, "number of cameras");
    app->add_option("--distance", distance, "camera distance");
    app->add_option("--focal", focal, "focal length (pixels)");
    app->add_option("--elevation", elevation, "camera elevation (radians)");
    app->add_option("--jitter", jitter, "capture phase jitter in [0, 1)");
    app->add_option("--noise", noise, "pixel noise std");
    app->add_option("--missing", missing, "fraction of missing observations");
    app->add_option("--drop", drop, "fraction of dropped frames");
    app->add_option("--seed", seed, "random seed");
  }

  MotionSpec Motion() const {
    MotionSpec m;
    m.kind = ParseMotionKind(motion);
    m.num_points = points;
    m.num_samples = frames;
    m.duration = duration;
    m.cycles = cycles;
    m.scale = scale;
    m.point_spread = spread;
    m.phase_lag = lag;
    return m;
  }
  RigSpec Rig() const {
    RigSpec r;
    r.num_cameras = cameras;
    r.distance = distance;
    r.focal = focal;
    r.elevation = elevation;
    r.phase_jitter = jitter;
    return r;
  }
  CorruptionSpec Corruption() const {
    CorruptionSpec c;
    c.noise_std = noise;
    c.missing_fraction = missing;
    c.drop_fraction = drop;
    c.seed = seed;
    return c;
  }
};

struct SolverFlags {
  SolverConfig config;
  bool no_stream_prior = false;
  std::string embedding = "mds";
  std::string distance = "euclidean";

  void Register(CLI::App* app) {
    app->add_option("--lambda1", config.weights.lambda1, "T term weight");
    app->add_option("--lambda2", config.weights.lambda2, "O term weight");
    app->add_option("--lambda3", config.weights.lambda3, "R term weight");
    app->add_option("--smoothness", config.weights.smoothness, "S term weight");
    app->add_option("--max-iterations", config.max_iterations, "sweep limit");
    app->add_option("--tol", config.convergence_rel_tol, "relative cost tolerance");
    app->add_option("--epsilon", config.epsilon_degree, "degree floor (<= 0: 1e-6/N)");
    app->add_option("--w-prior", config.w_prior_value, "intra-stream prior weight");
    app->add_flag("--no-stream-prior", no_stream_prior, "ignore stream metadata");
    app->add_flag("--spectral-prior", config.use_spectral_prior,
                  "couple the graph to a line embedding");
    app->add_option("--embedding", embedding, "mds|sr|shp");
    app->add_option("--distance-kind", distance, "euclidean|arc");
  }

  SolverConfig Config() {
    SolverConfig c = config;
    c.use_stream_prior = !no_stream_prior;
    c.embedding_method = ParseEmbeddingMethod(embedding);
    c.distance_kind = ParseDistanceKind(distance);
    c.Validate();
    return c;
  }
};

std::vector<int> Ranks(const VecX& scores) { return RanksOf(scores); }

ResultFile MakeResult(const SolveResult& res, const SolverConfig& config,
                      const SceneFile* scene) {
  ResultFile out;
  out.structure = res.structure;
  out.factors = res.factors;
  out.order = Ranks(RecoveredScores(res));
  out.cost_history = res.cost_history;
  out.iterations = res.iterations;
  out.converged = res.converged;
  out.config = config;
  if (scene && scene->ground_truth && !scene->true_order.empty() &&
      scene->ground_truth->num_points() == res.structure.num_points()) {
    VecX order(out.order.size());
    for (size_t k = 0; k < out.order.size(); ++k) order(k) = out.order[k];
    const Evaluation ev = Evaluate(res.structure, order, *scene->ground_truth,
                                   scene->true_order);
    out.metrics = Metrics{ev.mean_3d_error, ev.tau_abs};
    out.ground_truth = scene->ground_truth;
    out.true_order = scene->true_order;
  }
  return out;
}

void Emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    WriteTextFile(path, text);
  }
}

int RunSynth(const SynthFlags& f, int subjects, double separation, int events,
             double event_radius, const std::string& out) {
  SceneFile file;
  if (subjects > 1) {
    file = GenerateMultiTarget(f.Motion(), f.Rig(), f.Corruption(), subjects,
                               separation);
  } else {
    SyntheticScene s;
    if (!f.mocap.empty()) {
      s = GenerateFromFrames(LoadMocapText(f.mocap), f.duration, f.Rig(),
                             f.Corruption());
    } else if (events > 1) {
      // Event centers on a ring in the y-z plane.
      std::vector<MotionSpec> specs;
      for (int k = 0; k < events; ++k) {
        const double a = 2.0 * std::numbers::pi * k / events;
        MotionSpec m = f.Motion();
        m.center = event_radius * Vec3(0.0, std::cos(a), std::sin(a));
        specs.push_back(m);
      }
      s = GenerateEvents(specs, f.Rig(), f.Corruption());
    } else {
      s = Generate(f.Motion(), f.Rig(), f.Corruption());
    }
    file = SceneFile::FromScene(s.scene);
    file.ground_truth = s.ground_truth;
    file.true_order = s.true_order;
  }
  Emit(out, EmitSceneFile(file));
  return kExitOk;
}

int RunSolve(const std::string& scene_path, SolverFlags& flags,
             const std::string& out) {
  const SceneFile scene = LoadSceneFile(scene_path);
  const SolverConfig config = flags.Config();
  const SolveResult res = Solve(scene.ToScene(), config);
  const ResultFile result = MakeResult(res, config, &scene);
  Emit(out, EmitResultFile(result));
  if (result.metrics)
    std::fprintf(stderr, "iterations %d converged %d mean_3d_error %.6g tau_abs %.6g\n",
                 res.iterations, res.converged ? 1 : 0,
                 result.metrics->mean_3d_error, result.metrics->tau_abs);
  return res.converged ? kExitOk : kExitNotConverged;
}

int RunSequence(const std::string& scene_path, const std::string& result_path,
                const std::string& method, const std::string& distance,
                const std::string& out) {
  const SceneFile scene = LoadSceneFile(scene_path);
  const SceneObservations obs = scene.ToScene();
  const StructureMatrix X = result_path.empty()
                                ? InitializeStructure(obs)
                                : LoadResultFile(result_path).structure;
  if (X.num_images() != obs.num_images())
    throw Error("result does not match the scene");
  const LineEmbedding f = GlobalSequencingPrior(
      X, obs.Streams(), ParseEmbeddingMethod(method), ParseDistanceKind(distance));
  const std::vector<int> ranks = Ranks(f.values);
  std::ostringstream os;
  const bool truth = !scene.true_order.empty();
  os << "image,score,rank" << (truth ? ",true_rank" : "") << "\n";
  char buf[128];
  for (int n = 0; n < obs.num_images(); ++n) {
    std::snprintf(buf, sizeof(buf), "%d,%.12g,%d", n, f.values(n), ranks[n]);
    os << buf;
    if (truth) os << "," << scene.true_order[n];
    os << "\n";
  }
  Emit(out, os.str());
  if (truth) {
    VecX t(scene.true_order.size());
    for (size_t k = 0; k < scene.true_order.size(); ++k) t(k) = scene.true_order[k];
    std::fprintf(stderr, "tau_abs %.6f\n", std::abs(KendallTau(f.values, t)));
  }
  return kExitOk;
}

int RunAnalyze(const std::string& sweep, int count, const SweepOptions& opts,
               const std::string& out) {
  const std::vector<double> grid = AngleGrid(count);
  std::vector<SweepRow> rows;
  if (sweep == "theta") {
    rows = SweepConvergenceAngle(grid, opts);
  } else if (sweep == "beta") {
    rows = SweepIncidenceAngle(grid, opts);
  } else {
    throw Error("unknown sweep '" + sweep + "'");
  }
  std::ostringstream os;
  os << "angle,actual,lower,upper,b_norm\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g,%.12g,%.12g\n", r.angle,
                  r.actual, r.lower, r.upper, r.b_norm);
    os << buf;
  }
  Emit(out, os.str());
  return kExitOk;
}

int RunSegment(const std::string& scene_path, const std::string& result_path,
               double threshold, bool resolve, SolverFlags& flags,
               const std::string& out) {
  const SceneFile scene = LoadSceneFile(scene_path);
  const SceneObservations obs = scene.ToScene();
  std::vector<EventSolution> events;
  if (resolve) {
    const SegmentationOutput seg = SegmentAndSolve(obs, flags.Config(), threshold);
    events = seg.events;
  } else {
    if (result_path.empty()) throw Error("segment needs --result or --resolve");
    const ResultFile res = LoadResultFile(result_path);
    if (res.structure.num_images() != obs.num_images())
      throw Error("result does not match the scene");
    if (threshold < 0.0) threshold = DefaultAffinityThreshold(res.factors);
    SolveResult sr;
    sr.structure = res.structure;
    sr.factors = res.factors;
    events = SequenceComponents(sr, SegmentEvents(res.factors, threshold));
  }
  std::ostringstream os;
  os << "component,image,rank\n";
  for (size_t c = 0; c < events.size(); ++c) {
    const std::vector<int> ranks = Ranks(events[c].scores);
    for (size_t k = 0; k < events[c].images.size(); ++k)
      os << c << "," << events[c].images[k] << "," << ranks[k] << "\n";
  }
  Emit(out, os.str());
  std::fprintf(stderr, "components %zu\n", events.size());
  return kExitOk;
}

int RunMultiTarget(const std::string& scene_path, SolverFlags& flags,
                   const std::string& out) {
  const SceneFile scene = LoadSceneFile(scene_path);
  const SolverConfig config = flags.Config();
  const MultiTargetOutput mt = SolveMultiTarget(scene, config);
  ResultFile result = MakeResult(mt.joint, config, nullptr);
  Emit(out, EmitResultFile(result));
  if (scene.ground_truth && !scene.images.empty() &&
      !scene.images[0].subjects.empty() && scene.images[0].subjects[0].truth) {
    const MultiTargetErrors err = EvaluateMultiTarget(scene, mt);
    std::fprintf(stderr, "decoupled_error %.6g joint_error %.6g\n", err.decoupled,
                 err.joint);
  }
  return mt.joint.converged ? kExitOk : kExitNotConverged;
}

template <typename T>
std::vector<T> ParseList(const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream is(item);
    T v;
    if (!(is >> v) || !is.eof()) throw Error("bad list item '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw Error("empty list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic scene reconstruction and sequencing from unsynchronized images"};
  app.require_subcommand(1);
  std::string out;

  SynthFlags synth_flags;
  int subjects = 1, events = 1;
  double separation = 3.0;
  double event_radius = 0.8;
  auto* synth = app.add_subcommand("synth", "generate a synthetic scene file");
  synth_flags.Register(synth);
  synth->add_option("--subjects", subjects, "multi-target subject count");
  synth->add_option("--separation", separation, "subject spacing");
  synth->add_option("--event-radius", event_radius, "ring radius of event centers");
  synth->add_option("--events", events, "temporally disjoint events");
  synth->add_option("--mocap", synth_flags.mocap, "joint trajectory text file");
  synth->add_option("-o,--output", out, "scene file (default stdout)");

  std::string scene_path, result_path;
  SolverFlags solve_flags;
  auto* solve = app.add_subcommand("solve", "reconstruct and sequence a scene");
  solve->add_option("scene", scene_path, "scene file")->required();
  solve_flags.Register(solve);
  solve->add_option("-o,--output", out, "result file (default stdout)");

  std::string method = "shp", distance = "euclidean";
  auto* sequence = app.add_subcommand("sequence", "order images from a structure");
  sequence->add_option("scene", scene_path, "scene file")->required();
  sequence->add_option("--result", result_path, "use the optimized structure");
  sequence->add_option("--embedding", method, "mds|sr|shp");
  sequence->add_option("--distance-kind", distance, "euclidean|arc");
  sequence->add_option("-o,--output", out, "CSV (default stdout)");

  std::string sweep = "theta";
  int count = 17;
  SweepOptions sweep_opts;
  auto* analyze = app.add_subcommand("analyze", "depth error bounds sweeps");
  analyze->add_option("--sweep", sweep, "theta|beta");
  analyze->add_option("--count", count, "open grid size over (0, pi)");
  analyze->add_option("--frames", sweep_opts.num_frames, "frames on the circle");
  analyze->add_option("--camera-distance", sweep_opts.camera_distance, "");
  analyze->add_option("--lambda1", sweep_opts.lambda1, "T term weight");
  analyze->add_option("-o,--output", out, "CSV (default stdout)");

  double threshold = -1.0;
  bool resolve = false;
  SolverFlags segment_flags;
  auto* segment = app.add_subcommand("segment", "split a solution into events");
  segment->add_option("scene", scene_path, "scene file")->required();
  segment->add_option("--result", result_path, "solved result file");
  segment->add_option("--threshold", threshold, "affinity edge threshold");
  segment->add_flag("--resolve", resolve, "solve the scene and each component");
  segment_flags.Register(segment);
  segment->add_option("-o,--output", out, "CSV (default stdout)");

  SolverFlags mt_flags;
  auto* multitarget = app.add_subcommand("multitarget", "multi-subject workflow");
  multitarget->add_option("scene", scene_path, "scene file with subjects")->required();
  mt_flags.Register(multitarget);
  multitarget->add_option("-o,--output", out, "result file (default stdout)");

  SynthFlags exp_synth;
  SolverFlags exp_solver;
  std::string vary = "noise", values = "1,3,5", seeds = "1,2,3,4,5", ablate;
  auto* experiment = app.add_subcommand("experiment", "trend sweeps and ablation");
  exp_synth.Register(experiment);
  exp_solver.Register(experiment);
  experiment->add_option("--vary", vary, "noise|framerate|missing|drop");
  experiment->add_option("--values", values, "comma-separated values");
  experiment->add_option("--seeds", seeds, "comma-separated seeds");
  experiment->add_option("--ablate", ablate, "cost terms to disable, e.g. s,t,r");
  experiment->add_option("-o,--output", out, "CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*synth) return RunSynth(synth_flags, subjects, separation, events, event_radius, out);
    if (*solve) return RunSolve(scene_path, solve_flags, out);
    if (*sequence) return RunSequence(scene_path, result_path, method, distance, out);
    if (*analyze) return RunAnalyze(sweep, count, sweep_opts, out);
    if (*segment)
      return RunSegment(scene_path, result_path, threshold, resolve, segment_flags, out);
    if (*multitarget) return RunMultiTarget(scene_path, mt_flags, out);
    if (*experiment) {
      ExperimentSpec spec;
      spec.motion = exp_synth.Motion();
      spec.rig = exp_synth.Rig();
      spec.corrupt = exp_synth.Corruption();
      spec.config = exp_solver.Config();
      spec.use_streams = spec.config.use_stream_prior;
      const auto seed_list = ParseList<std::uint64_t>(seeds);
      std::vector<ExperimentRow> rows;
      if (!ablate.empty()) {
        std::vector<std::string> sets{""};
        for (const auto& t : ParseList<std::string>(ablate)) sets.push_back(t);
        rows = RunAblation(spec, sets, seed_list);
      } else {
        rows = RunTrendSweep(spec, ParseSweepVariable(vary),
                             ParseList<double>(values), seed_list);
      }
      Emit(out, ExperimentCsv(rows));
      return kExitOk;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  }
  return kExitInput;
}
