#include "dloe/pipelines.hpp"

#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <map>
#include <sstream>

#include "dloe/parallel.hpp"
#include "dloe/sequencing.hpp"

namespace dloe {

namespace {

VecX ComponentScores(const MatX& weight, const std::vector<int>& images) {
  const int m = static_cast<int>(images.size());
  VecX scores = VecX::LinSpaced(m, 0.0, m - 1.0);
  if (m < 3) return scores;
  MatX sub(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) sub(a, b) = weight(images[a], images[b]);
  try {
    return GraphOrdering(sub).values;
  } catch (const Error&) {
    return scores;
  }
}

int SubjectCount(const SceneFile& scene) {
  int m = -1;
  for (const auto& im : scene.images) {
    const int k = static_cast<int>(im.subjects.size());
    if (k == 0 || (m >= 0 && k != m))
      throw Error("inconsistent multi-target scene");
    m = k;
  }
  return m;
}

// Merges proxy components into M subject slots. Components sharing an
// ancestor image must take different slots; among valid assignments the
// search prefers the slot whose shapes lie closest.
std::vector<int> CoalesceComponents(const EventPartition& partition,
                                    const std::vector<int>& proxy_image,
                                    const StructureMatrix& shapes, int N,
                                    int M) {
  const auto comps = partition.Components();
  const int C = static_cast<int>(comps.size());
  std::vector<std::vector<char>> ancestors(C, std::vector<char>(N, 0));
  for (int c = 0; c < C; ++c)
    for (int q : comps[c]) {
      char& seen = ancestors[c][proxy_image[q]];
      if (seen) throw Error("event segmentation did not separate the subjects");
      seen = 1;
    }
  std::vector<std::vector<char>> conflict(C, std::vector<char>(C, 0));
  for (int a = 0; a < C; ++a)
    for (int b = a + 1; b < C; ++b)
      for (int n = 0; n < N; ++n)
        if (ancestors[a][n] && ancestors[b][n]) {
          conflict[a][b] = conflict[b][a] = 1;
          break;
        }

  const auto gap = [&](int a, int b) {
    double best = std::numeric_limits<double>::infinity();
    for (int qa : comps[a])
      for (int qb : comps[b])
        best = std::min(best, (shapes.values().row(qa) -
                               shapes.values().row(qb)).norm());
    return best;
  };

  std::vector<int> order(C);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return comps[a].size() > comps[b].size();
  });
  std::vector<int> slot(C, -1);
  long budget = 100000;
  std::function<bool(int)> assign = [&](int k) {
    if (k == C) return true;
    if (--budget < 0) return false;
    const int c = order[k];
    std::vector<std::pair<double, int>> candidates;
    bool empty_tried = false;
    for (int s = 0; s < M; ++s) {
      double d = std::numeric_limits<double>::infinity();
      bool ok = true, empty = true;
      for (int j = 0; j < k && ok; ++j) {
        const int o = order[j];
        if (slot[o] != s) continue;
        empty = false;
        if (conflict[c][o]) ok = false;
        else d = std::min(d, gap(c, o));
      }
      if (!ok) continue;
      if (empty) {
        // Empty slots are interchangeable.
        if (empty_tried) continue;
        empty_tried = true;
      }
      candidates.emplace_back(d, s);
    }
    std::stable_sort(candidates.begin(), candidates.end());
    for (const auto& cand : candidates) {
      slot[c] = cand.second;
      if (assign(k + 1)) return true;
    }
    slot[c] = -1;
    return false;
  };
  if (!assign(0))
    throw Error("event segmentation did not separate the subjects");
  std::vector<int> out(proxy_image.size());
  for (int c = 0; c < C; ++c)
    for (int q : comps[c]) out[q] = slot[c];
  return out;
}

}  // namespace

SegmentationOutput SegmentAndSolve(const SceneObservations& scene,
                                   const SolverConfig& config,
                                   double threshold) {
  SegmentationOutput out;
  out.aggregate = Solve(scene, config);
  if (threshold < 0.0) threshold = DefaultAffinityThreshold(out.aggregate.factors);
  out.partition = SegmentEvents(out.aggregate.factors, threshold);
  for (auto& images : out.partition.Components()) {
    EventSolution ev;
    ev.images = images;
    if (images.size() >= 3) {
      ev.result = Solve(scene.Subset(images), config);
      ev.scores = RecoveredScores(*ev.result);
    } else {
      ev.scores = VecX::LinSpaced(images.size(), 0.0, images.size() - 1.0);
    }
    out.events.push_back(std::move(ev));
  }
  return out;
}

std::vector<EventSolution> SequenceComponents(const SolveResult& result,
                                              const EventPartition& partition) {
  std::vector<EventSolution> events;
  for (auto& images : partition.Components()) {
    EventSolution ev;
    ev.scores = ComponentScores(result.factors.weight, images);
    ev.images = std::move(images);
    events.push_back(std::move(ev));
  }
  return events;
}

MultiTargetOutput SolveMultiTarget(const SceneFile& scene,
                                   const SolverConfig& config) {
  const int M = SubjectCount(scene);
  const int N = static_cast<int>(scene.images.size());
  const int P = scene.num_points;
  MultiTargetOutput out;

  // Steps 1-2: proxy images solved as independent events.
  std::vector<Camera> cams;
  std::vector<Observation2D> obs;
  for (int n = 0; n < N; ++n)
    for (int k = 0; k < M; ++k) {
      cams.push_back(scene.cameras.at(scene.images[n].camera));
      const auto& o = scene.images[n].subjects[k].observations;
      obs.insert(obs.end(), o.begin(), o.end());
      out.proxy_image.push_back(n);
      out.proxy_subject.push_back(k);
    }
  const SceneObservations proxies(std::move(cams), P, std::move(obs));
  const int Q = proxies.num_images();
  out.decoupled = StructureMatrix(Q, P);
  out.proxy_slot.assign(Q, 0);

  if (M == 1) {
    out.proxy_partition.component_id.assign(Q, 0);
    out.proxy_partition.component_count = 1;
  } else {
    const SolveResult aggregate = Solve(proxies, config);
    out.proxy_partition =
        SegmentEvents(aggregate.factors, DefaultAffinityThreshold(aggregate.factors));
    out.proxy_slot = CoalesceComponents(out.proxy_partition, out.proxy_image,
                                        aggregate.structure, N, M);
    std::vector<std::vector<int>> slots(M);
    for (int q = 0; q < Q; ++q) slots[out.proxy_slot[q]].push_back(q);
    for (const auto& images : slots) {
      const SolveResult part = Solve(proxies.Subset(images), config);
      for (size_t a = 0; a < images.size(); ++a)
        out.decoupled.values().row(images[a]) = part.structure.values().row(a);
    }
  }

  // Steps 3-4: regroup proxies by ancestor image into 3MP-dimensional shapes.
  std::vector<Camera> jcams;
  std::vector<Observation2D> jobs(static_cast<size_t>(N) * M * P);
  std::vector<std::optional<int>> sid, sidx;
  out.coalesced_initial = StructureMatrix(N, M * P);
  for (int n = 0; n < N; ++n) {
    jcams.push_back(scene.cameras.at(scene.images[n].camera));
    sid.push_back(scene.images[n].stream_id);
    sidx.push_back(scene.images[n].stream_index);
  }
  for (int q = 0; q < Q; ++q) {
    const int n = out.proxy_image[q];
    const int c = out.proxy_slot[q];
    const auto& o = scene.images[n].subjects[out.proxy_subject[q]].observations;
    for (int p = 0; p < P; ++p) {
      jobs[static_cast<size_t>(n) * M * P + c * P + p] = o[p];
      if (M > 1)
        out.coalesced_initial.set_point(n, c * P + p, out.decoupled.point(q, p));
    }
  }
  const SceneObservations joint(std::move(jcams), M * P, std::move(jobs),
                                std::move(sid), std::move(sidx));

  // Step 5: joint re-solve on the original images.
  if (M == 1) {
    out.joint = Solve(joint, config);
    out.decoupled = out.joint.structure;
    out.coalesced_initial = out.joint.initial_structure;
  } else {
    out.joint = Solve(joint, config, &out.coalesced_initial);
  }
  return out;
}

MultiTargetErrors EvaluateMultiTarget(const SceneFile& scene,
                                      const MultiTargetOutput& out) {
  if (!scene.ground_truth) throw Error("scene has no ground truth");
  const int P = scene.num_points;
  const StructureMatrix& gt = *scene.ground_truth;
  MultiTargetErrors err;
  const int Q = static_cast<int>(out.proxy_image.size());
  for (int q = 0; q < Q; ++q) {
    const int n = out.proxy_image[q];
    const auto& subj = scene.images[n].subjects[out.proxy_subject[q]];
    if (!subj.truth) throw Error("subject truth labels missing");
    const int t = *subj.truth;
    const int c = out.proxy_slot[q];
    for (int p = 0; p < P; ++p) {
      const Vec3 X = gt.point(n, t * P + p);
      err.decoupled += (out.decoupled.point(q, p) - X).norm();
      err.joint += (out.joint.structure.point(n, c * P + p) - X).norm();
    }
  }
  const double count = static_cast<double>(Q) * P;
  err.decoupled /= count;
  err.joint /= count;
  return err;
}

std::string ToString(SweepVariable v) {
  switch (v) {
    case SweepVariable::kNoise:
      return "noise";
    case SweepVariable::kFrameRate:
      return "framerate";
    case SweepVariable::kMissing:
      return "missing";
    case SweepVariable::kDrop:
      return "drop";
  }
  return "?";
}

SweepVariable ParseSweepVariable(const std::string& name) {
  if (name == "noise") return SweepVariable::kNoise;
  if (name == "framerate") return SweepVariable::kFrameRate;
  if (name == "missing") return SweepVariable::kMissing;
  if (name == "drop") return SweepVariable::kDrop;
  throw Error("unknown sweep variable '" + name + "'");
}

ExperimentRow RunFixture(const ExperimentSpec& spec) {
  ExperimentRow row;
  row.seed = spec.corrupt.seed;
  try {
    const SyntheticScene s = Generate(spec.motion, spec.rig, spec.corrupt);
    const SceneObservations scene =
        spec.use_streams ? s.scene : s.scene.WithoutStreams();
    const SolveResult res = Solve(scene, spec.config);
    const Evaluation ev = Evaluate(res, s.ground_truth, s.true_order);
    row.mean_3d_error = ev.mean_3d_error;
    row.relative_error = ev.mean_3d_error / MotionDiameter(s.ground_truth);
    row.tau_abs = ev.tau_abs;
    row.iterations = res.iterations;
    row.converged = res.converged;
  } catch (const Error& e) {
    row.failure = e.what();
  }
  return row;
}

std::vector<ExperimentRow> RunTrendSweep(const ExperimentSpec& base,
                                         SweepVariable variable,
                                         const std::vector<double>& values,
                                         const std::vector<std::uint64_t>& seeds) {
  std::vector<ExperimentSpec> specs;
  for (double v : values)
    for (std::uint64_t seed : seeds) {
      ExperimentSpec s = base;
      s.corrupt.seed = seed;
      s.config.threads = 1;
      switch (variable) {
        case SweepVariable::kNoise:
          s.corrupt.noise_std = v;
          break;
        case SweepVariable::kFrameRate:
          s.motion.num_samples = static_cast<int>(std::lround(v));
          break;
        case SweepVariable::kMissing:
          s.corrupt.missing_fraction = v;
          break;
        case SweepVariable::kDrop:
          s.corrupt.drop_fraction = v;
          break;
      }
      specs.push_back(s);
    }
  std::vector<ExperimentRow> rows(specs.size());
  ParallelFor(static_cast<int>(specs.size()),
              [&](int i) { rows[i] = RunFixture(specs[i]); },
              base.config.threads);
  for (size_t i = 0; i < rows.size(); ++i) {
    rows[i].label = ToString(variable);
    rows[i].value = values[i / seeds.size()];
  }
  return rows;
}

std::vector<ExperimentRow> RunAblation(const ExperimentSpec& base,
                                       const std::vector<std::string>& ablations,
                                       const std::vector<std::uint64_t>& seeds) {
  std::vector<ExperimentSpec> specs;
  for (const auto& terms : ablations) {
    for (char t : terms)
      if (t != 's' && t != 't' && t != 'r' && t != ',')
        throw Error(std::string("unknown cost term '") + t + "'");
    for (std::uint64_t seed : seeds) {
      ExperimentSpec s = base;
      s.corrupt.seed = seed;
      s.config.threads = 1;
      if (terms.find('s') != std::string::npos) s.config.weights.smoothness = 0.0;
      if (terms.find('t') != std::string::npos) s.config.weights.lambda1 = 0.0;
      if (terms.find('r') != std::string::npos) s.config.weights.lambda3 = 0.0;
      specs.push_back(s);
    }
  }
  std::vector<ExperimentRow> rows(specs.size());
  ParallelFor(static_cast<int>(specs.size()),
              [&](int i) { rows[i] = RunFixture(specs[i]); },
              base.config.threads);
  for (size_t i = 0; i < rows.size(); ++i) {
    std::string terms = ablations[i / seeds.size()];
    std::erase(terms, ',');
    rows[i].label = terms.empty() ? "full" : "no-" + terms;
  }
  return rows;
}

std::string ExperimentCsv(const std::vector<ExperimentRow>& rows) {
  std::ostringstream os;
  os << "label,value,seed,mean_3d_error,relative_error,tau_abs,iterations,"
        "converged,failure\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.10g,%llu,%.10g,%.10g,%.10g,%d,%d,",
                  r.label.c_str(), r.value,
                  static_cast<unsigned long long>(r.seed), r.mean_3d_error,
                  r.relative_error, r.tau_abs, r.iterations, r.converged ? 1 : 0);
    os << buf << r.failure << "\n";
  }
  return os.str();
}

}  // namespace dloe
