#include "dloe/synth.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <Eigen/Geometry>

#include "dloe/sequencing.hpp"

namespace dloe {

namespace {

constexpr double kPi = std::numbers::pi;

std::mt19937_64 Stream(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt)};
  return std::mt19937_64(seq);
}

Vec3 CatmullRom(const std::vector<Vec3>& pts, double u) {
  const int segments = static_cast<int>(pts.size()) - 1;
  // Outside [0, 1] the end cubics are extended, keeping the curve C1.
  const double x = u * segments;
  const int k = std::clamp(static_cast<int>(std::floor(x)), 0, segments - 1);
  const double s = x - k;
  const Vec3& p1 = pts[k];
  const Vec3& p2 = pts[k + 1];
  const Vec3 p0 = k > 0 ? pts[k - 1] : Vec3(2 * p1 - p2);
  const Vec3 p3 = k + 2 <= segments ? pts[k + 2] : Vec3(2 * p2 - p1);
  const double s2 = s * s, s3 = s2 * s;
  return 0.5 * ((2 * p1) + (-p0 + p2) * s + (2 * p0 - 5 * p1 + 4 * p2 - p3) * s2 +
                (-p0 + 3 * p1 - 3 * p2 + p3) * s3);
}

Vec3 PointOffset(int p, int count, double spread) {
  // Fibonacci sphere directions.
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  const double z = count > 1 ? 1.0 - 2.0 * (p + 0.5) / count : 0.0;
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return spread * Vec3(r * std::cos(golden * p), r * std::sin(golden * p), z);
}

}  // namespace

std::string ToString(MotionKind kind) {
  switch (kind) {
    case MotionKind::kLinear:
      return "linear";
    case MotionKind::kCircular:
      return "circular";
    case MotionKind::kHelix:
      return "helix";
    case MotionKind::kLissajous:
      return "lissajous";
    case MotionKind::kPiecewiseSmooth:
      return "piecewise";
  }
  return "?";
}

MotionKind ParseMotionKind(const std::string& name) {
  if (name == "linear") return MotionKind::kLinear;
  if (name == "circular") return MotionKind::kCircular;
  if (name == "helix") return MotionKind::kHelix;
  if (name == "lissajous") return MotionKind::kLissajous;
  if (name == "piecewise" || name == "piecewise-smooth")
    return MotionKind::kPiecewiseSmooth;
  throw Error("unknown motion '" + name + "'");
}

void MotionSpec::Validate() const {
  if (num_points < 1) throw Error("motion needs at least one point");
  if (num_samples < 2) throw Error("motion needs at least two samples");
  if (!(duration > 0.0)) throw Error("sampling rate must be positive");
  if (!(scale > 0.0) || !(cycles > 0.0)) throw Error("invalid motion scale");
}

Vec3 MotionSpec::Position(int point, double time) const {
  const double u = time / duration - phase_lag * point + time_offset;
  const double a = 2.0 * kPi * cycles * u;
  Vec3 base;
  switch (kind) {
    case MotionKind::kLinear:
      base = scale * (2.0 * u - 1.0) * Vec3(1.0, 0.4, 0.25).normalized();
      break;
    case MotionKind::kCircular: {
      const Eigen::AngleAxisd tilt(0.3, Vec3::UnitX());
      base = tilt * Vec3(scale * std::cos(a), scale * std::sin(a), 0.0);
      break;
    }
    case MotionKind::kHelix:
      base = Vec3(scale * std::cos(a), scale * std::sin(a),
                  scale * (1.5 * u - 0.75));
      break;
    case MotionKind::kLissajous:
      base = scale * Vec3(std::sin(a), 0.8 * std::sin(2.0 * a + 0.5),
                          0.5 * std::sin(3.0 * a + 1.0));
      break;
    case MotionKind::kPiecewiseSmooth: {
      static const std::vector<Vec3> waypoints = {
          {-1.0, -0.5, 0.0}, {-0.3, 0.6, 0.3}, {0.4, -0.2, -0.3}, {1.0, 0.5, 0.2}};
      base = scale * CatmullRom(waypoints, u);
      break;
    }
  }
  return center + base + PointOffset(point, num_points, point_spread);
}

void RigSpec::Validate() const {
  if (num_cameras < 1) throw Error("rig needs at least one camera");
  if (!(distance > 0.0) || !(focal > 0.0) || width <= 0 || height <= 0)
    throw Error("invalid rig");
  if (phase_jitter < 0.0 || phase_jitter >= 1.0)
    throw Error("phase jitter must be in [0, 1)");
}

std::vector<Camera> RigSpec::Cameras(const Vec3& target) const {
  const double step = azimuth_step > 0.0 ? azimuth_step
                      : num_cameras == 2 ? kPi / 2.0
                                         : 2.0 * kPi / num_cameras;
  std::vector<Camera> cams;
  for (int k = 0; k < num_cameras; ++k) {
    const double az = k * step;
    const double el = (k % 2 == 0 ? 1.0 : -1.0) * elevation;
    const Vec3 dir(std::cos(az) * std::cos(el), std::sin(az) * std::cos(el),
                   std::sin(el));
    cams.push_back(Camera::LookAt(target + distance * dir, target,
                                  Vec3::UnitZ(), focal, 0.5 * width,
                                  0.5 * height));
  }
  return cams;
}

void CorruptionSpec::Validate() const {
  if (!(noise_std >= 0.0)) throw Error("noise must be nonnegative");
  if (!(missing_fraction >= 0.0 && missing_fraction < 1.0))
    throw Error("missing fraction must be in [0, 1)");
  if (!(drop_fraction >= 0.0 && drop_fraction < 1.0))
    throw Error("drop fraction must be in [0, 1)");
}

namespace {

using Trajectory = std::function<Vec3(int point, double time)>;

// Capture protocol shared by the generators: round-robin cameras, jittered
// capture times, drop, missing entries, then pixel noise.
SyntheticScene Capture(const Trajectory& position, int num_points,
                       int num_samples, double duration, const Vec3& target,
                       const RigSpec& rig, const CorruptionSpec& corrupt,
                       int stream_offset = 0) {
  rig.Validate();
  corrupt.Validate();
  const int N0 = num_samples;
  const int P = num_points;
  const int C = rig.num_cameras;
  const double dt = duration / N0;
  const std::vector<Camera> cams = rig.Cameras(target);

  auto timing_rng = Stream(corrupt.seed, 1);
  auto drop_rng = Stream(corrupt.seed, 2);
  auto missing_rng = Stream(corrupt.seed, 3);
  auto noise_rng = Stream(corrupt.seed, 4);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> time(N0);
  for (int k = 0; k < N0; ++k)
    time[k] = (k + rig.phase_jitter * unit(timing_rng)) * dt;

  std::vector<int> samples(N0);
  std::iota(samples.begin(), samples.end(), 0);
  const int drop = static_cast<int>(std::lround(corrupt.drop_fraction * N0));
  if (drop > 0) {
    std::vector<int> shuffled = samples;
    std::shuffle(shuffled.begin(), shuffled.end(), drop_rng);
    std::vector<char> keep(N0, 1);
    for (int k = 0; k < drop; ++k) keep[shuffled[k]] = 0;
    samples.clear();
    for (int k = 0; k < N0; ++k)
      if (keep[k]) samples.push_back(k);
  }

  // Stream-major image order: camera first, then time.
  std::stable_sort(samples.begin(), samples.end(),
                   [&](int a, int b) { return a % C < b % C; });
  const int N = static_cast<int>(samples.size());

  SyntheticScene out;
  out.ground_truth = StructureMatrix(N, P);
  out.timestamps.resize(N);
  out.event.assign(N, 0);
  std::vector<Camera> image_cams(N);
  std::vector<std::optional<int>> sid(N), sidx(N);
  std::vector<int> per_camera(C, 0);
  for (int n = 0; n < N; ++n) {
    const int k = samples[n];
    const int cam = k % C;
    image_cams[n] = cams[cam];
    sid[n] = stream_offset + cam;
    sidx[n] = per_camera[cam]++;
    out.timestamps[n] = time[k];
    for (int p = 0; p < P; ++p)
      out.ground_truth.set_point(n, p, position(p, time[k]));
  }

  std::vector<Observation2D> obs(static_cast<size_t>(N) * P);
  for (int n = 0; n < N; ++n)
    for (int p = 0; p < P; ++p) {
      const Vec3 X = out.ground_truth.point(n, p);
      if (image_cams[n].Depth(X) <= 0.0) throw Error("invalid rig for motion");
      obs[n * P + p] = {image_cams[n].Project(X), true};
    }

  const int missing =
      static_cast<int>(std::lround(corrupt.missing_fraction * N * P));
  if (missing > 0) {
    std::vector<int> entries(static_cast<size_t>(N) * P);
    std::iota(entries.begin(), entries.end(), 0);
    std::shuffle(entries.begin(), entries.end(), missing_rng);
    std::vector<int> remaining(N, P);
    int removed = 0;
    for (int e : entries) {
      if (removed == missing) break;
      const int n = e / P;
      if (remaining[n] <= 1) continue;
      obs[e].present = false;
      --remaining[n];
      ++removed;
    }
  }

  if (corrupt.noise_std > 0.0) {
    std::normal_distribution<double> gauss(0.0, corrupt.noise_std);
    for (auto& o : obs) {
      const double du = gauss(noise_rng);
      const double dv = gauss(noise_rng);
      if (o.present) o.pixel += Vec2(du, dv);
    }
  }

  out.scene = SceneObservations(std::move(image_cams), P, std::move(obs),
                                std::move(sid), std::move(sidx));
  VecX t = Eigen::Map<const VecX>(out.timestamps.data(), N);
  out.true_order = RanksOf(t);
  return out;
}

}  // namespace

SyntheticScene Generate(const MotionSpec& motion, const RigSpec& rig,
                        const CorruptionSpec& corrupt) {
  motion.Validate();
  return Capture([&](int p, double t) { return motion.Position(p, t); },
                 motion.num_points, motion.num_samples, motion.duration,
                 motion.center, rig, corrupt);
}

SyntheticScene GenerateFromFrames(const StructureMatrix& frames,
                                  double duration, const RigSpec& rig,
                                  const CorruptionSpec& corrupt) {
  const int F = frames.num_images();
  const int P = frames.num_points();
  if (F < 2) throw Error("need at least two frames");
  if (!(duration > 0.0)) throw Error("sampling rate must be positive");
  Vec3 target = Vec3::Zero();
  for (int f = 0; f < F; ++f)
    for (int p = 0; p < P; ++p) target += frames.point(f, p);
  target /= static_cast<double>(F) * P;
  const auto position = [&](int p, double t) {
    const double x = std::clamp(t / duration * (F - 1), 0.0, F - 1.0);
    const int f = std::min(static_cast<int>(x), F - 2);
    const double s = x - f;
    return Vec3((1.0 - s) * frames.point(f, p) + s * frames.point(f + 1, p));
  };
  return Capture(position, P, F, duration, target, rig, corrupt);
}

SyntheticScene GenerateEvents(const std::vector<MotionSpec>& events,
                              const RigSpec& rig, const CorruptionSpec& corrupt) {
  if (events.empty()) throw Error("no events");
  const int P = events[0].num_points;
  std::vector<Camera> cams;
  std::vector<Observation2D> obs;
  std::vector<std::optional<int>> sid, sidx;
  std::vector<std::vector<double>> rows;
  SyntheticScene out;
  double clock = 0.0;
  for (size_t k = 0; k < events.size(); ++k) {
    if (events[k].num_points != P) throw Error("events need equal point counts");
    events[k].Validate();
    CorruptionSpec c = corrupt;
    c.seed = corrupt.seed + 7919 * k;
    const SyntheticScene s = Generate(events[k], rig, c);
    for (int n = 0; n < s.scene.num_images(); ++n) {
      cams.push_back(s.scene.camera(n));
      for (int p = 0; p < P; ++p) obs.push_back(s.scene.observation(n, p));
      sid.push_back(static_cast<int>(k) * rig.num_cameras + *s.scene.stream_id(n));
      sidx.push_back(s.scene.stream_index(n));
      out.timestamps.push_back(clock + s.timestamps[n]);
      out.event.push_back(static_cast<int>(k));
      const VecX row = s.ground_truth.values().row(n).transpose();
      rows.emplace_back(row.data(), row.data() + row.size());
    }
    clock += 2.0 * events[k].duration;
  }
  const int N = static_cast<int>(rows.size());
  out.ground_truth = StructureMatrix(N, P);
  for (int n = 0; n < N; ++n)
    for (int j = 0; j < 3 * P; ++j) out.ground_truth.values()(n, j) = rows[n][j];
  out.scene = SceneObservations(std::move(cams), P, std::move(obs),
                                std::move(sid), std::move(sidx));
  VecX t = Eigen::Map<const VecX>(out.timestamps.data(), N);
  out.true_order = RanksOf(t);
  return out;
}

SceneFile GenerateMultiTarget(const MotionSpec& motion, const RigSpec& rig,
                              const CorruptionSpec& corrupt, int subjects,
                              double separation) {
  if (subjects < 1) throw Error("need at least one subject");
  motion.Validate();
  std::vector<MotionSpec> specs(subjects, motion);
  for (int k = 0; k < subjects; ++k) {
    specs[k].center =
        motion.center + (k - 0.5 * (subjects - 1)) * separation * Vec3::UnitY();
    specs[k].time_offset = motion.time_offset + 0.3 * k;
  }
  const int P = motion.num_points;
  const auto position = [&](int q, double t) {
    return specs[q / P].Position(q % P, t);
  };
  const SyntheticScene s = Capture(position, subjects * P, motion.num_samples,
                                   motion.duration, motion.center, rig, corrupt);

  SceneFile file = SceneFile::FromScene(s.scene);
  file.num_points = P;
  auto order_rng = Stream(corrupt.seed, 5);
  for (int n = 0; n < s.scene.num_images(); ++n) {
    SceneImage& im = file.images[n];
    std::vector<int> listing(subjects);
    std::iota(listing.begin(), listing.end(), 0);
    std::shuffle(listing.begin(), listing.end(), order_rng);
    for (int k : listing) {
      SubjectObservations so;
      so.observations.assign(im.observations.begin() + k * P,
                             im.observations.begin() + (k + 1) * P);
      so.truth = k;
      im.subjects.push_back(std::move(so));
    }
    im.observations.clear();
  }
  file.ground_truth = s.ground_truth;
  file.true_order = s.true_order;
  return file;
}

double MeanPointError(const StructureMatrix& estimate,
                      const StructureMatrix& ground_truth) {
  if (estimate.num_images() != ground_truth.num_images() ||
      estimate.num_points() != ground_truth.num_points())
    throw Error("structure size mismatch");
  double sum = 0.0;
  for (int n = 0; n < estimate.num_images(); ++n)
    for (int p = 0; p < estimate.num_points(); ++p)
      sum += (estimate.point(n, p) - ground_truth.point(n, p)).norm();
  return sum / (static_cast<double>(estimate.num_images()) *
                estimate.num_points());
}

double MotionDiameter(const StructureMatrix& ground_truth) {
  std::vector<Vec3> pts;
  for (int n = 0; n < ground_truth.num_images(); ++n)
    for (int p = 0; p < ground_truth.num_points(); ++p)
      pts.push_back(ground_truth.point(n, p));
  double best = 0.0;
  for (size_t a = 0; a < pts.size(); ++a)
    for (size_t b = a + 1; b < pts.size(); ++b)
      best = std::max(best, (pts[a] - pts[b]).norm());
  return best;
}

Evaluation Evaluate(const StructureMatrix& estimate, const VecX& scores,
                    const StructureMatrix& ground_truth,
                    const std::vector<int>& true_order) {
  Evaluation ev;
  ev.mean_3d_error = MeanPointError(estimate, ground_truth);
  VecX truth(true_order.size());
  for (size_t k = 0; k < true_order.size(); ++k) truth(k) = true_order[k];
  ev.tau_abs = std::abs(KendallTau(scores, truth));
  return ev;
}

Evaluation Evaluate(const SolveResult& result,
                    const StructureMatrix& ground_truth,
                    const std::vector<int>& true_order) {
  return Evaluate(result.structure, RecoveredScores(result), ground_truth,
                  true_order);
}

}  // namespace dloe
