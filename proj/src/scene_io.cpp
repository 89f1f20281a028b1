#include "dloe/scene_io.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace dloe {

namespace {

// Node access with positions attached to every failure.
class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void Fail(const YAML::Node& node, const std::string& msg) const {
    const YAML::Mark m = node.Mark();
    std::ostringstream os;
    os << source_ << ":" << m.line + 1 << ":" << m.column + 1 << ": " << msg;
    throw Error(os.str());
  }

  void ExpectMap(const YAML::Node& node, const std::string& what,
                 std::initializer_list<const char*> allowed) const {
    if (!node.IsMap()) Fail(node, what + " must be a mapping");
    std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& kv : node) {
      const std::string key = kv.first.as<std::string>();
      if (!keys.count(key)) Fail(kv.first, "unknown key '" + key + "'");
    }
  }

  YAML::Node Require(const YAML::Node& map, const char* key) const {
    const YAML::Node n = map[key];
    if (!n) Fail(map, std::string("missing key '") + key + "'");
    return n;
  }

  double Double(const YAML::Node& node) const {
    if (!node.IsScalar()) Fail(node, "expected a number");
    try {
      return node.as<double>();
    } catch (const YAML::Exception&) {
      Fail(node, "expected a number");
    }
  }

  int Int(const YAML::Node& node) const {
    if (!node.IsScalar()) Fail(node, "expected an integer");
    try {
      return node.as<int>();
    } catch (const YAML::Exception&) {
      Fail(node, "expected an integer");
    }
  }

  bool Bool(const YAML::Node& node) const {
    if (!node.IsScalar()) Fail(node, "expected a boolean");
    try {
      return node.as<bool>();
    } catch (const YAML::Exception&) {
      Fail(node, "expected a boolean");
    }
  }

  std::string String(const YAML::Node& node) const {
    if (!node.IsScalar()) Fail(node, "expected a string");
    return node.as<std::string>();
  }

  std::vector<double> Doubles(const YAML::Node& node, int expected = -1) const {
    if (!node.IsSequence()) Fail(node, "expected a list of numbers");
    if (expected >= 0 && static_cast<int>(node.size()) != expected)
      Fail(node, "expected " + std::to_string(expected) + " numbers");
    std::vector<double> out;
    for (const auto& v : node) out.push_back(Double(v));
    return out;
  }

  std::vector<int> Ints(const YAML::Node& node) const {
    if (!node.IsSequence()) Fail(node, "expected a list of integers");
    std::vector<int> out;
    for (const auto& v : node) out.push_back(Int(v));
    return out;
  }

  Mat3 Matrix3(const YAML::Node& node) const {
    const auto v = Doubles(node, 9);
    Mat3 m;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m(r, c) = v[3 * r + c];
    return m;
  }

  StructureMatrix Structure(const YAML::Node& node, int rows, int cols) const {
    if (!node.IsSequence()) Fail(node, "structure must be a list of rows");
    if (rows >= 0 && static_cast<int>(node.size()) != rows)
      Fail(node, "structure must have " + std::to_string(rows) + " rows");
    const int n = static_cast<int>(node.size());
    if (n == 0) Fail(node, "structure is empty");
    MatX values;
    for (int i = 0; i < n; ++i) {
      const auto row = Doubles(node[i], cols);
      if (cols < 0) {
        cols = static_cast<int>(row.size());
        if (cols == 0 || cols % 3 != 0)
          Fail(node[i], "structure rows must hold 3P numbers");
      }
      if (i == 0) values.resize(n, cols);
      for (int j = 0; j < cols; ++j) values(i, j) = row[j];
    }
    return StructureMatrix(std::move(values));
  }

  std::vector<Observation2D> Observations(const YAML::Node& node,
                                          int num_points) const {
    if (!node.IsSequence()) Fail(node, "observations must be a list");
    std::vector<Observation2D> obs(num_points);
    for (const auto& o : node) {
      if (!o.IsSequence() || o.size() != 3)
        Fail(o, "observation must be [p, u, v]");
      const int p = Int(o[0]);
      if (p < 0 || p >= num_points) Fail(o[0], "point index out of range");
      if (obs[p].present) Fail(o, "duplicate observation of point " +
                                      std::to_string(p));
      obs[p] = {Vec2(Double(o[1]), Double(o[2])), true};
    }
    return obs;
  }

 private:
  std::string source_;
};

YAML::Node ParseDocument(const std::string& text, const std::string& source) {
  try {
    return YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    std::ostringstream os;
    os << source << ":" << e.mark.line + 1 << ":" << e.mark.column + 1 << ": "
       << e.msg;
    throw Error(os.str());
  }
}

void EmitDoubles(YAML::Emitter& out, const double* v, int n) {
  out << YAML::Flow << YAML::BeginSeq;
  for (int k = 0; k < n; ++k) out << v[k];
  out << YAML::EndSeq;
}

void EmitMatrix3(YAML::Emitter& out, const Mat3& m) {
  out << YAML::Flow << YAML::BeginSeq;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out << m(r, c);
  out << YAML::EndSeq;
}

void EmitStructure(YAML::Emitter& out, const StructureMatrix& X) {
  out << YAML::BeginSeq;
  for (int n = 0; n < X.num_images(); ++n) {
    const VecX row = X.values().row(n).transpose();
    EmitDoubles(out, row.data(), static_cast<int>(row.size()));
  }
  out << YAML::EndSeq;
}

void EmitInts(YAML::Emitter& out, const std::vector<int>& v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (int x : v) out << x;
  out << YAML::EndSeq;
}

void EmitObservations(YAML::Emitter& out, const std::vector<Observation2D>& obs) {
  out << YAML::BeginSeq;
  for (size_t p = 0; p < obs.size(); ++p) {
    if (!obs[p].present) continue;
    out << YAML::Flow << YAML::BeginSeq << static_cast<int>(p)
        << obs[p].pixel.x() << obs[p].pixel.y() << YAML::EndSeq;
  }
  out << YAML::EndSeq;
}

std::unique_ptr<YAML::Emitter> NewEmitter() {
  auto out = std::make_unique<YAML::Emitter>();
  out->SetDoublePrecision(17);
  return out;
}

bool SameCamera(const Camera& a, const Camera& b) {
  return a.intrinsics == b.intrinsics && a.rotation == b.rotation &&
         a.center == b.center;
}

}  // namespace

bool SceneFile::multi_target() const {
  for (const auto& im : images)
    if (!im.subjects.empty()) return true;
  return false;
}

SceneObservations SceneFile::ToScene() const {
  if (multi_target()) throw Error("multi-target scene needs the multitarget pipeline");
  std::vector<Camera> cams;
  std::vector<Observation2D> obs;
  std::vector<std::optional<int>> sid, sidx;
  for (const auto& im : images) {
    cams.push_back(cameras.at(im.camera));
    obs.insert(obs.end(), im.observations.begin(), im.observations.end());
    sid.push_back(im.stream_id);
    sidx.push_back(im.stream_index);
  }
  return SceneObservations(std::move(cams), num_points, std::move(obs),
                           std::move(sid), std::move(sidx));
}

SceneFile SceneFile::FromScene(const SceneObservations& scene) {
  SceneFile file;
  file.num_points = scene.num_points();
  for (int n = 0; n < scene.num_images(); ++n) {
    SceneImage im;
    int ref = -1;
    for (size_t c = 0; c < file.cameras.size(); ++c)
      if (SameCamera(file.cameras[c], scene.camera(n))) ref = static_cast<int>(c);
    if (ref < 0) {
      ref = static_cast<int>(file.cameras.size());
      file.cameras.push_back(scene.camera(n));
    }
    im.camera = ref;
    im.stream_id = scene.stream_id(n);
    im.stream_index = scene.stream_index(n);
    for (int p = 0; p < scene.num_points(); ++p)
      im.observations.push_back(scene.observation(n, p));
    file.images.push_back(std::move(im));
  }
  return file;
}

SceneFile ParseSceneFile(const std::string& text, const std::string& source) {
  const Reader rd(source);
  const YAML::Node root = ParseDocument(text, source);
  rd.ExpectMap(root, "scene",
               {"version", "num_points", "cameras", "images", "ground_truth"});
  SceneFile file;
  file.version = rd.Int(rd.Require(root, "version"));
  if (file.version != kFileFormatVersion)
    rd.Fail(root["version"], "unsupported version " + std::to_string(file.version));
  file.num_points = rd.Int(rd.Require(root, "num_points"));
  if (file.num_points < 1) rd.Fail(root["num_points"], "num_points must be positive");

  const YAML::Node cams = rd.Require(root, "cameras");
  if (!cams.IsSequence()) rd.Fail(cams, "cameras must be a list");
  for (const auto& c : cams) {
    rd.ExpectMap(c, "camera", {"K", "R", "C"});
    Camera cam;
    cam.intrinsics = rd.Matrix3(rd.Require(c, "K"));
    cam.rotation = rd.Matrix3(rd.Require(c, "R"));
    const auto center = rd.Doubles(rd.Require(c, "C"), 3);
    cam.center = Vec3(center[0], center[1], center[2]);
    try {
      cam.Validate();
    } catch (const Error& e) {
      rd.Fail(c, e.what());
    }
    file.cameras.push_back(cam);
  }

  const YAML::Node imgs = rd.Require(root, "images");
  if (!imgs.IsSequence()) rd.Fail(imgs, "images must be a list");
  for (const auto& node : imgs) {
    rd.ExpectMap(node, "image",
                 {"camera", "stream_id", "stream_index", "observations", "subjects"});
    SceneImage im;
    im.camera = rd.Int(rd.Require(node, "camera"));
    if (im.camera < 0 || im.camera >= static_cast<int>(file.cameras.size()))
      rd.Fail(node["camera"], "camera reference out of range");
    if (node["stream_id"]) im.stream_id = rd.Int(node["stream_id"]);
    if (node["stream_index"]) im.stream_index = rd.Int(node["stream_index"]);
    if (im.stream_id.has_value() != im.stream_index.has_value())
      rd.Fail(node, "stream_id and stream_index must be given together");
    const bool has_obs = static_cast<bool>(node["observations"]);
    const bool has_subj = static_cast<bool>(node["subjects"]);
    if (has_obs == has_subj)
      rd.Fail(node, "image needs exactly one of 'observations' or 'subjects'");
    if (has_obs) {
      im.observations = rd.Observations(node["observations"], file.num_points);
    } else {
      const YAML::Node subj = node["subjects"];
      if (!subj.IsSequence()) rd.Fail(subj, "subjects must be a list");
      for (const auto& s : subj) {
        rd.ExpectMap(s, "subject", {"observations", "truth"});
        SubjectObservations so;
        so.observations = rd.Observations(rd.Require(s, "observations"),
                                          file.num_points);
        if (s["truth"]) so.truth = rd.Int(s["truth"]);
        im.subjects.push_back(std::move(so));
      }
    }
    file.images.push_back(std::move(im));
  }
  if (file.images.empty()) rd.Fail(imgs, "scene has no images");

  if (const YAML::Node gt = root["ground_truth"]) {
    rd.ExpectMap(gt, "ground_truth", {"structure", "order"});
    file.ground_truth = rd.Structure(rd.Require(gt, "structure"),
                                     static_cast<int>(file.images.size()), -1);
    if (gt["order"]) {
      file.true_order = rd.Ints(gt["order"]);
      if (file.true_order.size() != file.images.size())
        rd.Fail(gt["order"], "order must list every image");
    }
  }
  return file;
}

std::string EmitSceneFile(const SceneFile& file) {
  auto out_ptr = NewEmitter();
  YAML::Emitter& out = *out_ptr;
  out << YAML::BeginMap;
  out << YAML::Key << "version" << YAML::Value << file.version;
  out << YAML::Key << "num_points" << YAML::Value << file.num_points;
  out << YAML::Key << "cameras" << YAML::Value << YAML::BeginSeq;
  for (const auto& c : file.cameras) {
    out << YAML::BeginMap;
    out << YAML::Key << "K" << YAML::Value;
    EmitMatrix3(out, c.intrinsics);
    out << YAML::Key << "R" << YAML::Value;
    EmitMatrix3(out, c.rotation);
    out << YAML::Key << "C" << YAML::Value;
    EmitDoubles(out, c.center.data(), 3);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "images" << YAML::Value << YAML::BeginSeq;
  for (const auto& im : file.images) {
    out << YAML::BeginMap;
    out << YAML::Key << "camera" << YAML::Value << im.camera;
    if (im.stream_id) {
      out << YAML::Key << "stream_id" << YAML::Value << *im.stream_id;
      out << YAML::Key << "stream_index" << YAML::Value << *im.stream_index;
    }
    if (im.subjects.empty()) {
      out << YAML::Key << "observations" << YAML::Value;
      EmitObservations(out, im.observations);
    } else {
      out << YAML::Key << "subjects" << YAML::Value << YAML::BeginSeq;
      for (const auto& s : im.subjects) {
        out << YAML::BeginMap;
        out << YAML::Key << "observations" << YAML::Value;
        EmitObservations(out, s.observations);
        if (s.truth) out << YAML::Key << "truth" << YAML::Value << *s.truth;
        out << YAML::EndMap;
      }
      out << YAML::EndSeq;
    }
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  if (file.ground_truth) {
    out << YAML::Key << "ground_truth" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "structure" << YAML::Value;
    EmitStructure(out, *file.ground_truth);
    if (!file.true_order.empty()) {
      out << YAML::Key << "order" << YAML::Value;
      EmitInts(out, file.true_order);
    }
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

ResultFile ParseResultFile(const std::string& text, const std::string& source) {
  const Reader rd(source);
  const YAML::Node root = ParseDocument(text, source);
  rd.ExpectMap(root, "result",
               {"version", "structure", "degree", "weight", "order",
                "cost_history", "iterations", "converged", "config", "metrics",
                "ground_truth"});
  ResultFile file;
  file.version = rd.Int(rd.Require(root, "version"));
  if (file.version != kFileFormatVersion)
    rd.Fail(root["version"], "unsupported version " + std::to_string(file.version));
  file.structure = rd.Structure(rd.Require(root, "structure"), -1, -1);
  const int n = file.structure.num_images();

  const auto degree = rd.Doubles(rd.Require(root, "degree"), n);
  file.factors.degree = Eigen::Map<const VecX>(degree.data(), n);
  file.factors.weight = MatX::Zero(n, n);
  const YAML::Node w = rd.Require(root, "weight");
  if (!w.IsSequence()) rd.Fail(w, "weight must be a list of [i, j, value]");
  for (const auto& t : w) {
    if (!t.IsSequence() || t.size() != 3) rd.Fail(t, "expected [i, j, value]");
    const int i = rd.Int(t[0]);
    const int j = rd.Int(t[1]);
    if (i < 0 || i >= n || j < 0 || j >= n) rd.Fail(t, "weight index out of range");
    file.factors.weight(i, j) = rd.Double(t[2]);
  }

  file.order = rd.Ints(rd.Require(root, "order"));
  if (static_cast<int>(file.order.size()) != n)
    rd.Fail(root["order"], "order must list every image");

  const YAML::Node hist = rd.Require(root, "cost_history");
  if (!hist.IsSequence()) rd.Fail(hist, "cost_history must be a list");
  for (const auto& h : hist) {
    const auto v = rd.Doubles(h, 5);
    file.cost_history.push_back({v[0], v[1], v[2], v[3], v[4]});
  }
  file.iterations = rd.Int(rd.Require(root, "iterations"));
  file.converged = rd.Bool(rd.Require(root, "converged"));

  const YAML::Node cfg = rd.Require(root, "config");
  rd.ExpectMap(cfg, "config",
               {"lambda1", "lambda2", "lambda3", "smoothness", "max_iterations",
                "convergence_rel_tol", "epsilon_degree", "w_prior_value",
                "stream_prior", "spectral_prior", "embedding", "distance"});
  SolverConfig& c = file.config;
  c.weights.lambda1 = rd.Double(rd.Require(cfg, "lambda1"));
  c.weights.lambda2 = rd.Double(rd.Require(cfg, "lambda2"));
  c.weights.lambda3 = rd.Double(rd.Require(cfg, "lambda3"));
  c.weights.smoothness = rd.Double(rd.Require(cfg, "smoothness"));
  c.max_iterations = rd.Int(rd.Require(cfg, "max_iterations"));
  c.convergence_rel_tol = rd.Double(rd.Require(cfg, "convergence_rel_tol"));
  c.epsilon_degree = rd.Double(rd.Require(cfg, "epsilon_degree"));
  c.w_prior_value = rd.Double(rd.Require(cfg, "w_prior_value"));
  c.use_stream_prior = rd.Bool(rd.Require(cfg, "stream_prior"));
  c.use_spectral_prior = rd.Bool(rd.Require(cfg, "spectral_prior"));
  try {
    c.embedding_method = ParseEmbeddingMethod(rd.String(rd.Require(cfg, "embedding")));
    c.distance_kind = ParseDistanceKind(rd.String(rd.Require(cfg, "distance")));
  } catch (const Error& e) {
    rd.Fail(cfg, e.what());
  }

  if (const YAML::Node m = root["metrics"]) {
    rd.ExpectMap(m, "metrics", {"mean_3d_error", "tau_abs"});
    file.metrics = Metrics{rd.Double(rd.Require(m, "mean_3d_error")),
                           rd.Double(rd.Require(m, "tau_abs"))};
  }
  if (const YAML::Node gt = root["ground_truth"]) {
    rd.ExpectMap(gt, "ground_truth", {"structure", "order"});
    file.ground_truth =
        rd.Structure(rd.Require(gt, "structure"), n, -1);
    file.true_order = rd.Ints(rd.Require(gt, "order"));
    if (static_cast<int>(file.true_order.size()) != n)
      rd.Fail(gt["order"], "order must list every image");
  }
  return file;
}

std::string EmitResultFile(const ResultFile& file) {
  auto out_ptr = NewEmitter();
  YAML::Emitter& out = *out_ptr;
  const int n = file.structure.num_images();
  out << YAML::BeginMap;
  out << YAML::Key << "version" << YAML::Value << file.version;
  out << YAML::Key << "structure" << YAML::Value;
  EmitStructure(out, file.structure);
  out << YAML::Key << "degree" << YAML::Value;
  EmitDoubles(out, file.factors.degree.data(), n);
  out << YAML::Key << "weight" << YAML::Value << YAML::BeginSeq;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double v = file.factors.weight(i, j);
      if (v == 0.0) continue;
      out << YAML::Flow << YAML::BeginSeq << i << j << v << YAML::EndSeq;
    }
  out << YAML::EndSeq;
  out << YAML::Key << "order" << YAML::Value;
  EmitInts(out, file.order);
  out << YAML::Key << "cost_history" << YAML::Value << YAML::BeginSeq;
  for (const auto& h : file.cost_history) {
    const double v[5] = {h.s, h.t, h.o, h.r, h.total};
    EmitDoubles(out, v, 5);
  }
  out << YAML::EndSeq;
  out << YAML::Key << "iterations" << YAML::Value << file.iterations;
  out << YAML::Key << "converged" << YAML::Value << file.converged;

  const SolverConfig& c = file.config;
  out << YAML::Key << "config" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "lambda1" << YAML::Value << c.weights.lambda1;
  out << YAML::Key << "lambda2" << YAML::Value << c.weights.lambda2;
  out << YAML::Key << "lambda3" << YAML::Value << c.weights.lambda3;
  out << YAML::Key << "smoothness" << YAML::Value << c.weights.smoothness;
  out << YAML::Key << "max_iterations" << YAML::Value << c.max_iterations;
  out << YAML::Key << "convergence_rel_tol" << YAML::Value << c.convergence_rel_tol;
  out << YAML::Key << "epsilon_degree" << YAML::Value << c.epsilon_degree;
  out << YAML::Key << "w_prior_value" << YAML::Value << c.w_prior_value;
  out << YAML::Key << "stream_prior" << YAML::Value << c.use_stream_prior;
  out << YAML::Key << "spectral_prior" << YAML::Value << c.use_spectral_prior;
  out << YAML::Key << "embedding" << YAML::Value << ToString(c.embedding_method);
  out << YAML::Key << "distance" << YAML::Value << ToString(c.distance_kind);
  out << YAML::EndMap;

  if (file.metrics) {
    out << YAML::Key << "metrics" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "mean_3d_error" << YAML::Value << file.metrics->mean_3d_error;
    out << YAML::Key << "tau_abs" << YAML::Value << file.metrics->tau_abs;
    out << YAML::EndMap;
  }
  if (file.ground_truth) {
    out << YAML::Key << "ground_truth" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "structure" << YAML::Value;
    EmitStructure(out, *file.ground_truth);
    out << YAML::Key << "order" << YAML::Value;
    EmitInts(out, file.true_order);
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::string ReadTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void WriteTextFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("cannot write '" + path + "'");
}

SceneFile LoadSceneFile(const std::string& path) {
  return ParseSceneFile(ReadTextFile(path), path);
}

void SaveSceneFile(const SceneFile& file, const std::string& path) {
  WriteTextFile(path, EmitSceneFile(file));
}

ResultFile LoadResultFile(const std::string& path) {
  return ParseResultFile(ReadTextFile(path), path);
}

void SaveResultFile(const ResultFile& file, const std::string& path) {
  WriteTextFile(path, EmitResultFile(file));
}

StructureMatrix LoadMocapText(const std::string& path) {
  std::istringstream in(ReadTextFile(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    if (!ls.eof())
      throw Error(path + ":" + std::to_string(line_no) + ": expected numbers");
    if (row.empty()) continue;
    if (row.size() % 3 != 0 || (!rows.empty() && row.size() != rows[0].size()))
      throw Error(path + ":" + std::to_string(line_no) +
                  ": every row needs the same 3P columns");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(path + ": no frames");
  MatX values(rows.size(), rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j) values(i, j) = rows[i][j];
  return StructureMatrix(std::move(values));
}

}  // namespace dloe
