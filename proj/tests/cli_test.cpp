#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "dloe/scene_io.hpp"
#include "dloe/sequencing.hpp"

namespace dloe {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           (std::string("dloe_cli_") + info->name() + "_" +
            std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string Path(const std::string& name) const { return (dir_ / name).string(); }

  Outcome Exec(const std::string& args) const {
    const std::string out = Path("stdout.txt"), err = Path("stderr.txt");
    const std::string cmd = std::string(DLOE_CLI_PATH) + " " + args + " >" + out +
                            " 2>" + err;
    const int status = std::system(cmd.c_str());
    Outcome r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = ReadTextFile(out);
    r.err = ReadTextFile(err);
    return r;
  }

  fs::path dir_;
};

std::vector<std::vector<std::string>> Csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

double TauAbs(const std::string& stderr_text) {
  const size_t at = stderr_text.find("tau_abs ");
  return at == std::string::npos ? -1.0 : std::stod(stderr_text.substr(at + 8));
}

TEST_F(CliTest, SynthIsDeterministic) {
  const std::string flags = "synth --motion circular --cameras 4 --noise 2 --seed 7";
  ASSERT_EQ(Exec(flags + " -o " + Path("a.yaml")).code, 0);
  ASSERT_EQ(Exec(flags + " -o " + Path("b.yaml")).code, 0);
  EXPECT_EQ(ReadTextFile(Path("a.yaml")), ReadTextFile(Path("b.yaml")));
  const Outcome r = Exec(flags);
  EXPECT_EQ(r.out, ReadTextFile(Path("a.yaml")));
}

TEST_F(CliTest, SynthDropAndCorruption) {
  ASSERT_EQ(Exec("synth --frames 300 --drop 0.5 -o " + Path("d.yaml")).code, 0);
  EXPECT_EQ(LoadSceneFile(Path("d.yaml")).images.size(), 150u);

  ASSERT_EQ(Exec("synth --frames 200 --noise 3 --missing 0.3 -o " + Path("n.yaml"))
                .code,
            0);
  const SceneObservations s = LoadSceneFile(Path("n.yaml")).ToScene();
  EXPECT_NEAR(double(s.PresentCount()) / (s.num_images() * s.num_points()), 0.7,
              0.03);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_NE(Exec("synth --frames").code, 0);
  EXPECT_NE(Exec("frobnicate").code, 0);
  EXPECT_EQ(Exec("synth --missing 1.5").code, 1);
  EXPECT_EQ(Exec("solve " + Path("absent.yaml")).code, 1);
}

TEST_F(CliTest, SolveExitCodesAndMetrics) {
  ASSERT_EQ(Exec("synth --frames 30 --points 3 -o " + Path("s.yaml")).code, 0);
  const Outcome loose = Exec("solve " + Path("s.yaml") + " --tol 1e-3 -o " + Path("r.yaml"));
  EXPECT_EQ(loose.code, 0) << loose.err;
  const ResultFile r = LoadResultFile(Path("r.yaml"));
  EXPECT_TRUE(r.converged);
  ASSERT_TRUE(r.metrics.has_value());
  EXPECT_GE(r.metrics->tau_abs, 0.0);

  const Outcome capped = Exec("solve " + Path("s.yaml") + " --max-iterations 2");
  EXPECT_EQ(capped.code, 2);
  EXPECT_FALSE(ParseResultFile(capped.out).converged);
}

TEST_F(CliTest, SolveEchoesDefaultsAndIsDeterministic) {
  ASSERT_EQ(Exec("synth --frames 20 --points 3 --noise 1 -o " + Path("s.yaml")).code, 0);
  const Outcome a = Exec("solve " + Path("s.yaml") + " --max-iterations 20");
  const Outcome b = Exec("solve " + Path("s.yaml") + " --max-iterations 20");
  EXPECT_EQ(a.out, b.out);
  const ResultFile r = ParseResultFile(a.out);
  EXPECT_EQ(r.config.weights.lambda2, 0.0015);
  EXPECT_EQ(r.config.weights.lambda3, 0.02);
  EXPECT_NE(a.out.find("lambda2: 0.0015\n"), std::string::npos);
  EXPECT_NE(a.out.find("lambda3: 0.02\n"), std::string::npos);
}

TEST_F(CliTest, ParseErrorsReportPosition) {
  WriteTextFile(Path("bad.yaml"), "version: 1\nnum_points: 2\ncolour: red\n");
  const Outcome r = Exec("solve " + Path("bad.yaml"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find(Path("bad.yaml") + ":3:1: unknown key 'colour'"),
            std::string::npos)
      << r.err;
}

TEST_F(CliTest, SequenceLinearInitialStructure) {
  ASSERT_EQ(Exec("synth --motion linear -o " + Path("l.yaml")).code, 0);
  const Outcome r = Exec("sequence " + Path("l.yaml") + " --embedding shp");
  ASSERT_EQ(r.code, 0);
  const auto rows = Csv(r.out);
  EXPECT_EQ(rows.size(), LoadSceneFile(Path("l.yaml")).images.size());
  EXPECT_EQ(rows[0].size(), 4u);
  EXPECT_DOUBLE_EQ(TauAbs(r.err), 1.0);
}

TEST_F(CliTest, SequenceArcBeatsEuclideanOnRepeatingMotion) {
  ASSERT_EQ(Exec("synth --motion circular --cycles 2 --frames 60 --cameras 3 -o " +
                 Path("c.yaml"))
                .code,
            0);
  // Optimised structure: sequence the ground truth through a result file.
  const SceneFile scene = LoadSceneFile(Path("c.yaml"));
  const int n = scene.images.size();
  ResultFile res;
  res.structure = *scene.ground_truth;
  res.factors = LaplaceFactors::Uniform(
      (MatX::Ones(n, n) - MatX::Identity(n, n)) / (n - 1));
  res.order.resize(n, 0);
  SaveResultFile(res, Path("gt.yaml"));
  for (const char* m : {"mds", "sr"}) {
    const std::string base = "sequence " + Path("c.yaml") + " --result " +
                             Path("gt.yaml") + " --embedding " + m;
    const double arc = TauAbs(Exec(base + " --distance-kind arc").err);
    const double euc = TauAbs(Exec(base + " --distance-kind euclidean").err);
    EXPECT_GE(arc, euc) << m;
  }
}

TEST_F(CliTest, SequenceConstantStructureFails) {
  ASSERT_EQ(Exec("synth --frames 10 --points 2 -o " + Path("s.yaml")).code, 0);
  const SceneFile scene = LoadSceneFile(Path("s.yaml"));
  const int n = scene.images.size();
  ResultFile res;
  res.structure = StructureMatrix(MatX::Constant(n, 6, 0.5));
  res.factors = LaplaceFactors::Uniform(
      (MatX::Ones(n, n) - MatX::Identity(n, n)) / (n - 1));
  res.order.resize(n, 0);
  SaveResultFile(res, Path("c.yaml"));
  const Outcome r = Exec("sequence " + Path("s.yaml") + " --result " + Path("c.yaml"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("degenerate distances"), std::string::npos) << r.err;
}

void CheckSweep(const std::vector<std::vector<std::string>>& rows) {
  size_t best = 0;
  for (size_t k = 0; k < rows.size(); ++k) {
    const double actual = std::stod(rows[k][1]);
    EXPECT_LE(std::stod(rows[k][2]), actual + 1e-8);
    EXPECT_LE(actual, std::stod(rows[k][3]) + 1e-8);
    if (actual < std::stod(rows[best][1])) best = k;
  }
  EXPECT_NEAR(std::stod(rows[best][0]), M_PI / 2, 1e-9);
}

TEST_F(CliTest, AnalyzeSweeps) {
  for (const char* sweep : {"theta", "beta"}) {
    const Outcome r = Exec(std::string("analyze --sweep ") + sweep + " --count 17");
    ASSERT_EQ(r.code, 0);
    const auto rows = Csv(r.out);
    ASSERT_EQ(rows.size(), 17u);
    CheckSweep(rows);
  }
  EXPECT_EQ(Exec("analyze --sweep gamma").code, 1);
}

TEST_F(CliTest, SegmentThreeEvents) {
  ASSERT_EQ(Exec("synth --events 3 --motion linear --scale 0.8 --frames 30 "
                 "--points 5 --cameras 3 --noise 1 --seed 9 -o " +
                 Path("e.yaml"))
                .code,
            0);
  const Outcome r = Exec("segment " + Path("e.yaml") + " --resolve --lambda1 1e-4");
  ASSERT_EQ(r.code, 0) << r.err;
  const SceneFile scene = LoadSceneFile(Path("e.yaml"));
  std::map<int, std::vector<std::pair<int, int>>> comps;  // rank, true rank
  for (const auto& row : Csv(r.out))
    comps[std::stoi(row[0])].push_back(
        {std::stoi(row[2]), scene.true_order[std::stoi(row[1])]});
  ASSERT_EQ(comps.size(), 3u);
  for (const auto& [id, pairs] : comps) {
    VecX a(pairs.size()), b(pairs.size());
    for (size_t k = 0; k < pairs.size(); ++k) {
      a(k) = pairs[k].first;
      b(k) = pairs[k].second;
    }
    EXPECT_GE(std::abs(KendallTau(a, b)), 0.9) << id;
  }
}

TEST_F(CliTest, SegmentSingleEventAndHighThreshold) {
  ASSERT_EQ(Exec("synth --motion helix --cycles 0.5 --frames 24 --points 4 "
                 "--cameras 3 --noise 1 --seed 3 -o " +
                 Path("s.yaml"))
                .code,
            0);
  const Outcome one = Exec("segment " + Path("s.yaml") + " --resolve --max-iterations 60");
  EXPECT_NE(one.err.find("components 1\n"), std::string::npos) << one.err;

  Exec("solve " + Path("s.yaml") + " --max-iterations 20 -o " + Path("r.yaml"));
  const Outcome many = Exec("segment " + Path("s.yaml") + " --result " + Path("r.yaml") +
                        " --threshold 10");
  EXPECT_EQ(many.code, 0);
  EXPECT_NE(many.err.find("components 24\n"), std::string::npos) << many.err;
}

TEST_F(CliTest, MultiTargetSingleSubjectMatchesSolve) {
  ASSERT_EQ(Exec("synth --frames 16 --points 3 --cameras 2 --noise 1 -o " +
                 Path("s.yaml"))
                .code,
            0);
  // Same scene with every image holding one unlabeled subject.
  SceneFile scene = LoadSceneFile(Path("s.yaml"));
  for (SceneImage& img : scene.images) {
    img.subjects.push_back({img.observations, std::nullopt});
    img.observations.clear();
  }
  scene.ground_truth.reset();
  scene.true_order.clear();
  SaveSceneFile(scene, Path("m.yaml"));
  const Outcome a = Exec("solve " + Path("s.yaml") + " --max-iterations 20");
  const Outcome b = Exec("multitarget " + Path("m.yaml") + " --max-iterations 20");
  EXPECT_EQ(a.code, b.code);
  const ResultFile ra = ParseResultFile(a.out), rb = ParseResultFile(b.out);
  EXPECT_EQ(ra.structure.values(), rb.structure.values());
  EXPECT_EQ(ra.factors.weight, rb.factors.weight);
  EXPECT_EQ(ra.order, rb.order);
}

TEST_F(CliTest, MultiTargetInconsistentScene) {
  ASSERT_EQ(Exec("synth --frames 8 --points 2 --cameras 2 --subjects 2 "
                 "--separation 2 --distance 10 -o " +
                 Path("m.yaml"))
                .code,
            0);
  SceneFile scene = LoadSceneFile(Path("m.yaml"));
  EXPECT_EQ(scene.images[0].subjects.size(), 2u);
  scene.images[2].subjects.pop_back();
  SaveSceneFile(scene, Path("bad.yaml"));
  const Outcome r = Exec("multitarget " + Path("bad.yaml"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("inconsistent multi-target scene"), std::string::npos);
}

TEST_F(CliTest, ExperimentCsv) {
  const std::string base =
      "experiment --frames 16 --points 3 --cameras 3 --max-iterations 10 ";
  const Outcome sweep = Exec(base + "--vary noise --values 0,2 --seeds 1,2");
  ASSERT_EQ(sweep.code, 0) << sweep.err;
  EXPECT_EQ(Csv(sweep.out).size(), 4u);
  const Outcome ablate = Exec(base + "--ablate t --seeds 1");
  ASSERT_EQ(ablate.code, 0) << ablate.err;
  EXPECT_GE(Csv(ablate.out).size(), 2u);
  EXPECT_EQ(Exec(base + "--vary speed --values 1").code, 1);
}

}  // namespace
}  // namespace dloe
