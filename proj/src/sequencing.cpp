#include "dloe/sequencing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "dloe/laplacian_graph.hpp"

namespace dloe {

std::string ToString(EmbeddingMethod method) {
  switch (method) {
    case EmbeddingMethod::kMds:
      return "mds";
    case EmbeddingMethod::kSpectralRank:
      return "sr";
    case EmbeddingMethod::kShortestPath:
      return "shp";
  }
  return "?";
}

std::string ToString(DistanceKind kind) {
  return kind == DistanceKind::kArc ? "arc" : "euclidean";
}

EmbeddingMethod ParseEmbeddingMethod(const std::string& name) {
  if (name == "mds") return EmbeddingMethod::kMds;
  if (name == "sr") return EmbeddingMethod::kSpectralRank;
  if (name == "shp") return EmbeddingMethod::kShortestPath;
  throw Error("unknown embedding method '" + name + "'");
}

DistanceKind ParseDistanceKind(const std::string& name) {
  if (name == "euclidean") return DistanceKind::kEuclidean;
  if (name == "arc") return DistanceKind::kArc;
  throw Error("unknown distance kind '" + name + "'");
}

double PointSegmentDistance(const VecX& x, const VecX& a, const VecX& b,
                            double* param) {
  const VecX ab = b - a;
  const double len2 = ab.squaredNorm();
  double s = 0.0;
  if (len2 > 0.0) s = std::clamp((x - a).dot(ab) / len2, 0.0, 1.0);
  if (param) *param = s;
  return (x - a - s * ab).norm();
}

DistanceMatrix EuclideanDistanceMatrix(const StructureMatrix& X) {
  const int n = X.num_images();
  DistanceMatrix Z{MatX::Zero(n, n), DistanceKind::kEuclidean};
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double d = (X.values().row(i) - X.values().row(j)).norm();
      Z.values(i, j) = d;
      Z.values(j, i) = d;
    }
  return Z;
}

namespace {

int SegmentCount(const MatX& stream) {
  return std::max<int>(1, static_cast<int>(stream.rows()) - 1);
}

// Closest point of segment j of `stream` to x: distance and arc position.
std::pair<double, double> MatchOnSegment(const VecX& x, const MatX& stream,
                                         const VecX& cumulative, int j) {
  if (stream.rows() < 2) return {(x - stream.row(0).transpose()).norm(), 0.0};
  double s = 0.0;
  const double d = PointSegmentDistance(x, stream.row(j).transpose(),
                                        stream.row(j + 1).transpose(), &s);
  return {d, cumulative(j) + s * (cumulative(j + 1) - cumulative(j))};
}

VecX CumulativeLength(const MatX& stream) {
  VecX c = VecX::Zero(stream.rows());
  for (int k = 1; k < stream.rows(); ++k)
    c(k) = c(k - 1) + (stream.row(k) - stream.row(k - 1)).norm();
  return c;
}

// Sign convention for spectral outputs: the entry of largest magnitude is
// positive. Independent of item labelling.
void FixOrientation(VecX& f) {
  if (f.size() == 0) return;
  Eigen::Index k = 0;
  f.cwiseAbs().maxCoeff(&k);
  if (f(k) < 0.0) f = -f;
}

void RequireNondegenerate(const DistanceMatrix& Z) {
  if (Z.values.size() == 0 || !(Z.values.maxCoeff() > 0.0))
    throw Error("degenerate distances");
}

}  // namespace

DtwAssignment DtwRegister(const std::vector<MatX>& streams) {
  const int S = static_cast<int>(streams.size());
  DtwAssignment out;
  out.segment.assign(S, std::vector<std::vector<int>>(S));
  out.total_cost = MatX::Zero(S, S);
  out.single_sample.resize(S);
  for (int a = 0; a < S; ++a) out.single_sample[a] = streams[a].rows() < 2;

  std::vector<VecX> cumulative(S);
  for (int b = 0; b < S; ++b) cumulative[b] = CumulativeLength(streams[b]);

  for (int a = 0; a < S; ++a) {
    for (int b = 0; b < S; ++b) {
      if (a == b) continue;
      const MatX& A = streams[a];
      const MatX& B = streams[b];
      const int na = static_cast<int>(A.rows());
      const int nb = SegmentCount(B);
      if (na == 0) continue;

      // cost(i, j): best total for samples 0..i with sample i on segment j.
      MatX cost(na, nb);
      for (int i = 0; i < na; ++i) {
        double running = std::numeric_limits<double>::infinity();
        for (int j = 0; j < nb; ++j) {
          const double d =
              MatchOnSegment(A.row(i).transpose(), B, cumulative[b], j).first;
          if (i == 0) {
            cost(i, j) = d;
          } else {
            running = std::min(running, cost(i - 1, j));
            cost(i, j) = d + running;
          }
        }
      }
      std::vector<int> seg(na);
      int j_best = 0;
      for (int j = 1; j < nb; ++j)
        if (cost(na - 1, j) < cost(na - 1, j_best)) j_best = j;
      seg[na - 1] = j_best;
      out.total_cost(a, b) = cost(na - 1, j_best);
      for (int i = na - 2; i >= 0; --i) {
        int jb = 0;
        for (int j = 1; j <= seg[i + 1]; ++j)
          if (cost(i, j) < cost(i, jb)) jb = j;
        seg[i] = jb;
      }
      out.segment[a][b] = std::move(seg);
    }
  }
  return out;
}

DistanceMatrix ArcDistanceMatrix(const std::vector<MatX>& streams,
                                 const DtwAssignment& assignment) {
  const int S = static_cast<int>(streams.size());
  std::vector<int> offset(S + 1, 0);
  for (int a = 0; a < S; ++a)
    offset[a + 1] = offset[a] + static_cast<int>(streams[a].rows());
  const int total = offset[S];
  std::vector<VecX> cumulative(S);
  for (int a = 0; a < S; ++a) cumulative[a] = CumulativeLength(streams[a]);

  MatX directed = MatX::Zero(total, total);
  for (int a = 0; a < S; ++a) {
    const int na = static_cast<int>(streams[a].rows());
    for (int i = 0; i < na; ++i)
      for (int k = 0; k < na; ++k)
        directed(offset[a] + i, offset[a] + k) =
            std::abs(cumulative[a](i) - cumulative[a](k));
    for (int b = 0; b < S; ++b) {
      if (a == b) continue;
      const int nb = static_cast<int>(streams[b].rows());
      for (int i = 0; i < na; ++i) {
        const auto [dist, arc] =
            MatchOnSegment(streams[a].row(i).transpose(), streams[b],
                           cumulative[b], assignment.segment[a][b][i]);
        for (int l = 0; l < nb; ++l)
          directed(offset[a] + i, offset[b] + l) =
              dist + std::abs(arc - cumulative[b](l));
      }
    }
  }
  DistanceMatrix Z{0.5 * (directed + directed.transpose()), DistanceKind::kArc};
  Z.values.diagonal().setZero();
  return Z;
}

DistanceMatrix ArcDistanceMatrix(const StructureMatrix& X,
                                 const std::vector<std::vector<int>>& streams) {
  std::vector<MatX> shapes;
  std::vector<int> image_of;
  for (const auto& s : streams) {
    MatX m(s.size(), X.values().cols());
    for (size_t k = 0; k < s.size(); ++k) {
      m.row(k) = X.values().row(s[k]);
      image_of.push_back(s[k]);
    }
    shapes.push_back(std::move(m));
  }
  const int n = X.num_images();
  if (static_cast<int>(image_of.size()) != n)
    throw Error("streams must cover every image exactly once");
  const DistanceMatrix packed = ArcDistanceMatrix(shapes, DtwRegister(shapes));
  DistanceMatrix Z{MatX::Zero(n, n), DistanceKind::kArc};
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      Z.values(image_of[u], image_of[v]) = packed.values(u, v);
  return Z;
}

LineEmbedding EmbedMds(const DistanceMatrix& Z) {
  RequireNondegenerate(Z);
  const int n = static_cast<int>(Z.values.rows());
  const MatX sq = Z.values.array().square();
  const MatX J = MatX::Identity(n, n) - MatX::Constant(n, n, 1.0 / n);
  const MatX B = -0.5 * J * sq * J;
  Eigen::SelfAdjointEigenSolver<MatX> eig(0.5 * (B + B.transpose()));
  const double top = eig.eigenvalues()(n - 1);
  if (!(top > 0.0)) throw Error("degenerate distances");
  VecX f = eig.eigenvectors().col(n - 1) * std::sqrt(top);
  FixOrientation(f);
  return {f, EmbeddingMethod::kMds};
}

LineEmbedding EmbedSpectralRank(const DistanceMatrix& Z) {
  RequireNondegenerate(Z);
  const int n = static_cast<int>(Z.values.rows());
  std::vector<double> nonzero;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (Z.values(i, j) > 0.0) nonzero.push_back(Z.values(i, j));
  auto mid = nonzero.begin() + nonzero.size() / 2;
  std::nth_element(nonzero.begin(), mid, nonzero.end());
  const double sigma = *mid;

  MatX S = (-Z.values.array().square() / (2.0 * sigma * sigma)).exp();
  S.diagonal().setZero();

  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    for (int j = 0; j < n; ++j)
      if (!seen[j] && S(i, j) > 1e-12) {
        seen[j] = 1;
        ++reached;
        stack.push_back(j);
      }
  }
  if (reached != n) throw Error("disconnected sequencing graph");

  Eigen::SelfAdjointEigenSolver<MatX> eig(LaplacianOf(S));
  VecX f = eig.eigenvectors().col(1);
  FixOrientation(f);
  const double range = f.maxCoeff() - f.minCoeff();
  if (!(range > 0.0)) throw Error("degenerate distances");
  f = (f.array() - f.minCoeff()) * (Z.values.maxCoeff() / range);
  return {f, EmbeddingMethod::kSpectralRank};
}

LineEmbedding EmbedShortestPath(const DistanceMatrix& Z) {
  const int n = static_cast<int>(Z.values.rows());
  if (n < 2) throw Error("shortest path embedding needs two or more items");
  RequireNondegenerate(Z);
  const MatX& d = Z.values;

  int start = 0;
  double farthest = -1.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (d(i, j) > farthest) {
        farthest = d(i, j);
        start = i;
      }

  std::vector<int> path{start};
  std::vector<char> used(n, 0);
  used[start] = 1;
  while (static_cast<int>(path.size()) < n) {
    const int last = path.back();
    int next = -1;
    for (int j = 0; j < n; ++j)
      if (!used[j] && (next < 0 || d(last, j) < d(last, next))) next = j;
    used[next] = 1;
    path.push_back(next);
  }

  // Open-path 2-opt: reversing path[i..k] replaces the edges entering i and
  // leaving k. Best improving move per pass.
  const double eps = 1e-12 * farthest;
  for (;;) {
    double best_delta = -eps;
    int bi = -1, bk = -1;
    for (int i = 0; i < n - 1; ++i)
      for (int k = i + 1; k < n; ++k) {
        if (i == 0 && k == n - 1) continue;
        double delta = 0.0;
        if (i > 0) delta += d(path[i - 1], path[k]) - d(path[i - 1], path[i]);
        if (k < n - 1)
          delta += d(path[i], path[k + 1]) - d(path[k], path[k + 1]);
        if (delta < best_delta) {
          best_delta = delta;
          bi = i;
          bk = k;
        }
      }
    if (bi < 0) break;
    std::reverse(path.begin() + bi, path.begin() + bk + 1);
  }

  VecX f(n);
  double along = 0.0;
  f(path[0]) = 0.0;
  for (int k = 1; k < n; ++k) {
    along += d(path[k - 1], path[k]);
    f(path[k]) = along;
  }
  return {f, EmbeddingMethod::kShortestPath};
}

LineEmbedding GraphOrdering(const MatX& weight) {
  const int n = static_cast<int>(weight.rows());
  if (n < 2) throw Error("graph ordering needs two or more items");
  const MatX S = weight + weight.transpose();
  const EventPartition parts = SegmentEvents(LaplaceFactors::Uniform(S / 2.0), 0.0);
  if (parts.component_count != 1) throw Error("disconnected sequencing graph");
  Eigen::SelfAdjointEigenSolver<MatX> eig(LaplacianOf(S));
  VecX f = eig.eigenvectors().col(1);
  FixOrientation(f);
  return {f, EmbeddingMethod::kSpectralRank};
}

LineEmbedding Embed(const DistanceMatrix& Z, EmbeddingMethod method) {
  switch (method) {
    case EmbeddingMethod::kMds:
      return EmbedMds(Z);
    case EmbeddingMethod::kSpectralRank:
      return EmbedSpectralRank(Z);
    case EmbeddingMethod::kShortestPath:
      return EmbedShortestPath(Z);
  }
  throw Error("unknown embedding method");
}

double KendallTau(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("kendall tau length mismatch");
  const size_t n = a.size();
  if (n < 2) throw Error("kendall tau needs two or more items");
  double concordant = 0.0, discordant = 0.0, ties_a = 0.0, ties_b = 0.0;
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) {
      const double da = a[i] - a[j];
      const double db = b[i] - b[j];
      if (da == 0.0 && db == 0.0) continue;
      if (da == 0.0) {
        ties_a += 1.0;
      } else if (db == 0.0) {
        ties_b += 1.0;
      } else if ((da > 0.0) == (db > 0.0)) {
        concordant += 1.0;
      } else {
        discordant += 1.0;
      }
    }
  const double denom = std::sqrt((concordant + discordant + ties_a) *
                                 (concordant + discordant + ties_b));
  if (denom == 0.0) return 0.0;
  return (concordant - discordant) / denom;
}

double KendallTau(const VecX& a, const VecX& b) {
  return KendallTau(std::span<const double>(a.data(), a.size()),
                    std::span<const double>(b.data(), b.size()));
}

std::vector<int> RanksOf(const VecX& scores) {
  std::vector<int> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return scores(a) < scores(b); });
  std::vector<int> rank(scores.size());
  for (size_t k = 0; k < idx.size(); ++k) rank[idx[k]] = static_cast<int>(k);
  return rank;
}

LineEmbedding GlobalSequencingPrior(
    const StructureMatrix& X, const std::vector<std::vector<int>>& streams,
    EmbeddingMethod method, DistanceKind kind) {
  const DistanceMatrix Z = kind == DistanceKind::kArc
                               ? ArcDistanceMatrix(X, streams)
                               : EuclideanDistanceMatrix(X);
  return Embed(Z, method);
}

}  // namespace dloe
