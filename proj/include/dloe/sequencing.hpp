#ifndef DLOE_SEQUENCING_HPP_
#define DLOE_SEQUENCING_HPP_

#include <span>
#include <vector>

#include "dloe/embedding.hpp"
#include "dloe/scene_model.hpp"

namespace dloe {

struct DistanceMatrix {
  MatX values;
  DistanceKind kind = DistanceKind::kEuclidean;
};

// Registration of every ordered stream pair. Streams are given as matrices
// with one shape (3P values) per row, in stream order.
struct DtwAssignment {
  // segment[a][b][i] = j: sample i of stream a is matched to the segment
  // (j, j+1) of stream b. Empty when a == b. Streams with a single sample
  // expose one degenerate segment 0 made of that sample.
  std::vector<std::vector<std::vector<int>>> segment;
  // Summed point-to-segment distance of each pair's assignment.
  MatX total_cost;
  // Streams with fewer than two samples.
  std::vector<bool> single_sample;
};

// Distance from x to the segment [a, b]; `param` receives the clamped
// position of the closest point in [0, 1].
double PointSegmentDistance(const VecX& x, const VecX& a, const VecX& b,
                            double* param = nullptr);

DistanceMatrix EuclideanDistanceMatrix(const StructureMatrix& X);

// Monotone assignment of samples of a to segments of b minimising the total
// point-to-segment distance, by dynamic programming. Ties go to the lower
// segment index.
DtwAssignment DtwRegister(const std::vector<MatX>& streams);

// Arc distances over all samples, indexed by concatenating the streams in
// order. Intra-stream entries are polyline lengths; inter-stream entries are
// the distance to the matched point on the assigned segment plus the arc
// length from there, averaged over both directions.
DistanceMatrix ArcDistanceMatrix(const std::vector<MatX>& streams,
                                 const DtwAssignment& assignment);

// Arc distances indexed by image, with streams given as image index lists.
DistanceMatrix ArcDistanceMatrix(const StructureMatrix& X,
                                 const std::vector<std::vector<int>>& streams);

// Classical MDS: leading eigenvector of the double-centred -Z.^2/2, scaled by
// the square root of its eigenvalue.
LineEmbedding EmbedMds(const DistanceMatrix& Z);

// Fiedler vector of the Gaussian similarity graph (bandwidth = median
// nonzero distance), rescaled so its range equals max(Z).
LineEmbedding EmbedSpectralRank(const DistanceMatrix& Z);

// Nearest-neighbour path from the farthest pair, refined by 2-opt; values
// are cumulative path lengths.
LineEmbedding EmbedShortestPath(const DistanceMatrix& Z);

LineEmbedding Embed(const DistanceMatrix& Z, EmbeddingMethod method);

// Fiedler vector of the symmetrized relative weights W + W^T of a learned
// graph. Throws Error("disconnected sequencing graph") if it splits.
LineEmbedding GraphOrdering(const MatX& weight);

// Kendall tau-b between two score vectors over the same items.
double KendallTau(std::span<const double> a, std::span<const double> b);
double KendallTau(const VecX& a, const VecX& b);

// Rank of each item when sorting the scores ascending (stable).
std::vector<int> RanksOf(const VecX& scores);

// Line embedding of the images of X: distances (Euclidean, or arc length
// through DTW-registered streams) followed by the chosen reduction.
LineEmbedding GlobalSequencingPrior(
    const StructureMatrix& X, const std::vector<std::vector<int>>& streams,
    EmbeddingMethod method, DistanceKind kind);

}  // namespace dloe

#endif  // DLOE_SEQUENCING_HPP_
