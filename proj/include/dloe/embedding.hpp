#ifndef DLOE_EMBEDDING_HPP_
#define DLOE_EMBEDDING_HPP_

#include <string>

#include "dloe/types.hpp"

namespace dloe {

enum class EmbeddingMethod { kMds, kSpectralRank, kShortestPath };
enum class DistanceKind { kEuclidean, kArc };

// One scalar per image; sorting the values yields a sequencing.
struct LineEmbedding {
  VecX values;
  EmbeddingMethod method = EmbeddingMethod::kMds;
};

std::string ToString(EmbeddingMethod method);
std::string ToString(DistanceKind kind);
// Accepts "mds", "sr", "shp" / "euclidean", "arc"; throws Error otherwise.
EmbeddingMethod ParseEmbeddingMethod(const std::string& name);
DistanceKind ParseDistanceKind(const std::string& name);

}  // namespace dloe

#endif  // DLOE_EMBEDDING_HPP_
