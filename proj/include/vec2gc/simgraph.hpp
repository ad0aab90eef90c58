#pragma once

#include <filesystem>
#include <ostream>
#include <span>

#include "vec2gc/embedding_io.hpp"
#include "vec2gc/graph.hpp"

namespace vec2gc {

/// Smallest admissible 1 - cs. Caps edge weights at 1e9 for (near-)duplicate
/// vectors, which would otherwise map to infinite weight.
inline constexpr double kMinDissimilarity = 1e-9;
inline constexpr double kMaxEdgeWeight = 1e9;

/// Cosine of the angle between `a` and `b`, accumulated in double and clamped
/// to [-1, 1]. Throws InputError on length mismatch or a zero-norm input.
double cosine_similarity(std::span<const float> a, std::span<const float> b);

/// 0 when cs < theta, otherwise 1 / (1 - cs), capped at 1e9 once 1 - cs <= 1e-9.
double edge_weight(double cs, double theta);

/// Throws InputError unless theta is in [0, 1).
void check_theta(double theta);

/// Thresholded cosine-similarity graph over an EmbeddingSet. Node i is item i.
/// No self-loops; every weight is at least 1 / (1 - theta).
struct SimilarityGraph {
  WeightedGraph graph;
  double theta = 0.0;

  std::size_t node_count() const { return graph.node_count(); }
};

/// Exact all-pairs construction. Rows are computed in parallel by up to
/// `threads` workers (0 = hardware concurrency); the result does not depend on
/// the thread count.
SimilarityGraph build_graph(const EmbeddingSet& emb, double theta,
                            unsigned threads = 1);

/// "src_id\tdst_id\tweight" per undirected edge (src index < dst index),
/// weights with 12 significant digits.
void write_edge_tsv(const SimilarityGraph& g, const EmbeddingSet& emb,
                    std::ostream& out);

}  // namespace vec2gc
