#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vec2gc/graph.hpp"

namespace vec2gc {

using CommunityId = std::uint32_t;

/// Node-to-community assignment with dense ids and its cached modularity.
struct Partition {
  std::vector<CommunityId> assignment;
  std::size_t community_count = 0;
  double modularity = 0.0;

  /// Member lists per community, members in increasing node order.
  std::vector<std::vector<NodeId>> communities() const;
};

struct LouvainConfig {
  double gain_epsilon = 1e-9;
  int max_sweeps = 100;  ///< local-move sweeps per level
  int max_levels = 50;
  unsigned threads = 1;  ///< 0 = hardware concurrency
  /// Independent runs from derived seeds; the highest-modularity result is
  /// kept (earliest run on ties). Run 0 uses the caller's seed unchanged.
  int restarts = 10;
};

/// Newman modularity
///   Q = 1/(2m) * sum_{a,b} [A_ab - k_a k_b / (2m)] delta(c_a, c_b)
/// over ordered pairs including a == b, with A_aa = 2 * self_loop(a).
/// Throws InputError when the graph has no edge weight (m = 0) or the
/// assignment does not cover the graph.
double modularity(const WeightedGraph& g, std::span<const CommunityId> assignment);

/// Change in modularity from moving `node` out of its community into `target`,
/// evaluated with the same closed-form gain the optimizer uses.
double move_gain(const WeightedGraph& g, std::span<const CommunityId> assignment,
                 NodeId node, CommunityId target);

/// Relabels ids densely in order of first appearance by node index.
std::size_t compact_assignment(std::span<CommunityId> assignment);

/// Collapses each community into one node. Inter-community weights are summed;
/// intra-community weight (edges counted once, plus member self-loops) becomes
/// the super-node's self-loop. Modularity of the induced partition is
/// preserved. Assignment ids must be dense.
WeightedGraph aggregate(const WeightedGraph& g, std::span<const CommunityId> assignment,
                        std::size_t community_count);

/// Two-phase Louvain: seeded-order local moves until no gain above
/// gain_epsilon, then aggregation, repeated until a level makes no move. A
/// final local-move pass on the input graph leaves the result locally optimal
/// under single-node moves. Deterministic for a fixed seed.
Partition louvain(const WeightedGraph& g, std::uint64_t seed,
                  const LouvainConfig& config = {});

}  // namespace vec2gc
