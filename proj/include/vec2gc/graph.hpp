#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace vec2gc {

using NodeId = std::uint32_t;

struct WeightedEdge {
  NodeId a;
  NodeId b;
  double weight;
};

/// Undirected weighted graph in CSR form.
///
/// Each undirected edge {a,b}, a != b, appears in both rows. Self-loop mass is
/// kept out of the rows in `self_loop(a)`; it arises only from aggregation in
/// the Louvain coarsening and counts once toward the total weight m and twice
/// toward the degree k_a. Neighbor lists are sorted by index.
class WeightedGraph {
 public:
  WeightedGraph() = default;

  /// Builds from an edge list. Duplicate pairs are summed; a == b entries add
  /// to the self-loop mass.
  static WeightedGraph from_edges(std::size_t n, std::span<const WeightedEdge> edges);

  /// Builds from already-symmetric, sorted CSR arrays.
  static WeightedGraph from_csr(std::vector<std::size_t> offsets,
                                std::vector<NodeId> neighbors,
                                std::vector<double> weights,
                                std::vector<double> self_loops = {});

  std::size_t node_count() const { return degrees_.size(); }
  /// Number of undirected edges between distinct nodes.
  std::size_t edge_count() const { return neighbors_.size() / 2; }

  std::span<const NodeId> neighbors(NodeId a) const {
    return {neighbors_.data() + offsets_[a], neighbors_.data() + offsets_[a + 1]};
  }
  std::span<const double> weights(NodeId a) const {
    return {weights_.data() + offsets_[a], weights_.data() + offsets_[a + 1]};
  }
  double self_loop(NodeId a) const { return self_loops_[a]; }
  bool has_self_loops() const { return has_self_loops_; }

  /// k_a: sum of incident weights, self-loops counted twice.
  double degree(NodeId a) const { return degrees_[a]; }
  std::span<const double> degrees() const { return degrees_; }
  /// m: every undirected edge and self-loop counted once.
  double total_weight() const { return total_weight_; }

  /// Weight of edge {a,b}, 0 when absent. Binary search over row a.
  double edge_weight(NodeId a, NodeId b) const;

  /// Undirected edges with a < b in row order.
  std::vector<WeightedEdge> edge_list() const;

 private:
  void finish();

  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> neighbors_;
  std::vector<double> weights_;
  std::vector<double> self_loops_;
  std::vector<double> degrees_;
  double total_weight_ = 0.0;
  bool has_self_loops_ = false;
};

/// Subgraph induced by `members` (given in global indices), keeping original
/// weights. Local node i corresponds to members[i].
WeightedGraph induced_subgraph(const WeightedGraph& graph,
                               std::span<const NodeId> members);

}  // namespace vec2gc
