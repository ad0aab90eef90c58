#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "vec2gc/community.hpp"
#include "vec2gc/simgraph.hpp"

namespace vec2gc {

struct TreeNode {
  std::size_t id = 0;
  std::optional<std::size_t> parent;
  std::vector<std::size_t> children;
  /// Corpus indices of the whole subtree, ascending.
  std::vector<NodeId> members;
  /// Modularity of the Louvain run that produced this node's children; unset
  /// on leaves.
  std::optional<double> split_modularity;
  bool is_leaf = true;
};

/// Nodes are stored in depth-first pre-order, so nodes[0] is the root and a
/// node's id is its position. An empty tree has no nodes.
struct ClusterTree {
  std::vector<TreeNode> nodes;

  bool empty() const { return nodes.empty(); }
  const TreeNode& root() const { return nodes.front(); }
  std::size_t depth() const;
};

enum class NonCommunityReason { kIsolated, kSingletonCommunity };

std::string_view reason_name(NonCommunityReason reason);
NonCommunityReason parse_reason(std::string_view name);

struct NonCommunityBucket {
  std::vector<NodeId> members;  ///< ascending
  std::vector<NonCommunityReason> reasons;  ///< parallel to members

  std::size_t size() const { return members.size(); }
};

struct ClusterOptions {
  double mod_threshold = 0.3;
  std::size_t max_size = 500;
  /// Communities smaller than this go to the non-community bucket.
  std::size_t min_community_size = 2;
  std::uint64_t seed = 0;
  LouvainConfig louvain;
};

struct ClusterResult {
  ClusterTree tree;
  NonCommunityBucket bucket;
  /// Set when no node had an edge; the tree is empty and every item is in the
  /// bucket.
  bool all_isolated = false;
};

void check_cluster_options(const ClusterOptions& options);

/// Recursive community detection.
///
/// Degree-0 nodes go straight to the bucket. The rest are clustered with
/// Louvain; when the resulting modularity is below `mod_threshold` the current
/// node becomes a leaf holding all of its members. Otherwise every community
/// larger than `max_size` becomes a child that is split again on its induced
/// subgraph (original weights, no re-thresholding), every community of size
/// within [min_community_size, max_size] becomes a leaf child, and smaller
/// ones go to the bucket. Child k of a node is seeded with
/// derive_seed(node seed, k).
ClusterResult vec2gc_cluster(const SimilarityGraph& g, const ClusterOptions& options);

/// Leaf member lists in depth-first, child order.
std::vector<std::vector<NodeId>> flat_clusters(const ClusterTree& tree);

/// Parameters echoed into the tree document.
struct TreeParams {
  double theta = 0.0;
  double mod_threshold = 0.0;
  std::size_t max_size = 0;
  std::uint64_t seed = 0;
};

/// Serializes the tree with members rendered as item ids (sorted by corpus
/// index) and a fixed key order.
void write_tree_json(std::ostream& out, const ClusterResult& result,
                     const std::vector<std::string>& ids, const TreeParams& params);

/// A tree as read back from JSON, with members as item ids.
struct TreeDocument {
  struct Node {
    std::size_t id = 0;
    std::optional<std::size_t> parent;
    std::vector<std::size_t> children;
    std::vector<std::string> members;
    std::optional<double> split_modularity;
  };

  TreeParams params;
  std::vector<Node> nodes;
  std::vector<std::string> non_community;
  std::vector<std::pair<std::string, NonCommunityReason>> reasons;

  /// Leaf member lists in depth-first, child order from the parentless node.
  std::vector<std::vector<std::string>> leaves() const;
};

/// Throws InputError with the parse location on malformed input.
TreeDocument read_tree_json(std::istream& in);

}  // namespace vec2gc
