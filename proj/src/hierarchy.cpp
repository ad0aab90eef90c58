#include "vec2gc/hierarchy.hpp"

#include <algorithm>
#include <unordered_map>

#include <json.hpp>

#include "vec2gc/error.hpp"
#include "vec2gc/rng.hpp"

namespace vec2gc {

namespace {

class TreeBuilder {
 public:
  explicit TreeBuilder(const ClusterOptions& options) : options_(options) {}

  // Splits the node set `members` (global indices, ascending) whose induced
  // graph is `sub`. Returns the created node, or nothing when every member
  // ended up in the bucket.
  std::optional<std::size_t> split(const WeightedGraph& sub, const std::vector<NodeId>& members,
                                   std::optional<std::size_t> parent, std::uint64_t seed) {
    const Partition p = louvain(sub, seed, options_.louvain);
    const std::size_t self = nodes_.size();
    nodes_.emplace_back();
    nodes_[self].id = self;
    nodes_[self].parent = parent;

    // A single community cannot be split further even when Q >= threshold
    // (possible only at threshold 0).
    if (p.modularity < options_.mod_threshold || p.community_count < 2) {
      nodes_[self].members = members;
      return self;
    }

    const auto communities = p.communities();
    for (std::size_t ci = 0; ci < communities.size(); ++ci) {
      const auto& local = communities[ci];
      std::vector<NodeId> global(local.size());
      std::transform(local.begin(), local.end(), global.begin(),
                     [&](NodeId l) { return members[l]; });
      if (global.size() < options_.min_community_size) {
        to_bucket(global, NonCommunityReason::kSingletonCommunity);
        continue;
      }
      std::optional<std::size_t> child;
      if (global.size() > options_.max_size) {
        const WeightedGraph child_graph = induced_subgraph(sub, local);
        if (child_graph.total_weight() > 0.0) {
          child = split(child_graph, global, self, derive_seed(seed, ci));
        } else {
          to_bucket(global, NonCommunityReason::kSingletonCommunity);
        }
      } else {
        child = nodes_.size();
        auto& leaf = nodes_.emplace_back();
        leaf.id = *child;
        leaf.parent = self;
        leaf.members = std::move(global);
      }
      if (child) nodes_[self].children.push_back(*child);
    }

    if (nodes_[self].children.empty()) {
      // Nothing was attached below, so this node is the last one pushed.
      nodes_.pop_back();
      return std::nullopt;
    }
    auto& node = nodes_[self];
    node.is_leaf = false;
    node.split_modularity = p.modularity;
    for (std::size_t c : node.children) {
      const auto& cm = nodes_[c].members;
      node.members.insert(node.members.end(), cm.begin(), cm.end());
    }
    std::sort(node.members.begin(), node.members.end());
    return self;
  }

  void to_bucket(std::span<const NodeId> members, NonCommunityReason reason) {
    for (NodeId a : members) bucket_.emplace_back(a, reason);
  }

  ClusterResult finish() && {
    ClusterResult result;
    result.tree.nodes = std::move(nodes_);
    std::sort(bucket_.begin(), bucket_.end());
    for (const auto& [member, reason] : bucket_) {
      result.bucket.members.push_back(member);
      result.bucket.reasons.push_back(reason);
    }
    return result;
  }

 private:
  const ClusterOptions& options_;
  std::vector<TreeNode> nodes_;
  std::vector<std::pair<NodeId, NonCommunityReason>> bucket_;
};

template <typename Json>
Json require(const Json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw InputError(std::string("tree JSON: missing key \"") + key + "\"");
  return *it;
}

}  // namespace

std::size_t ClusterTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::size_t> level(nodes.size(), 0);
  std::size_t deepest = 0;
  // Pre-order storage: parents precede children.
  for (const auto& node : nodes) {
    if (node.parent) level[node.id] = level[*node.parent] + 1;
    deepest = std::max(deepest, level[node.id]);
  }
  return deepest;
}

std::string_view reason_name(NonCommunityReason reason) {
  switch (reason) {
    case NonCommunityReason::kIsolated: return "isolated";
    case NonCommunityReason::kSingletonCommunity: return "singleton_community";
  }
  return "unknown";
}

NonCommunityReason parse_reason(std::string_view name) {
  if (name == "isolated") return NonCommunityReason::kIsolated;
  if (name == "singleton_community") return NonCommunityReason::kSingletonCommunity;
  throw InputError("unknown non-community reason '" + std::string(name) + "'");
}

void check_cluster_options(const ClusterOptions& options) {
  if (!(options.mod_threshold >= 0.0 && options.mod_threshold < 1.0)) {
    throw InputError("mod_threshold must be in [0, 1), got " +
                     std::to_string(options.mod_threshold));
  }
  if (options.max_size < 1) throw InputError("max_size must be at least 1");
  if (options.min_community_size < 1) throw InputError("min_community_size must be at least 1");
  if (!(options.louvain.gain_epsilon >= 0.0)) throw InputError("gain_epsilon must be >= 0");
  if (options.louvain.max_sweeps < 1) throw InputError("max_sweeps must be at least 1");
  if (options.louvain.max_levels < 1) throw InputError("max_levels must be at least 1");
  if (options.louvain.restarts < 1) throw InputError("restarts must be at least 1");
}

ClusterResult vec2gc_cluster(const SimilarityGraph& g, const ClusterOptions& options) {
  check_cluster_options(options);
  const WeightedGraph& graph = g.graph;
  TreeBuilder builder(options);

  std::vector<NodeId> active;
  for (NodeId a = 0; a < graph.node_count(); ++a) {
    if (graph.neighbors(a).empty()) {
      builder.to_bucket(std::span(&a, 1), NonCommunityReason::kIsolated);
    } else {
      active.push_back(a);
    }
  }
  if (active.empty()) {
    auto result = std::move(builder).finish();
    result.all_isolated = true;
    return result;
  }
  if (active.size() < options.min_community_size) {
    // Too few connected items to form even one community.
    builder.to_bucket(active, NonCommunityReason::kSingletonCommunity);
  } else if (active.size() == graph.node_count()) {
    builder.split(graph, active, std::nullopt, options.seed);
  } else {
    builder.split(induced_subgraph(graph, active), active, std::nullopt, options.seed);
  }
  return std::move(builder).finish();
}

std::vector<std::vector<NodeId>> flat_clusters(const ClusterTree& tree) {
  std::vector<std::vector<NodeId>> out;
  if (tree.empty()) return out;
  std::vector<std::size_t> stack{tree.root().id};
  while (!stack.empty()) {
    const auto& node = tree.nodes[stack.back()];
    stack.pop_back();
    if (node.children.empty()) {
      out.push_back(node.members);
      continue;
    }
    for (auto it = node.children.rbegin(); it != node.children.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

void write_tree_json(std::ostream& out, const ClusterResult& result,
                     const std::vector<std::string>& ids, const TreeParams& params) {
  using nlohmann::ordered_json;
  auto render = [&](const std::vector<NodeId>& members) {
    auto arr = ordered_json::array();
    for (NodeId a : members) arr.push_back(ids.at(a));
    return arr;
  };
  ordered_json doc;
  doc["theta"] = params.theta;
  doc["mod_threshold"] = params.mod_threshold;
  doc["max_size"] = params.max_size;
  doc["seed"] = params.seed;
  auto& nodes = doc["nodes"] = ordered_json::array();
  for (const auto& node : result.tree.nodes) {
    ordered_json entry;
    entry["id"] = node.id;
    entry["parent"] = node.parent ? ordered_json(*node.parent) : ordered_json(nullptr);
    entry["children"] = node.children;
    entry["members"] = render(node.members);
    entry["split_modularity"] =
        node.split_modularity ? ordered_json(*node.split_modularity) : ordered_json(nullptr);
    nodes.push_back(std::move(entry));
  }
  auto& noise = doc["non_community"];
  noise["members"] = render(result.bucket.members);
  auto& reasons = noise["reasons"] = ordered_json::object();
  for (std::size_t i = 0; i < result.bucket.size(); ++i) {
    reasons[ids.at(result.bucket.members[i])] = reason_name(result.bucket.reasons[i]);
  }
  out << doc.dump(2) << '\n';
}

TreeDocument read_tree_json(std::istream& in) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("malformed tree JSON: ") + e.what());
  }
  TreeDocument tree;
  try {
    if (!doc.is_object()) throw InputError("tree JSON: top level must be an object");
    tree.params.theta = require(doc, "theta").get<double>();
    tree.params.mod_threshold = require(doc, "mod_threshold").get<double>();
    tree.params.max_size = require(doc, "max_size").get<std::size_t>();
    tree.params.seed = require(doc, "seed").get<std::uint64_t>();
    for (const auto& entry : require(doc, "nodes")) {
      TreeDocument::Node node;
      node.id = require(entry, "id").get<std::size_t>();
      if (auto parent = require(entry, "parent"); !parent.is_null()) {
        node.parent = parent.get<std::size_t>();
      }
      node.children = require(entry, "children").get<std::vector<std::size_t>>();
      node.members = require(entry, "members").get<std::vector<std::string>>();
      if (auto q = require(entry, "split_modularity"); !q.is_null()) {
        node.split_modularity = q.get<double>();
      }
      tree.nodes.push_back(std::move(node));
    }
    const auto noise = require(doc, "non_community");
    tree.non_community = require(noise, "members").get<std::vector<std::string>>();
    const auto reasons = require(noise, "reasons");
    for (const auto& [id, reason] : reasons.items()) {
      tree.reasons.emplace_back(id, parse_reason(reason.get<std::string>()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("invalid tree JSON: ") + e.what());
  }
  return tree;
}

std::vector<std::vector<std::string>> TreeDocument::leaves() const {
  std::vector<std::vector<std::string>> out;
  if (nodes.empty()) return out;
  std::unordered_map<std::size_t, std::size_t> position;
  std::optional<std::size_t> root;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!position.emplace(nodes[i].id, i).second) {
      throw InputError("tree JSON: duplicate node id " + std::to_string(nodes[i].id));
    }
    if (!nodes[i].parent) {
      if (root) throw InputError("tree JSON: more than one root");
      root = i;
    }
  }
  if (!root) throw InputError("tree JSON: no root node");
  std::vector<std::size_t> stack{*root};
  std::size_t visited = 0;
  while (!stack.empty()) {
    if (++visited > nodes.size()) throw InputError("tree JSON: cycle in children");
    const auto& node = nodes[stack.back()];
    stack.pop_back();
    if (node.children.empty()) {
      out.push_back(node.members);
      continue;
    }
    for (auto it = node.children.rbegin(); it != node.children.rend(); ++it) {
      auto pos = position.find(*it);
      if (pos == position.end()) {
        throw InputError("tree JSON: unknown child id " + std::to_string(*it));
      }
      stack.push_back(pos->second);
    }
  }
  return out;
}

}  // namespace vec2gc
