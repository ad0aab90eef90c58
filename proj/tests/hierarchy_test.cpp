#include "vec2gc/hierarchy.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "test_support.hpp"
#include "vec2gc/error.hpp"

namespace vec2gc {
namespace {

using testing::tree_violation;

ClusterResult cluster(const EmbeddingSet& set, double theta, const ClusterOptions& options) {
  return vec2gc_cluster(build_graph(set, theta), options);
}

// Members of each planted group, as sorted corpus indices.
std::set<std::vector<NodeId>> groups_of(const std::vector<std::size_t>& group) {
  std::map<std::size_t, std::vector<NodeId>> by_group;
  for (std::size_t a = 0; a < group.size(); ++a) by_group[group[a]].push_back(static_cast<NodeId>(a));
  std::set<std::vector<NodeId>> out;
  for (auto& [g, members] : by_group) out.insert(members);
  return out;
}

std::string to_json(const ClusterResult& r, const EmbeddingSet& set, const TreeParams& params) {
  std::ostringstream out;
  write_tree_json(out, r, set.ids(), params);
  return out.str();
}

TEST(Cluster, TwoSeparatedCliquesGiveTwoLeaves) {
  std::mt19937_64 rng(1);
  const auto planted = testing::planted_groups(rng, 2, 20);
  ClusterOptions options;
  options.mod_threshold = 0.3;
  options.max_size = 50;
  const auto g = build_graph(planted.set, 0.5);
  const auto r = vec2gc_cluster(g, options);
  ASSERT_EQ(tree_violation(r, g.graph, options.mod_threshold), "");

  ASSERT_EQ(r.tree.nodes.size(), 3u);
  EXPECT_EQ(r.tree.root().children.size(), 2u);
  EXPECT_EQ(r.tree.root().members.size(), 40u);
  EXPECT_EQ(r.bucket.size(), 0u);
  EXPECT_EQ(r.tree.depth(), 1u);
  const auto leaves = flat_clusters(r.tree);
  ASSERT_EQ(leaves.size(), 2u);
  EXPECT_EQ(std::set(leaves.begin(), leaves.end()), groups_of(planted.group));
}

TEST(Cluster, SingleCliqueIsARootLeaf) {
  std::mt19937_64 rng(2);
  const auto planted = testing::planted_groups(rng, 1, 10);
  const auto r = cluster(planted.set, 0.5, ClusterOptions{});
  ASSERT_EQ(r.tree.nodes.size(), 1u);
  EXPECT_TRUE(r.tree.root().is_leaf);
  EXPECT_FALSE(r.tree.root().split_modularity);
  EXPECT_EQ(r.tree.root().members.size(), 10u);
  EXPECT_EQ(flat_clusters(r.tree).size(), 1u);
  EXPECT_EQ(r.bucket.size(), 0u);
}

TEST(Cluster, IsolatedVectorGoesToBucket) {
  std::mt19937_64 rng(3);
  std::vector<std::vector<float>> rows;
  std::normal_distribution<float> noise(0.0f, 0.05f);
  for (int i = 0; i < 6; ++i) rows.push_back({1.0f, noise(rng), noise(rng), 0.0f});
  rows.insert(rows.begin() + 2, {0.0f, 0.0f, 0.0f, 1.0f});
  const auto set = testing::make_set(rows);

  // Independent check that item 2 is below theta to everything.
  for (const auto& e : testing::naive_similarity_edges(set, 0.5)) {
    ASSERT_NE(e.a, 2u);
    ASSERT_NE(e.b, 2u);
  }
  const auto g = build_graph(set, 0.5);
  const auto r = vec2gc_cluster(g, ClusterOptions{});
  ASSERT_EQ(tree_violation(r, g.graph, 0.3), "");
  ASSERT_EQ(r.bucket.members, std::vector<NodeId>{2});
  EXPECT_EQ(r.bucket.reasons.front(), NonCommunityReason::kIsolated);
  const auto leaves = flat_clusters(r.tree);
  ASSERT_EQ(leaves.size(), 1u);
  EXPECT_EQ(leaves.front(), (std::vector<NodeId>{0, 1, 3, 4, 5, 6}));
}

TEST(Cluster, AllIsolatedGivesEmptyTree) {
  const auto set = testing::make_set({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  const auto g = build_graph(set, 0.5);
  const auto r = vec2gc_cluster(g, ClusterOptions{});
  EXPECT_TRUE(r.all_isolated);
  EXPECT_TRUE(r.tree.empty());
  EXPECT_EQ(r.tree.depth(), 0u);
  EXPECT_TRUE(flat_clusters(r.tree).empty());
  EXPECT_EQ(r.bucket.members, (std::vector<NodeId>{0, 1, 2}));
  for (auto reason : r.bucket.reasons) EXPECT_EQ(reason, NonCommunityReason::kIsolated);
  ASSERT_EQ(tree_violation(r, g.graph, 0.3), "");
}

TEST(Cluster, SingletonCommunitiesGoToBucket) {
  // Every community below min_community_size lands in the bucket.
  std::mt19937_64 rng(4);
  const auto planted = testing::planted_groups(rng, 3, 8);
  ClusterOptions options;
  options.min_community_size = 9;  // every planted group is too small
  const auto g = build_graph(planted.set, 0.5);
  const auto r = vec2gc_cluster(g, options);
  ASSERT_EQ(tree_violation(r, g.graph, options.mod_threshold), "");
  EXPECT_TRUE(r.tree.empty());
  EXPECT_EQ(r.bucket.size(), 24u);
  for (auto reason : r.bucket.reasons) EXPECT_EQ(reason, NonCommunityReason::kSingletonCommunity);
}

TEST(Cluster, NestedStructureRecursesToSubGroups) {
  std::mt19937_64 rng(5);
  const auto nested = testing::nested_groups(rng, 2, 3, 20);
  ClusterOptions options;
  options.mod_threshold = 0.2;
  options.max_size = 30;
  const auto g = build_graph(nested.set, 0.5);
  const auto r = vec2gc_cluster(g, options);
  ASSERT_EQ(tree_violation(r, g.graph, options.mod_threshold), "");
  EXPECT_GE(r.tree.depth(), 2u);
  const auto leaves = flat_clusters(r.tree);
  EXPECT_EQ(std::set(leaves.begin(), leaves.end()), groups_of(nested.sub_group));
  // The root's children are the super-groups.
  std::set<std::vector<NodeId>> children;
  for (std::size_t c : r.tree.root().children) children.insert(r.tree.nodes[c].members);
  EXPECT_EQ(children, groups_of(nested.super_group));
}

TEST(Cluster, SizeGate) {
  std::mt19937_64 rng(6);
  const auto nested = testing::nested_groups(rng, 2, 3, 20);
  const auto g = build_graph(nested.set, 0.5);
  for (std::size_t max_size : {25u, 60u, 200u}) {
    ClusterOptions options;
    options.mod_threshold = 0.2;
    options.max_size = max_size;
    const auto r = vec2gc_cluster(g, options);
    ASSERT_EQ(tree_violation(r, g.graph, options.mod_threshold), "");
    for (const auto& leaf : flat_clusters(r.tree)) EXPECT_LE(leaf.size(), max_size);
  }
  // With max_size 10 the 20-member sub-groups are recursed into. A
  // near-uniform clique has no structure, so each stops on modularity and
  // stays a leaf larger than max_size.
  ClusterOptions small;
  small.mod_threshold = 0.2;
  small.max_size = 10;
  const auto r = vec2gc_cluster(g, small);
  ASSERT_EQ(tree_violation(r, g.graph, small.mod_threshold), "");
  const auto leaves = flat_clusters(r.tree);
  EXPECT_EQ(std::set(leaves.begin(), leaves.end()), groups_of(nested.sub_group));
  EXPECT_EQ(r.tree.depth(), 2u);
}

TEST(Cluster, PartitionPropertyOnRandomInputs) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> size(2, 80);
  std::uniform_int_distribution<std::size_t> dim(2, 8);
  std::uniform_real_distribution<double> theta(0.0, 0.95);
  std::uniform_real_distribution<double> threshold(0.0, 0.6);
  std::uniform_int_distribution<std::size_t> max_size(1, 40);
  std::uniform_int_distribution<std::size_t> min_size(1, 4);
  for (int trial = 0; trial < 200; ++trial) {
    const auto set = testing::random_set(rng, size(rng), dim(rng));
    const auto g = build_graph(set, theta(rng));
    ClusterOptions options;
    options.mod_threshold = threshold(rng);
    options.max_size = max_size(rng);
    options.min_community_size = min_size(rng);
    options.seed = static_cast<std::uint64_t>(trial);
    const auto r = vec2gc_cluster(g, options);
    ASSERT_EQ(tree_violation(r, g.graph, options.mod_threshold), "") << "trial " << trial;
    ASSERT_LE(r.tree.depth(), set.size());
    for (const auto& leaf : flat_clusters(r.tree)) {
      ASSERT_GE(leaf.size(), options.min_community_size);
    }
  }
}

TEST(Cluster, SmokeOnTwoThousandNodes) {
  std::mt19937_64 rng(8);
  const auto set = testing::random_set(rng, 2000, 6);
  const auto g = build_graph(set, 0.9);
  ClusterOptions options;
  options.max_size = 100;
  const auto r = vec2gc_cluster(g, options);
  ASSERT_EQ(tree_violation(r, g.graph, options.mod_threshold), "");
  EXPECT_LE(r.tree.depth(), set.size());
}

TEST(Cluster, SerializationIsDeterministic) {
  std::mt19937_64 rng(9);
  const auto nested = testing::nested_groups(rng, 2, 3, 20);
  const auto g = build_graph(nested.set, 0.5);
  ClusterOptions options;
  options.mod_threshold = 0.2;
  options.max_size = 30;
  const TreeParams params{0.5, 0.2, 30, 0};
  for (std::uint64_t seed : {0u, 1u, 12345u}) {
    options.seed = seed;
    const auto a = to_json(vec2gc_cluster(g, options), nested.set, params);
    const auto b = to_json(vec2gc_cluster(g, options), nested.set, params);
    EXPECT_EQ(a, b);
  }
}

TEST(Cluster, RejectsBadOptions) {
  std::mt19937_64 rng(10);
  const auto g = build_graph(testing::planted_groups(rng, 2, 5).set, 0.5);
  auto with = [](auto change) {
    ClusterOptions o;
    change(o);
    return o;
  };
  EXPECT_THROW(vec2gc_cluster(g, with([](auto& o) { o.mod_threshold = 1.0; })), InputError);
  EXPECT_THROW(vec2gc_cluster(g, with([](auto& o) { o.mod_threshold = -0.1; })), InputError);
  EXPECT_THROW(vec2gc_cluster(g, with([](auto& o) { o.max_size = 0; })), InputError);
  EXPECT_THROW(vec2gc_cluster(g, with([](auto& o) { o.min_community_size = 0; })), InputError);
  EXPECT_THROW(vec2gc_cluster(g, with([](auto& o) { o.louvain.restarts = 0; })), InputError);
}

TEST(TreeJson, LayoutAndRoundTrip) {
  std::vector<std::vector<float>> rows;
  std::mt19937_64 rng(11);
  const auto planted = testing::planted_groups(rng, 2, 6);
  rows.clear();
  for (std::size_t a = 0; a < planted.set.size(); ++a) {
    auto v = planted.set.vector(a);
    rows.emplace_back(v.begin(), v.end());
    rows.back().push_back(0.0f);
  }
  std::vector<float> lonely(rows.front().size(), 0.0f);
  lonely.back() = 1.0f;
  rows.push_back(lonely);
  const auto set = testing::make_set(rows);
  const auto g = build_graph(set, 0.5);
  const auto r = vec2gc_cluster(g, ClusterOptions{});
  const TreeParams params{0.5, 0.3, 500, 42};
  const std::string text = to_json(r, set, params);

  const auto doc = nlohmann::ordered_json::parse(text);
  std::vector<std::string> keys;
  for (const auto& [key, value] : doc.items()) keys.push_back(key);
  EXPECT_EQ(keys, (std::vector<std::string>{"theta", "mod_threshold", "max_size", "seed", "nodes",
                                            "non_community"}));
  std::vector<std::string> node_keys;
  for (const auto& [key, value] : doc["nodes"][0].items()) node_keys.push_back(key);
  EXPECT_EQ(node_keys,
            (std::vector<std::string>{"id", "parent", "children", "members", "split_modularity"}));
  EXPECT_TRUE(doc["nodes"][0]["parent"].is_null());
  EXPECT_EQ(doc["non_community"]["reasons"]["item12"], "isolated");

  std::istringstream in(text);
  const auto back = read_tree_json(in);
  EXPECT_EQ(back.params.seed, 42u);
  EXPECT_EQ(back.params.max_size, 500u);
  EXPECT_DOUBLE_EQ(back.params.theta, 0.5);
  ASSERT_EQ(back.nodes.size(), r.tree.nodes.size());
  for (std::size_t i = 0; i < back.nodes.size(); ++i) {
    EXPECT_EQ(back.nodes[i].id, r.tree.nodes[i].id);
    EXPECT_EQ(back.nodes[i].parent, r.tree.nodes[i].parent);
    EXPECT_EQ(back.nodes[i].children, r.tree.nodes[i].children);
    EXPECT_EQ(back.nodes[i].split_modularity, r.tree.nodes[i].split_modularity);
  }
  std::vector<std::vector<std::string>> expected;
  for (const auto& leaf : flat_clusters(r.tree)) {
    expected.emplace_back();
    for (NodeId a : leaf) expected.back().push_back(set.id(a));
  }
  EXPECT_EQ(back.leaves(), expected);
  EXPECT_EQ(back.non_community, std::vector<std::string>{"item12"});
  ASSERT_EQ(back.reasons.size(), 1u);
  EXPECT_EQ(back.reasons.front().second, NonCommunityReason::kIsolated);
}

TEST(TreeJson, MalformedInputNamesLocation) {
  std::istringstream in("{\"theta\": 0.5,\n  \"nodes\": [,]}");
  try {
    read_tree_json(in);
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(TreeJson, StructuralErrors) {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_tree_json(in);
  };
  EXPECT_THROW(parse("[]"), InputError);
  EXPECT_THROW(parse(R"({"theta":0.5})"), InputError);
  const std::string head = R"({"theta":0.5,"mod_threshold":0.3,"max_size":5,"seed":1,)";
  const auto two_roots = parse(head + R"("nodes":[
      {"id":0,"parent":null,"children":[],"members":["a"],"split_modularity":null},
      {"id":1,"parent":null,"children":[],"members":["b"],"split_modularity":null}],
      "non_community":{"members":[],"reasons":{}}})");
  EXPECT_THROW(two_roots.leaves(), InputError);
  const auto dangling = parse(head + R"("nodes":[
      {"id":0,"parent":null,"children":[7],"members":["a"],"split_modularity":0.5}],
      "non_community":{"members":[],"reasons":{}}})");
  EXPECT_THROW(dangling.leaves(), InputError);
  EXPECT_THROW(parse(head + R"("nodes":[],"non_community":{"members":["x"],"reasons":{"x":"bogus"}}})"),
               InputError);
}

TEST(Reasons, NamesRoundTrip) {
  for (auto reason : {NonCommunityReason::kIsolated, NonCommunityReason::kSingletonCommunity}) {
    EXPECT_EQ(parse_reason(reason_name(reason)), reason);
  }
  EXPECT_THROW(parse_reason("noise"), InputError);
}

}  // namespace
}  // namespace vec2gc
