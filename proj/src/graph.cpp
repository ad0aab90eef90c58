#include "vec2gc/graph.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "vec2gc/error.hpp"

namespace vec2gc {

WeightedGraph WeightedGraph::from_edges(std::size_t n, std::span<const WeightedEdge> edges) {
  std::vector<double> self_loops(n, 0.0);
  std::vector<std::size_t> counts(n + 1, 0);
  for (const auto& e : edges) {
    if (e.a >= n || e.b >= n) throw InputError("edge endpoint out of range");
    if (e.a == e.b) continue;
    ++counts[e.a + 1];
    ++counts[e.b + 1];
  }
  std::partial_sum(counts.begin(), counts.end(), counts.begin());

  std::vector<std::pair<NodeId, double>> slots(counts.back());
  std::vector<std::size_t> cursor(counts.begin(), counts.end() - 1);
  for (const auto& e : edges) {
    if (e.a == e.b) {
      self_loops[e.a] += e.weight;
      continue;
    }
    slots[cursor[e.a]++] = {e.b, e.weight};
    slots[cursor[e.b]++] = {e.a, e.weight};
  }

  // Sort each row and merge parallel edges.
  std::vector<std::size_t> offsets{0};
  offsets.reserve(n + 1);
  std::vector<NodeId> neighbors;
  std::vector<double> weights;
  neighbors.reserve(slots.size());
  weights.reserve(slots.size());
  for (std::size_t a = 0; a < n; ++a) {
    auto first = slots.begin() + static_cast<std::ptrdiff_t>(counts[a]);
    auto last = slots.begin() + static_cast<std::ptrdiff_t>(counts[a + 1]);
    std::stable_sort(first, last, [](const auto& x, const auto& y) { return x.first < y.first; });
    for (auto it = first; it != last; ++it) {
      if (neighbors.size() > offsets.back() && neighbors.back() == it->first) {
        weights.back() += it->second;
      } else {
        neighbors.push_back(it->first);
        weights.push_back(it->second);
      }
    }
    offsets.push_back(neighbors.size());
  }
  return from_csr(std::move(offsets), std::move(neighbors), std::move(weights),
                  std::move(self_loops));
}

WeightedGraph WeightedGraph::from_csr(std::vector<std::size_t> offsets,
                                      std::vector<NodeId> neighbors,
                                      std::vector<double> weights,
                                      std::vector<double> self_loops) {
  if (offsets.empty() || offsets.back() != neighbors.size() ||
      neighbors.size() != weights.size()) {
    throw InvariantError("inconsistent CSR arrays");
  }
  WeightedGraph g;
  g.offsets_ = std::move(offsets);
  g.neighbors_ = std::move(neighbors);
  g.weights_ = std::move(weights);
  const std::size_t n = g.offsets_.size() - 1;
  g.self_loops_ = self_loops.empty() ? std::vector<double>(n, 0.0) : std::move(self_loops);
  if (g.self_loops_.size() != n) throw InvariantError("self-loop array has wrong length");
  g.finish();
  return g;
}

void WeightedGraph::finish() {
  const std::size_t n = offsets_.size() - 1;
  degrees_.assign(n, 0.0);
  double twice_total = 0.0;
  has_self_loops_ = false;
  for (std::size_t a = 0; a < n; ++a) {
    double k = 0.0;
    for (std::size_t e = offsets_[a]; e < offsets_[a + 1]; ++e) k += weights_[e];
    if (self_loops_[a] != 0.0) has_self_loops_ = true;
    k += 2.0 * self_loops_[a];
    degrees_[a] = k;
    twice_total += k;
  }
  total_weight_ = twice_total / 2.0;
}

double WeightedGraph::edge_weight(NodeId a, NodeId b) const {
  if (a == b) return self_loops_[a];
  auto row = neighbors(a);
  auto it = std::lower_bound(row.begin(), row.end(), b);
  if (it == row.end() || *it != b) return 0.0;
  return weights(a)[static_cast<std::size_t>(it - row.begin())];
}

std::vector<WeightedEdge> WeightedGraph::edge_list() const {
  std::vector<WeightedEdge> out;
  out.reserve(edge_count());
  for (NodeId a = 0; a < node_count(); ++a) {
    auto row = neighbors(a);
    auto w = weights(a);
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (a < row[i]) out.push_back({a, row[i], w[i]});
    }
  }
  return out;
}

WeightedGraph induced_subgraph(const WeightedGraph& graph, std::span<const NodeId> members) {
  std::unordered_map<NodeId, NodeId> local;
  local.reserve(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) {
    local.emplace(members[i], static_cast<NodeId>(i));
  }
  std::vector<std::size_t> offsets{0};
  offsets.reserve(members.size() + 1);
  std::vector<NodeId> neighbors;
  std::vector<double> weights;
  std::vector<double> self_loops(members.size(), 0.0);
  std::vector<std::pair<NodeId, double>> row_buf;
  for (std::size_t i = 0; i < members.size(); ++i) {
    const NodeId global = members[i];
    self_loops[i] = graph.self_loop(global);
    auto row = graph.neighbors(global);
    auto w = graph.weights(global);
    row_buf.clear();
    for (std::size_t e = 0; e < row.size(); ++e) {
      if (auto it = local.find(row[e]); it != local.end()) row_buf.emplace_back(it->second, w[e]);
    }
    std::sort(row_buf.begin(), row_buf.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    for (const auto& [nb, weight] : row_buf) {
      neighbors.push_back(nb);
      weights.push_back(weight);
    }
    offsets.push_back(neighbors.size());
  }
  return WeightedGraph::from_csr(std::move(offsets), std::move(neighbors), std::move(weights),
                                 std::move(self_loops));
}

}  // namespace vec2gc
