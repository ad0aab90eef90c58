#include "vec2gc/community.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <set>
#include <thread>

#include "vec2gc/error.hpp"
#include "vec2gc/rng.hpp"

namespace vec2gc {

namespace {

void require_edges(const WeightedGraph& g) {
  if (!(g.total_weight() > 0.0)) {
    throw InputError("modularity is undefined on a graph without edges (m = 0)");
  }
}

void require_cover(const WeightedGraph& g, std::span<const CommunityId> assignment) {
  if (assignment.size() != g.node_count()) {
    throw InputError("assignment size " + std::to_string(assignment.size()) +
                     " does not match node count " + std::to_string(g.node_count()));
  }
}

// Modularity change from inserting an isolated node (degree k) into a
// community with total degree `tot` to which it has `link` weight.
inline double insertion_gain(double link, double tot, double k, double m) {
  return link / m - tot * k / (2.0 * m * m);
}

// Per-level optimizer state.
class LocalMover {
 public:
  LocalMover(const WeightedGraph& g, std::vector<CommunityId>& comm, const LouvainConfig& config)
      : g_(g),
        comm_(comm),
        config_(config),
        m_(g.total_weight()),
        tot_(g.node_count(), 0.0),
        size_(g.node_count(), 0) {
    for (NodeId a = 0; a < g_.node_count(); ++a) {
      tot_[comm_[a]] += g_.degree(a);
      ++size_[comm_[a]];
    }
    for (CommunityId c = 0; c < size_.size(); ++c) {
      if (size_[c] == 0) empty_.insert(c);
    }
  }

  // Runs sweeps until one makes no move. Returns true if any node moved.
  bool run(SplitMix64& rng, unsigned threads) {
    const std::size_t n = g_.node_count();
    std::vector<NodeId> order(n);
    std::iota(order.begin(), order.end(), NodeId{0});
    bool any = false;
    bool parallel = threads > 1 && n >= 2 * threads;
    for (int sweep = 0; sweep < config_.max_sweeps; ++sweep) {
      shuffle(std::span(order), rng);
      const bool moved = parallel ? parallel_sweep(order, threads) : sequential_sweep(order);
      any = any || moved;
      if (!moved) {
        if (!parallel) break;
        // Reconcile the snapshot-based sweeps with exact sequential ones.
        parallel = false;
      }
    }
    return any;
  }

 private:
  struct Scratch {
    std::vector<double> link;
    std::vector<CommunityId> touched;
    explicit Scratch(std::size_t n) : link(n, -1.0) {}
  };

  // Fills scratch.link[c] with the weight from `a` to each neighboring
  // community c under assignment `comm`.
  void collect_links(NodeId a, std::span<const CommunityId> comm, Scratch& s) const {
    for (CommunityId c : s.touched) s.link[c] = -1.0;
    s.touched.clear();
    s.link[comm[a]] = 0.0;
    s.touched.push_back(comm[a]);
    auto row = g_.neighbors(a);
    auto w = g_.weights(a);
    for (std::size_t e = 0; e < row.size(); ++e) {
      const CommunityId c = comm[row[e]];
      if (s.link[c] < 0.0) {
        s.link[c] = 0.0;
        s.touched.push_back(c);
      }
      s.link[c] += w[e];
    }
  }

  // Best target for `a`; returns its current community when no candidate
  // beats staying by more than gain_epsilon.
  // Candidates are the neighboring communities plus one empty community
  // (isolating the node), which lets a merged community split again.
  CommunityId best_target(NodeId a, std::span<const CommunityId> comm,
                          std::span<const double> tot, std::optional<CommunityId> empty,
                          Scratch& s) const {
    collect_links(a, comm, s);
    const double k = g_.degree(a);
    const CommunityId home = comm[a];
    const double stay = insertion_gain(s.link[home], tot[home] - k, k, m_);
    CommunityId best = home;
    double best_gain = stay;
    auto consider = [&](CommunityId c, double gain) {
      if (gain > best_gain || (gain == best_gain && c < best)) {
        best = c;
        best_gain = gain;
      }
    };
    for (CommunityId c : s.touched) {
      if (c != home) consider(c, insertion_gain(s.link[c], tot[c], k, m_));
    }
    if (empty) consider(*empty, 0.0);
    if (best != home && best_gain - stay > config_.gain_epsilon) return best;
    return home;
  }

  // Smallest empty community id, unless `a` is already alone.
  std::optional<CommunityId> spare_for(NodeId a) const {
    if (size_[comm_[a]] == 1 || empty_.empty()) return std::nullopt;
    return *empty_.begin();
  }

  void apply(NodeId a, CommunityId target) {
    const double k = g_.degree(a);
    const CommunityId home = comm_[a];
    tot_[home] -= k;
    if (--size_[home] == 0) {
      tot_[home] = 0.0;
      empty_.insert(home);
    }
    if (size_[target]++ == 0) empty_.erase(target);
    tot_[target] += k;
    comm_[a] = target;
  }

  bool sequential_sweep(std::span<const NodeId> order) {
    if (!scratch_) scratch_.emplace(g_.node_count());
    bool moved = false;
    for (NodeId a : order) {
      const CommunityId target = best_target(a, comm_, tot_, spare_for(a), *scratch_);
      if (target != comm_[a]) {
        apply(a, target);
        moved = true;
      }
    }
    return moved;
  }

  // Proposals are computed against a snapshot by disjoint chunks, then
  // committed in order after re-checking each gain against the live state.
  bool parallel_sweep(std::span<const NodeId> order, unsigned threads) {
    const std::vector<CommunityId> snapshot = comm_;
    const std::vector<double> snapshot_tot = tot_;
    const std::vector<std::size_t> snapshot_size = size_;
    const std::optional<CommunityId> spare =
        empty_.empty() ? std::nullopt : std::optional<CommunityId>(*empty_.begin());
    std::vector<CommunityId> proposal(order.size());
    const std::size_t chunk = (order.size() + threads - 1) / threads;
    {
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < threads; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(order.size(), begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, begin, end] {
          Scratch s(g_.node_count());
          for (std::size_t i = begin; i < end; ++i) {
            const NodeId a = order[i];
            proposal[i] = best_target(a, snapshot, snapshot_tot,
                                      snapshot_size[snapshot[a]] > 1 ? spare : std::nullopt, s);
          }
        });
      }
    }
    if (!scratch_) scratch_.emplace(g_.node_count());
    bool moved = false;
    for (std::size_t i = 0; i < order.size(); ++i) {
      const NodeId a = order[i];
      const CommunityId target = proposal[i];
      if (target == comm_[a] || (size_[target] == 0 && size_[comm_[a]] == 1)) continue;
      collect_links(a, comm_, *scratch_);
      const double k = g_.degree(a);
      const double link = scratch_->link[target] < 0.0 ? 0.0 : scratch_->link[target];
      const double stay = insertion_gain(scratch_->link[comm_[a]], tot_[comm_[a]] - k, k, m_);
      if (insertion_gain(link, tot_[target], k, m_) - stay > config_.gain_epsilon) {
        apply(a, target);
        moved = true;
      }
    }
    return moved;
  }

  const WeightedGraph& g_;
  std::vector<CommunityId>& comm_;
  const LouvainConfig& config_;
  double m_;
  std::vector<double> tot_;
  std::vector<std::size_t> size_;
  std::set<CommunityId> empty_;
  std::optional<Scratch> scratch_;
};

unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

std::vector<std::vector<NodeId>> Partition::communities() const {
  std::vector<std::vector<NodeId>> out(community_count);
  for (NodeId a = 0; a < assignment.size(); ++a) out[assignment[a]].push_back(a);
  return out;
}

double modularity(const WeightedGraph& g, std::span<const CommunityId> assignment) {
  require_edges(g);
  require_cover(g, assignment);
  const std::size_t n = g.node_count();
  CommunityId max_id = 0;
  for (CommunityId c : assignment) max_id = std::max(max_id, c);
  std::vector<double> internal(static_cast<std::size_t>(max_id) + 1, 0.0);
  std::vector<double> tot(internal.size(), 0.0);
  for (NodeId a = 0; a < n; ++a) {
    const CommunityId c = assignment[a];
    tot[c] += g.degree(a);
    internal[c] += 2.0 * g.self_loop(a);
    auto row = g.neighbors(a);
    auto w = g.weights(a);
    for (std::size_t e = 0; e < row.size(); ++e) {
      if (assignment[row[e]] == c) internal[c] += w[e];
    }
  }
  const double two_m = 2.0 * g.total_weight();
  double q = 0.0;
  for (std::size_t c = 0; c < internal.size(); ++c) {
    const double share = tot[c] / two_m;
    q += internal[c] / two_m - share * share;
  }
  return q;
}

double move_gain(const WeightedGraph& g, std::span<const CommunityId> assignment, NodeId node,
                 CommunityId target) {
  require_edges(g);
  require_cover(g, assignment);
  const CommunityId home = assignment[node];
  if (target == home) return 0.0;
  double tot_home = 0.0;
  double tot_target = 0.0;
  for (NodeId a = 0; a < g.node_count(); ++a) {
    if (assignment[a] == home) tot_home += g.degree(a);
    if (assignment[a] == target) tot_target += g.degree(a);
  }
  double link_home = 0.0;
  double link_target = 0.0;
  auto row = g.neighbors(node);
  auto w = g.weights(node);
  for (std::size_t e = 0; e < row.size(); ++e) {
    if (assignment[row[e]] == home) link_home += w[e];
    if (assignment[row[e]] == target) link_target += w[e];
  }
  const double k = g.degree(node);
  const double m = g.total_weight();
  return insertion_gain(link_target, tot_target, k, m) -
         insertion_gain(link_home, tot_home - k, k, m);
}

std::size_t compact_assignment(std::span<CommunityId> assignment) {
  constexpr CommunityId kUnset = ~CommunityId{0};
  CommunityId max_id = 0;
  for (CommunityId c : assignment) max_id = std::max(max_id, c);
  std::vector<CommunityId> remap(static_cast<std::size_t>(max_id) + 1, kUnset);
  CommunityId next = 0;
  for (CommunityId& c : assignment) {
    if (remap[c] == kUnset) remap[c] = next++;
    c = remap[c];
  }
  return next;
}

WeightedGraph aggregate(const WeightedGraph& g, std::span<const CommunityId> assignment,
                        std::size_t community_count) {
  require_cover(g, assignment);
  std::vector<WeightedEdge> edges;
  edges.reserve(g.edge_count() + g.node_count());
  for (NodeId a = 0; a < g.node_count(); ++a) {
    const CommunityId ca = assignment[a];
    if (ca >= community_count) throw InvariantError("aggregate: community id out of range");
    if (g.self_loop(a) != 0.0) edges.push_back({ca, ca, g.self_loop(a)});
    auto row = g.neighbors(a);
    auto w = g.weights(a);
    for (std::size_t e = 0; e < row.size(); ++e) {
      if (a < row[e]) edges.push_back({ca, assignment[row[e]], w[e]});
    }
  }
  return WeightedGraph::from_edges(community_count, edges);
}

namespace {

Partition louvain_once(const WeightedGraph& g, std::uint64_t seed, const LouvainConfig& config) {
  const unsigned threads = resolve_threads(config.threads);
  SplitMix64 rng(seed);
  const std::size_t n = g.node_count();

  // Input node -> community; starts as singletons.
  std::vector<CommunityId> membership(n);
  std::iota(membership.begin(), membership.end(), CommunityId{0});

  int levels = 0;
  for (;;) {
    // Multilevel phase, starting from the current membership.
    std::size_t count = compact_assignment(membership);
    WeightedGraph coarse;
    const WeightedGraph* level_graph = &g;
    if (count < n) {
      coarse = aggregate(g, membership, count);
      level_graph = &coarse;
    }
    for (; levels < config.max_levels; ++levels) {
      std::vector<CommunityId> comm(level_graph->node_count());
      std::iota(comm.begin(), comm.end(), CommunityId{0});
      LocalMover mover(*level_graph, comm, config);
      if (!mover.run(rng, threads)) break;
      count = compact_assignment(comm);
      for (auto& c : membership) c = comm[c];
      coarse = aggregate(*level_graph, comm, count);
      level_graph = &coarse;
    }

    // Refine on the input graph so no single-node move gains more than
    // epsilon. If that changed anything, coarsen again from the refined
    // partition; every round strictly increases modularity.
    compact_assignment(membership);
    LocalMover mover(g, membership, config);
    if (!mover.run(rng, threads) || levels >= config.max_levels) break;
    ++levels;
  }

  Partition p;
  p.community_count = compact_assignment(membership);
  p.assignment = std::move(membership);
  p.modularity = modularity(g, p.assignment);
  return p;
}

}  // namespace

Partition louvain(const WeightedGraph& g, std::uint64_t seed, const LouvainConfig& config) {
  require_edges(g);
  if (config.restarts < 1) throw InputError("louvain: restarts must be at least 1");
  Partition best = louvain_once(g, seed, config);
  for (int r = 1; r < config.restarts; ++r) {
    Partition p = louvain_once(g, derive_seed(seed, static_cast<std::uint64_t>(r)), config);
    if (p.modularity > best.modularity) best = std::move(p);
  }
  return best;
}

}  // namespace vec2gc
