#include "vec2gc/simgraph.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <thread>

#include "vec2gc/error.hpp"

namespace vec2gc {

namespace {

double dot(std::span<const float> a, std::span<const float> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return sum;
}

double norm(std::span<const float> a) { return std::sqrt(dot(a, a)); }

double clamp_unit(double cs) { return std::clamp(cs, -1.0, 1.0); }

unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw InputError("cosine_similarity: length mismatch");
  const double na = norm(a);
  const double nb = norm(b);
  if (na < EmbeddingSet::kMinNorm || nb < EmbeddingSet::kMinNorm) {
    throw InputError("cosine_similarity: zero-norm vector");
  }
  return clamp_unit(dot(a, b) / (na * nb));
}

double edge_weight(double cs, double theta) {
  if (cs < theta) return 0.0;
  const double gap = 1.0 - cs;
  return gap <= kMinDissimilarity ? kMaxEdgeWeight : 1.0 / gap;
}

void check_theta(double theta) {
  if (!(theta >= 0.0 && theta < 1.0)) {
    throw InputError("theta must be in [0, 1), got " + std::to_string(theta));
  }
}

SimilarityGraph build_graph(const EmbeddingSet& emb, double theta, unsigned threads) {
  check_theta(theta);
  if (emb.empty()) throw InputError("build_graph: empty embedding set");
  const std::size_t n = emb.size();

  std::vector<double> norms(n);
  for (std::size_t a = 0; a < n; ++a) norms[a] = norm(emb.vector(a));

  // upper[a] holds (b, w) for b > a; each row is written by exactly one worker.
  std::vector<std::vector<std::pair<NodeId, double>>> upper(n);
  std::atomic<std::size_t> next_row{0};
  constexpr std::size_t kRowBlock = 16;
  auto worker = [&] {
    for (;;) {
      const std::size_t begin = next_row.fetch_add(kRowBlock);
      if (begin >= n) return;
      const std::size_t end = std::min(n, begin + kRowBlock);
      for (std::size_t a = begin; a < end; ++a) {
        const auto va = emb.vector(a);
        auto& row = upper[a];
        for (std::size_t b = a + 1; b < n; ++b) {
          const double cs = clamp_unit(dot(va, emb.vector(b)) / (norms[a] * norms[b]));
          if (cs >= theta) row.emplace_back(static_cast<NodeId>(b), edge_weight(cs, theta));
        }
      }
    }
  };
  const auto blocks = (n + kRowBlock - 1) / kRowBlock;
  const auto workers = std::min<std::size_t>(resolve_threads(threads), blocks);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  }

  // Symmetrize into CSR. Row a = lower neighbors (from rows c < a, ascending)
  // followed by its own upper neighbors.
  std::vector<std::size_t> lower_count(n, 0);
  for (std::size_t c = 0; c < n; ++c) {
    for (const auto& [b, w] : upper[c]) ++lower_count[b];
  }
  std::vector<std::size_t> offsets(n + 1, 0);
  for (std::size_t a = 0; a < n; ++a) {
    offsets[a + 1] = offsets[a] + lower_count[a] + upper[a].size();
  }
  std::vector<NodeId> neighbors(offsets[n]);
  std::vector<double> weights(offsets[n]);
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t own = offsets[c] + lower_count[c];
    for (const auto& [b, w] : upper[c]) {
      neighbors[cursor[b]] = static_cast<NodeId>(c);
      weights[cursor[b]++] = w;
      neighbors[own] = b;
      weights[own++] = w;
    }
  }
  return SimilarityGraph{
      WeightedGraph::from_csr(std::move(offsets), std::move(neighbors), std::move(weights)),
      theta};
}

void write_edge_tsv(const SimilarityGraph& g, const EmbeddingSet& emb, std::ostream& out) {
  char buf[64];
  for (const auto& e : g.graph.edge_list()) {
    std::snprintf(buf, sizeof(buf), "%.12g", e.weight);
    out << emb.id(e.a) << '\t' << emb.id(e.b) << '\t' << buf << '\n';
  }
}

}  // namespace vec2gc
