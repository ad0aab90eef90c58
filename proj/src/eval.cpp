#include "vec2gc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "vec2gc/error.hpp"
#include "vec2gc/rng.hpp"

namespace vec2gc {

namespace {

// Cosine distance with norms computed once per item.
class CosineDistance {
 public:
  explicit CosineDistance(const EmbeddingSet& emb) : emb_(emb), norms_(emb.size()) {
    for (std::size_t i = 0; i < emb.size(); ++i) norms_[i] = std::sqrt(dot(i, i));
  }

  double operator()(std::size_t a, std::size_t b) const {
    const double cs = std::clamp(dot(a, b) / (norms_[a] * norms_[b]), -1.0, 1.0);
    return 1.0 - cs;
  }

 private:
  double dot(std::size_t a, std::size_t b) const {
    auto va = emb_.vector(a);
    auto vb = emb_.vector(b);
    double sum = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) {
      sum += static_cast<double>(va[i]) * static_cast<double>(vb[i]);
    }
    return sum;
  }

  const EmbeddingSet& emb_;
  std::vector<double> norms_;
};

std::string percent(double threshold) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g%%", threshold * 100.0);
  return buf;
}

}  // namespace

ClusterPurity cluster_purity(const std::vector<std::string>& members, const LabelMap& labels) {
  if (members.empty()) throw InputError("cluster_purity: no labelled members");
  std::map<std::string, std::size_t> counts;
  for (const auto& id : members) {
    auto it = labels.find(id);
    if (it == labels.end()) throw InputError("cluster_purity: member '" + id + "' has no label");
    ++counts[it->second];
  }
  // std::map iterates labels in lexicographic order, so the first maximum wins
  // ties.
  const std::pair<const std::string, std::size_t>* best = nullptr;
  for (const auto& entry : counts) {
    if (!best || entry.second > best->second) best = &entry;
  }
  return {static_cast<double>(best->second) / static_cast<double>(members.size()), best->first};
}

PurityReport purity_report(const std::vector<std::vector<std::string>>& clusters,
                           const LabelMap& labels, const std::vector<double>& thresholds,
                           std::size_t noise_size) {
  if (labels.empty()) throw InputError("purity_report: no labels available");
  if (clusters.empty()) throw InputError("purity_report: no clusters");
  for (double k : thresholds) {
    if (!(k > 0.0 && k <= 1.0)) {
      throw InputError("purity threshold must be in (0, 1], got " + std::to_string(k));
    }
  }

  PurityReport report;
  report.noise_size = noise_size;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    std::vector<std::string> labeled;
    labeled.reserve(clusters[i].size());
    for (const auto& id : clusters[i]) {
      if (labels.contains(id)) labeled.push_back(id);
    }
    report.unlabeled_items += clusters[i].size() - labeled.size();
    if (labeled.empty()) {
      ++report.unlabeled_clusters;
      continue;
    }
    const auto purity = cluster_purity(labeled, labels);
    report.per_cluster.push_back(PurityRow{.cluster = i,
                                           .size = clusters[i].size(),
                                           .labeled_size = labeled.size(),
                                           .majority_label = purity.majority_label,
                                           .purity = purity.purity});
  }
  report.n_clusters = report.per_cluster.size();
  if (report.n_clusters == 0) throw InputError("purity_report: no cluster has a labelled member");

  for (double k : thresholds) {
    const auto count = static_cast<std::size_t>(
        std::count_if(report.per_cluster.begin(), report.per_cluster.end(),
                      [k](const PurityRow& row) { return row.purity >= k; }));
    report.fractions.push_back(
        {k, count, static_cast<double>(count) / static_cast<double>(report.n_clusters)});
  }
  return report;
}

KMedoidsResult kmedoids(const EmbeddingSet& emb, std::size_t k, std::uint64_t seed,
                        int max_iters) {
  const std::size_t n = emb.size();
  if (k == 0) throw InputError("kmedoids: k must be positive");
  if (k > n) {
    throw InputError("kmedoids: k = " + std::to_string(k) + " exceeds item count " +
                     std::to_string(n));
  }
  const CosineDistance dist(emb);
  SplitMix64 rng(seed);

  // k-means++ style seeding on cosine distance.
  std::vector<NodeId> medoids;
  std::vector<char> is_medoid(n, 0);
  std::vector<double> nearest(n, 0.0);
  auto add_medoid = [&](std::size_t m) {
    medoids.push_back(static_cast<NodeId>(m));
    is_medoid[m] = 1;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = is_medoid[i] ? 0.0 : dist(i, m);
      nearest[i] = medoids.size() == 1 ? d : std::min(nearest[i], d);
    }
  };
  add_medoid(rng.below(n));
  while (medoids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += nearest[i] * nearest[i];
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double cumulative = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double w = nearest[i] * nearest[i];
        if (w <= 0.0) continue;
        cumulative += w;
        pick = i;
        if (cumulative > target) break;
      }
    } else {
      // Every remaining item duplicates a medoid; draw uniformly among them.
      std::size_t remaining = rng.below(n - medoids.size());
      for (std::size_t i = 0; i < n; ++i) {
        if (is_medoid[i]) continue;
        if (remaining-- == 0) {
          pick = i;
          break;
        }
      }
    }
    add_medoid(pick);
  }

  KMedoidsResult result;
  std::vector<std::size_t> assign(n, 0);
  for (;;) {
    // Assignment step; a medoid always stays in its own cluster.
    std::vector<std::size_t> own(n, k);
    for (std::size_t j = 0; j < k; ++j) own[medoids[j]] = j;
    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (own[i] < k) {
        assign[i] = own[i];
        continue;
      }
      std::size_t best = 0;
      double best_d = dist(i, medoids[0]);
      for (std::size_t j = 1; j < k; ++j) {
        const double d = dist(i, medoids[j]);
        if (d < best_d) {
          best = j;
          best_d = d;
        }
      }
      assign[i] = best;
      objective += best_d;
    }
    result.objective_history.push_back(objective);
    if (result.iterations >= max_iters) break;

    // Update step: each medoid moves to the member with the least summed
    // distance; the current medoid is kept on ties.
    std::vector<std::vector<NodeId>> members(k);
    for (std::size_t i = 0; i < n; ++i) members[assign[i]].push_back(static_cast<NodeId>(i));
    bool changed = false;
    for (std::size_t j = 0; j < k; ++j) {
      auto cost = [&](NodeId candidate) {
        double sum = 0.0;
        for (NodeId other : members[j]) {
          if (other != candidate) sum += dist(candidate, other);
        }
        return sum;
      };
      NodeId best = medoids[j];
      double best_cost = cost(best);
      for (NodeId candidate : members[j]) {
        if (candidate == medoids[j]) continue;
        const double c = cost(candidate);
        if (c < best_cost) {
          best = candidate;
          best_cost = c;
        }
      }
      if (best != medoids[j]) {
        medoids[j] = best;
        changed = true;
      }
    }
    if (!changed) break;
    ++result.iterations;
  }

  result.medoids = medoids;
  result.clusters.assign(k, {});
  for (std::size_t i = 0; i < n; ++i) result.clusters[assign[i]].push_back(static_cast<NodeId>(i));
  return result;
}

std::string format_purity_table(const std::vector<MethodReport>& reports) {
  std::vector<std::string> datasets;
  std::vector<std::string> methods;
  for (const auto& r : reports) {
    if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end()) {
      datasets.push_back(r.dataset);
    }
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) {
      methods.push_back(r.method);
    }
  }

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"Dataset", "Purity Value"};
  for (const auto& m : methods) header.push_back("Fraction of clusters @ k% purity (" + m + ")");
  rows.push_back(header);
  for (const auto& dataset : datasets) {
    std::vector<double> thresholds;
    for (const auto& r : reports) {
      if (r.dataset != dataset) continue;
      for (const auto& f : r.report.fractions) {
        if (std::find(thresholds.begin(), thresholds.end(), f.threshold) == thresholds.end()) {
          thresholds.push_back(f.threshold);
        }
      }
    }
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      std::vector<std::string> row{t == 0 ? dataset : "", percent(thresholds[t])};
      for (const auto& method : methods) {
        std::string cell = "-";
        for (const auto& r : reports) {
          if (r.dataset != dataset || r.method != method) continue;
          for (const auto& f : r.report.fractions) {
            if (f.threshold == thresholds[t]) {
              char buf[32];
              std::snprintf(buf, sizeof(buf), "%.2f", f.fraction);
              cell = buf;
            }
          }
        }
        row.push_back(cell);
      }
      rows.push_back(std::move(row));
    }
  }

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  auto rule = [&] {
    out << '+';
    for (std::size_t w : width) out << std::string(w + 2, '-') << '+';
    out << '\n';
  };
  rule();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out << '|';
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      out << ' ' << rows[r][c] << std::string(width[c] - rows[r][c].size(), ' ') << " |";
    }
    out << '\n';
    if (r == 0) rule();
  }
  rule();
  return out.str();
}

}  // namespace vec2gc
