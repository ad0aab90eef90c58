#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vec2gc/embedding_io.hpp"
#include "vec2gc/graph.hpp"

namespace vec2gc {

struct ClusterPurity {
  double purity = 0.0;
  std::string majority_label;
};

/// Share of `members` carrying the most common label. Ties go to the
/// lexicographically smallest label. Every member must be labelled; an empty
/// list is an InputError.
ClusterPurity cluster_purity(const std::vector<std::string>& members,
                             const LabelMap& labels);

struct PurityRow {
  std::size_t cluster = 0;
  std::size_t size = 0;          ///< all members
  std::size_t labeled_size = 0;  ///< members with a gold label
  std::string majority_label;
  double purity = 0.0;
};

struct PurityFraction {
  double threshold = 0.0;
  std::size_t count = 0;  ///< M_k: clusters with purity >= threshold
  double fraction = 0.0;  ///< M_k / N
};

struct PurityReport {
  std::vector<PurityRow> per_cluster;
  std::size_t n_clusters = 0;  ///< N; clusters with no labelled member excluded
  std::vector<PurityFraction> fractions;  ///< in threshold order given
  std::size_t noise_size = 0;
  std::size_t unlabeled_items = 0;
  std::size_t unlabeled_clusters = 0;
};

inline const std::vector<double> kDefaultPurityThresholds{0.5, 0.7, 0.9};

/// Purity of every cluster and the fraction of clusters at each threshold.
/// Noise buckets must not be passed as clusters; their size is reported via
/// `noise_size` only. Throws InputError when `labels` is empty, `clusters` is
/// empty, or a threshold lies outside (0, 1].
PurityReport purity_report(const std::vector<std::vector<std::string>>& clusters,
                           const LabelMap& labels,
                           const std::vector<double>& thresholds = kDefaultPurityThresholds,
                           std::size_t noise_size = 0);

struct KMedoidsResult {
  std::vector<std::vector<NodeId>> clusters;  ///< cluster i belongs to medoids[i]
  std::vector<NodeId> medoids;
  /// Sum of distances to the assigned medoid after each assignment step.
  std::vector<double> objective_history;
  int iterations = 0;
};

/// Voronoi-iteration k-medoids on distance 1 - cosine similarity, seeded with
/// k-means++ style sampling proportional to squared distance.
KMedoidsResult kmedoids(const EmbeddingSet& emb, std::size_t k, std::uint64_t seed,
                        int max_iters = 100);

struct MethodReport {
  std::string dataset;
  std::string method;
  PurityReport report;
};

/// Text table laid out like a purity comparison table: one block of rows per
/// dataset, one row per threshold, one "Fraction of clusters @ k% purity
/// (method)" column per method.
std::string format_purity_table(const std::vector<MethodReport>& reports);

}  // namespace vec2gc
