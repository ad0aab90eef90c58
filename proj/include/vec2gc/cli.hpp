#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "vec2gc/embedding_io.hpp"
#include "vec2gc/hierarchy.hpp"

namespace vec2gc {

inline constexpr const char* kVersion = "0.1.0";

/// Everything needed to reproduce a `cluster` run.
struct RunConfig {
  std::filesystem::path input;
  EmbeddingFormat format = EmbeddingFormat::kJsonl;
  std::optional<std::filesystem::path> labels;
  bool labels_header = false;
  double theta = -1.0;  ///< no default; must be set explicitly
  ClusterOptions cluster;
  std::optional<std::uint64_t> seed;  ///< generated and recorded when absent
  std::filesystem::path output = "tree.json";
  std::optional<std::filesystem::path> manifest;  ///< defaults to <output>.manifest.json

  /// Throws InputError naming the offending parameter and its valid range.
  void validate() const;
  std::filesystem::path manifest_path() const;
};

/// Hex SHA-256 of a file's bytes.
std::string file_sha256(const std::filesystem::path& path);

/// Reads a manifest written by cmd_cluster back into a config.
RunConfig read_manifest(const std::filesystem::path& path);

/// Runs the pipeline ingest -> graph -> cluster and writes the tree JSON plus
/// a manifest. Returns the process exit code; diagnostics go to `err`.
int cmd_cluster(RunConfig config, std::ostream& out, std::ostream& err);

struct EvaluateConfig {
  std::filesystem::path tree;
  std::filesystem::path labels;
  bool labels_header = false;
  std::vector<double> thresholds = {0.5, 0.7, 0.9};
  std::string dataset;  ///< defaults to the tree file stem
  std::string method = "Vec2GC";
  std::vector<std::filesystem::path> compare;  ///< baseline cluster files
  std::optional<std::filesystem::path> output;
};

int cmd_evaluate(const EvaluateConfig& config, std::ostream& out, std::ostream& err);

/// Full command line entry point: `graph`, `cluster`, `evaluate`,
/// `baseline kmedoids`. Exit codes: 0 success, 1 input error, 2 internal
/// invariant violation.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vec2gc
