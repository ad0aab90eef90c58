#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vec2gc {

enum class EmbeddingFormat { kWord2VecText, kCsv, kJsonl };

/// Parses "word2vec", "csv" or "jsonl". Throws InputError otherwise.
EmbeddingFormat parse_embedding_format(std::string_view name);
std::string_view format_name(EmbeddingFormat format);

using LabelMap = std::map<std::string, std::string>;

/// Immutable set of named dense vectors, optionally labelled.
///
/// Vectors are stored row-major as 32-bit floats; consumers that do graph
/// arithmetic widen to double. Construction validates every invariant:
/// consistent dimension, unique non-empty ids, finite values, and norms of at
/// least 1e-12.
class EmbeddingSet {
 public:
  static constexpr double kMinNorm = 1e-12;

  EmbeddingSet(std::vector<std::string> ids, std::vector<float> values,
               std::size_t dim, LabelMap labels = {});

  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return dim_; }
  bool empty() const { return ids_.empty(); }

  const std::vector<std::string>& ids() const { return ids_; }
  const std::string& id(std::size_t i) const { return ids_[i]; }
  std::span<const float> vector(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  std::span<const float> values() const { return values_; }

  /// Index of `id`, if present.
  std::optional<std::size_t> find(std::string_view id) const;

  const LabelMap& labels() const { return labels_; }
  bool has_labels() const { return !labels_.empty(); }

 private:
  std::vector<std::string> ids_;
  std::vector<float> values_;
  std::size_t dim_;
  LabelMap labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Reads an embedding file. Item order equals record order in the file.
/// Errors carry the 1-based line number of the offending record.
///
///   word2vec: header "N d", then "token v1 ... vd" per line
///   csv:      "id,v1,...,vd" per line, no header
///   jsonl:    {"id": str, "vector": [float], "label": optional str}
EmbeddingSet load_embeddings(const std::filesystem::path& path,
                             EmbeddingFormat format);

/// Writes the jsonl form; float values survive a reload bit-exact.
void write_embeddings_jsonl(const EmbeddingSet& set,
                            const std::filesystem::path& path);

/// Reads a two-column TSV of "id<TAB>label". Duplicate ids and empty labels are
/// errors. An empty file yields an empty map.
LabelMap load_labels(const std::filesystem::path& path, bool has_header = false);

struct LabelJoin {
  std::size_t matched = 0;
  std::size_t unknown_ids = 0;  ///< label rows naming no embedding id
};

/// Returns a copy of `set` carrying the labels whose ids resolve; labels for
/// unknown ids are dropped and counted. Existing inline labels are replaced
/// where the map provides one.
EmbeddingSet attach_labels(const EmbeddingSet& set, const LabelMap& labels,
                           LabelJoin* join = nullptr);

}  // namespace vec2gc
