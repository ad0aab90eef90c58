#include "vec2gc/embedding_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vec2gc/error.hpp"

namespace vec2gc {

namespace {

[[noreturn]] void fail_at(const std::filesystem::path& path, std::size_t line,
                          const std::string& what) {
  throw InputError(path.string() + ":" + std::to_string(line) + ": " + what);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::optional<float> parse_float(std::string_view token) {
  float value = 0.0f;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

std::optional<std::size_t> parse_size(std::string_view token) {
  std::size_t value = 0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::vector<std::string_view> split_on(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

// Accumulates records and enforces the per-record invariants with line
// numbers attached.
class Collector {
 public:
  explicit Collector(const std::filesystem::path& path) : path_(path) {}

  void set_dim(std::size_t dim) { dim_ = dim; }
  std::optional<std::size_t> dim() const { return dim_; }

  void add(std::size_t line, std::string id, std::span<const float> vec) {
    if (id.empty()) fail_at(path_, line, "empty id");
    if (!dim_) {
      if (vec.empty()) fail_at(path_, line, "vector for '" + id + "' is empty");
      dim_ = vec.size();
    }
    if (vec.size() != *dim_) {
      fail_at(path_, line, "dimension mismatch for '" + id + "': expected " +
                               std::to_string(*dim_) + ", got " + std::to_string(vec.size()));
    }
    double sq = 0.0;
    for (float v : vec) {
      if (!std::isfinite(v)) fail_at(path_, line, "non-finite value in vector '" + id + "'");
      sq += static_cast<double>(v) * v;
    }
    if (std::sqrt(sq) < EmbeddingSet::kMinNorm) {
      fail_at(path_, line, "zero-norm vector '" + id + "'");
    }
    if (auto [it, fresh] = seen_.emplace(id, line); !fresh) {
      fail_at(path_, line, "duplicate id '" + id + "' (first on line " +
                               std::to_string(it->second) + ")");
    }
    values_.insert(values_.end(), vec.begin(), vec.end());
    ids_.push_back(std::move(id));
  }

  void add_label(std::size_t line, const std::string& id, std::string label) {
    if (label.empty()) fail_at(path_, line, "empty label for '" + id + "'");
    labels_[id] = std::move(label);
  }

  std::size_t count() const { return ids_.size(); }

  EmbeddingSet finish() && {
    if (ids_.empty()) throw InputError(path_.string() + ": no embeddings");
    return EmbeddingSet(std::move(ids_), std::move(values_), *dim_, std::move(labels_));
  }

 private:
  std::filesystem::path path_;
  std::optional<std::size_t> dim_;
  std::vector<std::string> ids_;
  std::vector<float> values_;
  LabelMap labels_;
  std::unordered_map<std::string, std::size_t> seen_;
};

std::vector<float> parse_floats(const std::filesystem::path& path, std::size_t line,
                                std::span<const std::string_view> tokens) {
  std::vector<float> vec;
  vec.reserve(tokens.size());
  for (auto token : tokens) {
    auto value = parse_float(trim(token));
    if (!value) fail_at(path, line, "malformed number '" + std::string(token) + "'");
    vec.push_back(*value);
  }
  return vec;
}

EmbeddingSet load_word2vec(const std::filesystem::path& path) {
  auto in = open_input(path);
  Collector collector(path);
  std::string raw;
  std::size_t line = 0;
  std::optional<std::size_t> expected_rows;
  while (std::getline(in, raw)) {
    ++line;
    const auto text = trim(raw);
    if (text.empty()) continue;
    const auto tokens = split_ws(text);
    if (!expected_rows) {
      if (tokens.size() != 2) fail_at(path, line, "expected header \"N d\"");
      auto rows = parse_size(tokens[0]);
      auto dim = parse_size(tokens[1]);
      if (!rows || !dim || *dim == 0) fail_at(path, line, "malformed header \"N d\"");
      expected_rows = *rows;
      collector.set_dim(*dim);
      continue;
    }
    if (tokens.size() < 2) fail_at(path, line, "expected token followed by values");
    auto vec = parse_floats(path, line, std::span(tokens).subspan(1));
    collector.add(line, std::string(tokens[0]), vec);
  }
  if (!expected_rows) throw InputError(path.string() + ": missing word2vec header");
  if (collector.count() != *expected_rows) {
    throw InputError(path.string() + ": header declares " + std::to_string(*expected_rows) +
                     " rows, found " + std::to_string(collector.count()));
  }
  return std::move(collector).finish();
}

EmbeddingSet load_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  Collector collector(path);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto text = trim(raw);
    if (text.empty()) continue;
    const auto fields = split_on(text, ',');
    if (fields.size() < 2) fail_at(path, line, "expected id followed by values");
    auto vec = parse_floats(path, line, std::span(fields).subspan(1));
    collector.add(line, std::string(trim(fields[0])), vec);
  }
  return std::move(collector).finish();
}

EmbeddingSet load_jsonl(const std::filesystem::path& path) {
  auto in = open_input(path);
  Collector collector(path);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (trim(raw).empty()) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::parse_error& e) {
      fail_at(path, line, std::string("malformed JSON: ") + e.what());
    }
    if (!record.is_object()) fail_at(path, line, "record is not an object");
    auto id_it = record.find("id");
    if (id_it == record.end() || !id_it->is_string()) fail_at(path, line, "missing string \"id\"");
    auto vec_it = record.find("vector");
    if (vec_it == record.end() || !vec_it->is_array()) {
      fail_at(path, line, "missing array \"vector\"");
    }
    std::vector<float> vec;
    vec.reserve(vec_it->size());
    for (const auto& v : *vec_it) {
      if (!v.is_number()) fail_at(path, line, "non-numeric vector entry");
      vec.push_back(static_cast<float>(v.get<double>()));
    }
    auto id = id_it->get<std::string>();
    collector.add(line, id, vec);
    if (auto label_it = record.find("label"); label_it != record.end() && !label_it->is_null()) {
      if (!label_it->is_string()) fail_at(path, line, "\"label\" must be a string");
      collector.add_label(line, id, label_it->get<std::string>());
    }
  }
  return std::move(collector).finish();
}

}  // namespace

EmbeddingFormat parse_embedding_format(std::string_view name) {
  if (name == "word2vec") return EmbeddingFormat::kWord2VecText;
  if (name == "csv") return EmbeddingFormat::kCsv;
  if (name == "jsonl") return EmbeddingFormat::kJsonl;
  throw InputError("unknown embedding format '" + std::string(name) +
                   "' (expected word2vec, csv or jsonl)");
}

std::string_view format_name(EmbeddingFormat format) {
  switch (format) {
    case EmbeddingFormat::kWord2VecText: return "word2vec";
    case EmbeddingFormat::kCsv: return "csv";
    case EmbeddingFormat::kJsonl: return "jsonl";
  }
  return "unknown";
}

EmbeddingSet::EmbeddingSet(std::vector<std::string> ids, std::vector<float> values,
                           std::size_t dim, LabelMap labels)
    : ids_(std::move(ids)), values_(std::move(values)), dim_(dim), labels_(std::move(labels)) {
  if (dim_ == 0) throw InputError("embedding dimension must be positive");
  if (values_.size() != ids_.size() * dim_) {
    throw InputError("embedding value count does not match ids x dim");
  }
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (ids_[i].empty()) throw InputError("empty id at item " + std::to_string(i));
    if (!index_.emplace(ids_[i], i).second) throw InputError("duplicate id '" + ids_[i] + "'");
    double sq = 0.0;
    for (float v : vector(i)) {
      if (!std::isfinite(v)) throw InputError("non-finite value in vector '" + ids_[i] + "'");
      sq += static_cast<double>(v) * v;
    }
    if (std::sqrt(sq) < kMinNorm) throw InputError("zero-norm vector '" + ids_[i] + "'");
  }
  for (const auto& [id, label] : labels_) {
    if (!index_.contains(id)) throw InputError("label for unknown id '" + id + "'");
    if (label.empty()) throw InputError("empty label for '" + id + "'");
  }
}

std::optional<std::size_t> EmbeddingSet::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

EmbeddingSet load_embeddings(const std::filesystem::path& path, EmbeddingFormat format) {
  switch (format) {
    case EmbeddingFormat::kWord2VecText: return load_word2vec(path);
    case EmbeddingFormat::kCsv: return load_csv(path);
    case EmbeddingFormat::kJsonl: return load_jsonl(path);
  }
  throw InputError("unknown embedding format");
}

void write_embeddings_jsonl(const EmbeddingSet& set, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  for (std::size_t i = 0; i < set.size(); ++i) {
    nlohmann::ordered_json record;
    record["id"] = set.id(i);
    auto& vec = record["vector"] = nlohmann::ordered_json::array();
    for (float v : set.vector(i)) vec.push_back(static_cast<double>(v));
    if (auto it = set.labels().find(set.id(i)); it != set.labels().end()) {
      record["label"] = it->second;
    }
    out << record.dump() << '\n';
  }
}

LabelMap load_labels(const std::filesystem::path& path, bool has_header) {
  auto in = open_input(path);
  LabelMap labels;
  std::string raw;
  std::size_t line = 0;
  bool header_pending = has_header;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (trim(raw).empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    const auto fields = split_on(raw, '\t');
    if (fields.size() != 2) fail_at(path, line, "expected two tab-separated columns");
    const std::string id(trim(fields[0]));
    const std::string label(trim(fields[1]));
    if (id.empty()) fail_at(path, line, "empty id");
    if (label.empty()) fail_at(path, line, "empty label for '" + id + "'");
    if (!labels.emplace(id, label).second) fail_at(path, line, "duplicate id '" + id + "'");
  }
  return labels;
}

EmbeddingSet attach_labels(const EmbeddingSet& set, const LabelMap& labels, LabelJoin* join) {
  LabelMap merged = set.labels();
  LabelJoin counts;
  for (const auto& [id, label] : labels) {
    if (set.find(id)) {
      merged[id] = label;
      ++counts.matched;
    } else {
      ++counts.unknown_ids;
    }
  }
  if (join) *join = counts;
  return EmbeddingSet(set.ids(), std::vector<float>(set.values().begin(), set.values().end()),
                      set.dim(), std::move(merged));
}

}  // namespace vec2gc
