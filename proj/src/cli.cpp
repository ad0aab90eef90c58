#include "vec2gc/cli.hpp"

#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "vec2gc/error.hpp"
#include "vec2gc/eval.hpp"
#include "vec2gc/simgraph.hpp"

namespace vec2gc {

namespace {

using nlohmann::ordered_json;

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

std::uint64_t generate_seed(std::ostream& err) {
  std::random_device device;
  const std::uint64_t seed = (static_cast<std::uint64_t>(device()) << 32) | device();
  err << "vec2gc: no --seed given, using generated seed " << seed << '\n';
  return seed;
}

EmbeddingSet load_with_labels(const std::filesystem::path& input, EmbeddingFormat format,
                              const std::optional<std::filesystem::path>& labels,
                              bool labels_header, std::ostream& err) {
  auto emb = load_embeddings(input, format);
  if (!labels) return emb;
  LabelJoin join;
  emb = attach_labels(emb, load_labels(*labels, labels_header), &join);
  if (join.unknown_ids > 0) {
    err << "vec2gc: warning: " << join.unknown_ids
        << " label rows name ids absent from the embeddings\n";
  }
  return emb;
}

ordered_json report_json(const MethodReport& r) {
  ordered_json j;
  j["method"] = r.method;
  j["n_clusters"] = r.report.n_clusters;
  j["noise_size"] = r.report.noise_size;
  j["unlabeled_items"] = r.report.unlabeled_items;
  j["unlabeled_clusters"] = r.report.unlabeled_clusters;
  auto& fractions = j["fractions"] = ordered_json::array();
  for (const auto& f : r.report.fractions) {
    fractions.push_back({{"threshold", f.threshold}, {"count", f.count}, {"fraction", f.fraction}});
  }
  auto& rows = j["per_cluster"] = ordered_json::array();
  for (const auto& row : r.report.per_cluster) {
    ordered_json entry;
    entry["cluster"] = row.cluster;
    entry["size"] = row.size;
    entry["labeled_size"] = row.labeled_size;
    entry["majority_label"] = row.majority_label;
    entry["purity"] = row.purity;
    rows.push_back(std::move(entry));
  }
  return j;
}

// Baseline cluster files: {"method": str, "clusters": [[id,...],...],
// "noise": optional [id,...]}.
struct ClusterFile {
  std::string method;
  std::vector<std::vector<std::string>> clusters;
  std::size_t noise = 0;
};

ClusterFile read_cluster_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  ClusterFile file;
  try {
    const auto doc = nlohmann::json::parse(in);
    file.method = doc.at("method").get<std::string>();
    file.clusters = doc.at("clusters").get<std::vector<std::vector<std::string>>>();
    if (auto it = doc.find("noise"); it != doc.end()) file.noise = it->size();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return file;
}

int cmd_graph(const std::filesystem::path& input, EmbeddingFormat format, double theta,
              unsigned threads, const std::filesystem::path& output, std::ostream& err) {
  check_theta(theta);
  const auto emb = load_embeddings(input, format);
  const auto g = build_graph(emb, theta, threads);
  auto out = open_output(output);
  write_edge_tsv(g, emb, out);
  err << "vec2gc: " << g.node_count() << " nodes, " << g.graph.edge_count() << " edges\n";
  return 0;
}

int cmd_kmedoids(const std::filesystem::path& input, EmbeddingFormat format, std::size_t k,
                 std::optional<std::uint64_t> seed, int max_iters,
                 const std::filesystem::path& output, std::ostream& err) {
  const auto emb = load_embeddings(input, format);
  const std::uint64_t used_seed = seed ? *seed : generate_seed(err);
  const auto result = kmedoids(emb, k, used_seed, max_iters);
  ordered_json doc;
  doc["method"] = "KMedoids";
  doc["k"] = k;
  doc["seed"] = used_seed;
  doc["iterations"] = result.iterations;
  doc["objective"] = result.objective_history.back();
  auto& medoids = doc["medoids"] = ordered_json::array();
  for (NodeId m : result.medoids) medoids.push_back(emb.id(m));
  auto& clusters = doc["clusters"] = ordered_json::array();
  for (const auto& cluster : result.clusters) {
    auto members = ordered_json::array();
    for (NodeId a : cluster) members.push_back(emb.id(a));
    clusters.push_back(std::move(members));
  }
  auto out = open_output(output);
  out << doc.dump(2) << '\n';
  return 0;
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const InputError& e) {
    err << "vec2gc: error: " << e.what() << '\n';
    return 1;
  } catch (const InvariantError& e) {
    err << "vec2gc: internal error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "vec2gc: internal error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace

void RunConfig::validate() const {
  check_theta(theta);
  check_cluster_options(cluster);
  if (input.empty()) throw InputError("an input file is required");
}

std::filesystem::path RunConfig::manifest_path() const {
  if (manifest) return *manifest;
  return std::filesystem::path(output.string() + ".manifest.json");
}

std::string file_sha256(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw InvariantError("sha256 initialisation failed");
  }
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

RunConfig read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open manifest " + path.string());
  RunConfig config;
  try {
    const auto doc = nlohmann::json::parse(in);
    const auto& input = doc.at("input");
    config.input = input.at("path").get<std::string>();
    config.format = parse_embedding_format(input.at("format").get<std::string>());
    if (const auto& labels = doc.at("labels"); !labels.is_null()) {
      config.labels = labels.at("path").get<std::string>();
      config.labels_header = labels.at("header").get<bool>();
    }
    config.theta = doc.at("theta").get<double>();
    config.cluster.mod_threshold = doc.at("mod_threshold").get<double>();
    config.cluster.max_size = doc.at("max_size").get<std::size_t>();
    config.cluster.min_community_size = doc.at("min_community_size").get<std::size_t>();
    config.seed = doc.at("seed").get<std::uint64_t>();
    const auto& louvain = doc.at("louvain");
    config.cluster.louvain.gain_epsilon = louvain.at("gain_epsilon").get<double>();
    config.cluster.louvain.max_sweeps = louvain.at("max_sweeps").get<int>();
    config.cluster.louvain.max_levels = louvain.at("max_levels").get<int>();
    config.cluster.louvain.restarts = louvain.at("restarts").get<int>();
    config.cluster.louvain.threads = louvain.at("threads").get<unsigned>();
    config.output = doc.at("output").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError("manifest " + path.string() + ": " + e.what());
  }
  return config;
}

int cmd_cluster(RunConfig config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    config.validate();
    const auto emb =
        load_with_labels(config.input, config.format, config.labels, config.labels_header, err);
    if (!config.seed) config.seed = generate_seed(err);
    config.cluster.seed = *config.seed;

    const auto g = build_graph(emb, config.theta, config.cluster.louvain.threads);
    const auto result = vec2gc_cluster(g, config.cluster);
    if (result.all_isolated) {
      err << "vec2gc: warning: no pair reaches theta = " << config.theta
          << "; every item is a non-community node\n";
    }

    {
      auto tree_out = open_output(config.output);
      write_tree_json(tree_out, result, emb.ids(),
                      TreeParams{config.theta, config.cluster.mod_threshold,
                                 config.cluster.max_size, *config.seed});
    }

    ordered_json manifest;
    manifest["version"] = kVersion;
    manifest["command"] = "cluster";
    manifest["input"] = {{"path", config.input.string()},
                         {"format", std::string(format_name(config.format))},
                         {"sha256", file_sha256(config.input)}};
    if (config.labels) {
      manifest["labels"] = {{"path", config.labels->string()},
                            {"header", config.labels_header},
                            {"sha256", file_sha256(*config.labels)}};
    } else {
      manifest["labels"] = nullptr;
    }
    manifest["theta"] = config.theta;
    manifest["mod_threshold"] = config.cluster.mod_threshold;
    manifest["max_size"] = config.cluster.max_size;
    manifest["min_community_size"] = config.cluster.min_community_size;
    manifest["seed"] = *config.seed;
    manifest["louvain"] = {{"gain_epsilon", config.cluster.louvain.gain_epsilon},
                           {"max_sweeps", config.cluster.louvain.max_sweeps},
                           {"max_levels", config.cluster.louvain.max_levels},
                           {"restarts", config.cluster.louvain.restarts},
                           {"threads", config.cluster.louvain.threads}};
    manifest["output"] = config.output.string();
    manifest["summary"] = {{"items", emb.size()},
                           {"edges", g.graph.edge_count()},
                           {"tree_nodes", result.tree.nodes.size()},
                           {"leaves", flat_clusters(result.tree).size()},
                           {"non_community", result.bucket.size()}};
    auto manifest_out = open_output(config.manifest_path());
    manifest_out << manifest.dump(2) << '\n';

    out << "wrote " << config.output.string() << " (" << flat_clusters(result.tree).size()
        << " leaves, " << result.bucket.size() << " non-community) and "
        << config.manifest_path().string() << '\n';
    return 0;
  });
}

int cmd_evaluate(const EvaluateConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    std::ifstream tree_in(config.tree);
    if (!tree_in) throw InputError("cannot open " + config.tree.string());
    const auto tree = read_tree_json(tree_in);
    const auto labels = load_labels(config.labels, config.labels_header);
    if (labels.empty()) throw InputError("no labels in " + config.labels.string());

    const auto leaves = tree.leaves();
    if (leaves.empty()) throw InputError("tree has no clusters to evaluate");
    std::size_t missing = 0;
    for (const auto& leaf : leaves) {
      for (const auto& id : leaf) missing += labels.contains(id) ? 0 : 1;
    }
    if (missing > 0) {
      err << "vec2gc: warning: " << missing
          << " clustered ids have no label; evaluating the remainder\n";
    }

    const std::string dataset =
        config.dataset.empty() ? config.tree.stem().string() : config.dataset;
    std::vector<MethodReport> reports;
    for (const auto& path : config.compare) {
      auto file = read_cluster_file(path);
      reports.push_back({dataset, file.method,
                         purity_report(file.clusters, labels, config.thresholds, file.noise)});
    }
    reports.push_back({dataset, config.method,
                       purity_report(leaves, labels, config.thresholds,
                                     tree.non_community.size())});

    out << format_purity_table(reports);
    if (config.output) {
      ordered_json doc;
      doc["dataset"] = dataset;
      doc["thresholds"] = config.thresholds;
      auto& arr = doc["reports"] = ordered_json::array();
      for (const auto& r : reports) arr.push_back(report_json(r));
      auto report_out = open_output(*config.output);
      report_out << doc.dump(2) << '\n';
    }
    return 0;
  });
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"vec2gc: cluster embeddings by recursive community detection on a "
               "cosine-similarity graph"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string format_text = "jsonl";
  auto format_option = [&](CLI::App* cmd) {
    cmd->add_option("--format", format_text, "Embedding file format")
        ->check(CLI::IsMember({"word2vec", "csv", "jsonl"}))
        ->capture_default_str();
  };

  // graph
  auto* graph_cmd = app.add_subcommand("graph", "Build the thresholded similarity graph");
  std::filesystem::path graph_input;
  std::filesystem::path graph_output = "edges.tsv";
  double graph_theta = -1.0;
  unsigned graph_threads = 1;
  graph_cmd->add_option("--input", graph_input, "Embedding file")->required();
  format_option(graph_cmd);
  graph_cmd->add_option("--theta", graph_theta, "Similarity threshold in [0,1), e.g. 0.7")
      ->required();
  graph_cmd->add_option("--output", graph_output, "Edge list TSV")->capture_default_str();
  graph_cmd->add_option("--threads", graph_threads, "Worker threads (0 = auto)")
      ->capture_default_str();

  // cluster
  auto* cluster_cmd = app.add_subcommand("cluster", "Cluster embeddings into a tree");
  RunConfig run;
  std::filesystem::path manifest_in;
  std::filesystem::path labels_path;
  std::uint64_t seed = 0;
  cluster_cmd->add_option("--manifest", manifest_in,
                          "Rerun from a manifest written by a previous run");
  auto* input_opt = cluster_cmd->add_option("--input", run.input, "Embedding file");
  format_option(cluster_cmd);
  auto* labels_opt = cluster_cmd->add_option("--labels", labels_path, "Optional label TSV");
  cluster_cmd->add_flag("--labels-header", run.labels_header, "Label TSV has a header row");
  auto* theta_opt = cluster_cmd->add_option(
      "--theta", run.theta,
      "Similarity threshold in [0,1); no default (0.7 suits unit-normalized document "
      "embeddings)");
  cluster_cmd->add_option("--mod-threshold", run.cluster.mod_threshold,
                          "Stop splitting below this modularity")
      ->capture_default_str();
  cluster_cmd->add_option("--max-size", run.cluster.max_size,
                          "Split communities larger than this")
      ->capture_default_str();
  cluster_cmd->add_option("--min-community-size", run.cluster.min_community_size,
                          "Smaller communities become non-community nodes")
      ->capture_default_str();
  auto* seed_opt = cluster_cmd->add_option("--seed", seed, "Random seed (generated if absent)");
  cluster_cmd->add_option("--gain-epsilon", run.cluster.louvain.gain_epsilon,
                          "Minimum modularity gain for a move")
      ->capture_default_str();
  cluster_cmd->add_option("--max-sweeps", run.cluster.louvain.max_sweeps,
                          "Local-move sweeps per Louvain level")
      ->capture_default_str();
  cluster_cmd->add_option("--restarts", run.cluster.louvain.restarts,
                          "Louvain runs per split; the best modularity is kept")
      ->capture_default_str();
  cluster_cmd->add_option("--threads", run.cluster.louvain.threads,
                          "Worker threads (0 = auto; 1 is the canonical reproducible mode)")
      ->capture_default_str();
  auto* output_opt =
      cluster_cmd->add_option("--output", run.output, "Tree JSON")->capture_default_str();
  std::filesystem::path manifest_out;
  auto* manifest_out_opt = cluster_cmd->add_option(
      "--manifest-out", manifest_out, "Manifest path (default <output>.manifest.json)");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Purity report for a cluster tree");
  EvaluateConfig eval;
  eval_cmd->add_option("--tree", eval.tree, "Tree JSON")->required();
  eval_cmd->add_option("--labels", eval.labels, "Label TSV")->required();
  eval_cmd->add_flag("--labels-header", eval.labels_header, "Label TSV has a header row");
  eval_cmd->add_option("--purity-thresholds", eval.thresholds, "Comma-separated thresholds")
      ->delimiter(',')
      ->capture_default_str();
  eval_cmd->add_option("--dataset", eval.dataset, "Dataset name for the table");
  eval_cmd->add_option("--method", eval.method, "Method name for the tree column")
      ->capture_default_str();
  eval_cmd->add_option("--compare", eval.compare, "Baseline cluster JSON (repeatable)");
  std::filesystem::path eval_output;
  auto* eval_output_opt = eval_cmd->add_option("--output", eval_output, "Report JSON");

  // baseline kmedoids
  auto* baseline_cmd = app.add_subcommand("baseline", "Baseline clusterings");
  baseline_cmd->require_subcommand(1);
  auto* kmedoids_cmd = baseline_cmd->add_subcommand("kmedoids", "Cosine k-medoids");
  std::filesystem::path km_input;
  std::filesystem::path km_output = "kmedoids.json";
  std::size_t km_k = 0;
  std::uint64_t km_seed = 0;
  int km_iters = 100;
  kmedoids_cmd->add_option("--input", km_input, "Embedding file")->required();
  format_option(kmedoids_cmd);
  kmedoids_cmd->add_option("--k", km_k, "Number of clusters")->required();
  auto* km_seed_opt = kmedoids_cmd->add_option("--seed", km_seed, "Random seed");
  kmedoids_cmd->add_option("--max-iters", km_iters, "Iteration limit")->capture_default_str();
  kmedoids_cmd->add_option("--output", km_output, "Cluster JSON")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  if (graph_cmd->parsed()) {
    return guarded(err, [&] {
      return cmd_graph(graph_input, parse_embedding_format(format_text), graph_theta,
                       graph_threads, graph_output, err);
    });
  }
  if (cluster_cmd->parsed()) {
    if (!manifest_in.empty()) {
      RunConfig from_manifest;
      if (int code = guarded(err, [&] {
            from_manifest = read_manifest(manifest_in);
            std::ifstream manifest_stream(manifest_in);
            const auto doc = nlohmann::json::parse(manifest_stream);
            const auto recorded = doc.at("input").at("sha256").get<std::string>();
            if (file_sha256(from_manifest.input) != recorded) {
              err << "vec2gc: warning: input checksum differs from the manifest\n";
            }
            return 0;
          });
          code != 0) {
        return code;
      }
      if (*output_opt) from_manifest.output = run.output;
      if (*manifest_out_opt) from_manifest.manifest = manifest_out;
      return cmd_cluster(std::move(from_manifest), out, err);
    }
    if (!*input_opt) {
      err << "vec2gc: error: --input is required (or --manifest)\n";
      return 1;
    }
    if (!*theta_opt) {
      err << "vec2gc: error: --theta is required; choose a value in [0, 1) "
             "(0.7 suits unit-normalized document embeddings)\n";
      return 1;
    }
    if (int code = guarded(err, [&] {
          run.format = parse_embedding_format(format_text);
          return 0;
        });
        code != 0) {
      return code;
    }
    if (*labels_opt) run.labels = labels_path;
    if (*seed_opt) run.seed = seed;
    if (*manifest_out_opt) run.manifest = manifest_out;
    return cmd_cluster(std::move(run), out, err);
  }
  if (eval_cmd->parsed()) {
    if (*eval_output_opt) eval.output = eval_output;
    return cmd_evaluate(eval, out, err);
  }
  if (kmedoids_cmd->parsed()) {
    return guarded(err, [&] {
      return cmd_kmedoids(km_input, parse_embedding_format(format_text), km_k,
                          *km_seed_opt ? std::optional<std::uint64_t>(km_seed) : std::nullopt,
                          km_iters, km_output, err);
    });
  }
  return 1;
}

}  // namespace vec2gc
