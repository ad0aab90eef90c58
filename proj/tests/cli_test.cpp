#include "vec2gc/cli.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <random>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "test_support.hpp"

namespace vec2gc {
namespace {

using testing::slurp;
using testing::TempDir;

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "vec2gc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// Runs the installed binary; returns its exit status.
int run_binary(const std::string& args) {
  const std::string command = std::string(VEC2GC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_labels(const EmbeddingSet& set, const std::filesystem::path& path) {
  std::ofstream out(path);
  for (const auto& [id, label] : set.labels()) out << id << '\t' << label << '\n';
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::mt19937_64 rng(21);
    planted_ = std::make_unique<testing::Planted>(testing::planted_groups(rng, 3, 12));
    input_ = dir_ / "emb.jsonl";
    write_embeddings_jsonl(planted_->set, input_);
    labels_ = dir_ / "labels.tsv";
    write_labels(planted_->set, labels_);
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  CliResult cluster(const std::string& output, std::vector<std::string> extra = {}) {
    std::vector<std::string> args{"cluster",  "--input", input_.string(), "--theta", "0.5",
                                  "--seed",   "7",       "--output",      output};
    args.insert(args.end(), extra.begin(), extra.end());
    return invoke(args);
  }

  TempDir dir_;
  std::unique_ptr<testing::Planted> planted_;
  std::filesystem::path input_;
  std::filesystem::path labels_;
};

TEST_F(CliTest, ClusterWritesTreeAndManifest) {
  const auto r = cluster(path("tree.json"), {"--labels", labels_.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto tree = nlohmann::json::parse(slurp(path("tree.json")));
  EXPECT_EQ(tree["theta"], 0.5);
  EXPECT_EQ(tree["seed"], 7);
  const auto manifest = nlohmann::json::parse(slurp(path("tree.json.manifest.json")));
  EXPECT_EQ(manifest["theta"].get<double>(), 0.5);
  EXPECT_EQ(manifest["seed"], 7);
  EXPECT_EQ(manifest["version"], kVersion);
  EXPECT_EQ(manifest["input"]["sha256"], file_sha256(input_));
  EXPECT_EQ(manifest["input"]["sha256"].get<std::string>().size(), 64u);
  EXPECT_EQ(manifest["summary"]["items"], 36);
  EXPECT_EQ(manifest["summary"]["leaves"], 3);
  EXPECT_EQ(manifest["louvain"]["threads"], 1);
}

TEST_F(CliTest, Sha256OfKnownContent) {
  const auto p = dir_.write("abc.txt", "abc");
  EXPECT_EQ(file_sha256(p), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_F(CliTest, ThetaOutOfRangeExitsOne) {
  const auto r = invoke({"cluster", "--input", input_.string(), "--theta", "1.2", "--seed", "1",
                      "--output", path("t.json")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("[0, 1)"), std::string::npos) << r.err;
  EXPECT_EQ(r.err.find('\n'), r.err.size() - 1) << "diagnostic should be one line: " << r.err;
  EXPECT_FALSE(std::filesystem::exists(path("t.json")));
}

TEST_F(CliTest, MissingThetaExitsOne) {
  const auto r = invoke({"cluster", "--input", input_.string(), "--seed", "1"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--theta"), std::string::npos);
}

TEST_F(CliTest, BadParametersExitOne) {
  EXPECT_EQ(cluster(path("a.json"), {"--mod-threshold", "1.0"}).code, 1);
  EXPECT_EQ(cluster(path("a.json"), {"--max-size", "0"}).code, 1);
  EXPECT_EQ(cluster(path("a.json"), {"--restarts", "0"}).code, 1);
  EXPECT_EQ(invoke({"cluster", "--input", path("absent.jsonl"), "--theta", "0.5"}).code, 1);
  EXPECT_EQ(invoke({"cluster", "--input", input_.string(), "--theta", "0.5", "--format", "xml"}).code,
            1);
  EXPECT_EQ(invoke({"no-such-command"}).code, 1);
}

TEST_F(CliTest, RepeatRunsAreByteIdentical) {
  ASSERT_EQ(cluster(path("a.json")).code, 0);
  ASSERT_EQ(cluster(path("b.json")).code, 0);
  EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
}

TEST_F(CliTest, GeneratedSeedIsReportedAndRecorded) {
  const auto r = invoke({"cluster", "--input", input_.string(), "--theta", "0.5", "--output",
                      path("g.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto manifest = nlohmann::json::parse(slurp(path("g.json.manifest.json")));
  const auto seed = manifest["seed"].get<std::uint64_t>();
  EXPECT_NE(r.err.find(std::to_string(seed)), std::string::npos) << r.err;
}

TEST_F(CliTest, ManifestRerunReproducesOutput) {
  ASSERT_EQ(cluster(path("first.json"), {"--max-size", "20", "--mod-threshold", "0.25",
                                         "--restarts", "3"})
                .code,
            0);
  const auto r = invoke({"cluster", "--manifest", path("first.json.manifest.json"), "--output",
                      path("second.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(path("first.json")), slurp(path("second.json")));

  const auto config = read_manifest(path("first.json.manifest.json"));
  EXPECT_EQ(config.cluster.max_size, 20u);
  EXPECT_EQ(config.cluster.mod_threshold, 0.25);
  EXPECT_EQ(config.cluster.louvain.restarts, 3);
  EXPECT_EQ(config.seed, 7u);
}

TEST_F(CliTest, EvaluatePlantedTreeIsPure) {
  ASSERT_EQ(cluster(path("tree.json")).code, 0);
  const auto r = invoke({"evaluate", "--tree", path("tree.json"), "--labels", labels_.string(),
                      "--output", path("report.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("Fraction of clusters @ k% purity (Vec2GC)"), std::string::npos);
  const auto report = nlohmann::json::parse(slurp(path("report.json")));
  const auto& fractions = report["reports"][0]["fractions"];
  ASSERT_EQ(fractions.size(), 3u);
  for (const auto& f : fractions) EXPECT_EQ(f["fraction"], 1.0);
  EXPECT_EQ(report["reports"][0]["n_clusters"], 3);
}

TEST_F(CliTest, EvaluateWarnsOnUnlabelledIds) {
  ASSERT_EQ(cluster(path("tree.json")).code, 0);
  std::ofstream partial(path("partial.tsv"));
  std::size_t kept = 0;
  for (const auto& [id, label] : planted_->set.labels()) {
    if (kept++ % 4 == 0) continue;
    partial << id << '\t' << label << '\n';
  }
  partial.close();
  const auto r = invoke({"evaluate", "--tree", path("tree.json"), "--labels", path("partial.tsv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("warning: 9 clustered ids have no label"), std::string::npos) << r.err;
}

TEST_F(CliTest, EvaluateErrors) {
  dir_.write("broken.json", "{\"theta\": 0.5,\n  \"nodes\": [}");
  auto r = invoke({"evaluate", "--tree", path("broken.json"), "--labels", labels_.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;

  ASSERT_EQ(cluster(path("tree.json")).code, 0);
  r = invoke({"evaluate", "--tree", path("tree.json"), "--labels", path("missing.tsv")});
  EXPECT_EQ(r.code, 1);
  dir_.write("empty.tsv", "");
  r = invoke({"evaluate", "--tree", path("tree.json"), "--labels", path("empty.tsv")});
  EXPECT_EQ(r.code, 1);
  r = invoke({"evaluate", "--tree", path("tree.json"), "--labels", labels_.string(),
           "--purity-thresholds", "0.5,1.5"});
  EXPECT_EQ(r.code, 1);
}

TEST_F(CliTest, BaselineAndComparisonTable) {
  auto r = invoke({"baseline", "kmedoids", "--input", input_.string(), "--k", "3", "--seed", "5",
                "--output", path("km.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto km = nlohmann::json::parse(slurp(path("km.json")));
  EXPECT_EQ(km["method"], "KMedoids");
  EXPECT_EQ(km["clusters"].size(), 3u);
  EXPECT_EQ(km["medoids"].size(), 3u);

  ASSERT_EQ(cluster(path("tree.json")).code, 0);
  r = invoke({"evaluate", "--tree", path("tree.json"), "--labels", labels_.string(), "--compare",
           path("km.json"), "--dataset", "planted", "--purity-thresholds", "0.5,0.7,0.9"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("Fraction of clusters @ k% purity (KMedoids)"), std::string::npos);
  EXPECT_NE(r.out.find("Fraction of clusters @ k% purity (Vec2GC)"), std::string::npos);
  EXPECT_NE(r.out.find("planted"), std::string::npos);

  EXPECT_EQ(invoke({"baseline", "kmedoids", "--input", input_.string(), "--k", "99", "--seed", "5",
                 "--output", path("bad.json")})
                .code,
            1);
}

TEST_F(CliTest, GraphWritesEdgeList) {
  const auto r = invoke({"graph", "--input", input_.string(), "--theta", "0.5", "--output",
                      path("edges.tsv")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(slurp(path("edges.tsv")));
  std::size_t count = 0;
  for (std::string line; std::getline(lines, line); ++count) {
    std::istringstream fields(line);
    std::string a, b;
    double w = 0.0;
    ASSERT_TRUE(fields >> a >> b >> w) << line;
    EXPECT_GE(w, 2.0);  // theta 0.5 means weight >= 1 / (1 - 0.5)
  }
  EXPECT_EQ(count, 3u * (12u * 11u / 2u));  // three cliques of twelve
  EXPECT_EQ(invoke({"graph", "--input", input_.string(), "--theta", "-0.1"}).code, 1);
}

TEST_F(CliTest, BinaryExitCodes) {
  EXPECT_EQ(run_binary("--version"), 0);
  EXPECT_EQ(run_binary("cluster --input " + input_.string() + " --theta 1.2 --seed 1 --output " +
                       path("x.json")),
            1);
  EXPECT_EQ(run_binary("cluster --input " + input_.string() + " --theta 0.5 --seed 1 --output " +
                       path("x.json")),
            0);
  EXPECT_TRUE(std::filesystem::exists(path("x.json")));
}

}  // namespace
}  // namespace vec2gc
