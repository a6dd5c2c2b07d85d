#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out, err;
};

fs::path root() { return fs::temp_directory_path() / "mvprune_cli"; }

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::size_t lines(const fs::path& p) {
  const std::string s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

Result run(const std::string& args) {
  const char* exe = std::getenv("MVPRUNE_CLI");
  if (exe == nullptr) throw std::runtime_error("MVPRUNE_CLI is not set");
  const fs::path o = root() / "stdout.txt", e = root() / "stderr.txt";
  const std::string cmd = std::string("\"") + exe + "\" " + args + " >\"" + o.string() + "\" 2>\"" + e.string() + "\"";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(o);
  r.err = slurp(e);
  return r;
}

// Corpus and config shared by the tests; created once.
class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    fs::remove_all(root());
    fs::create_directories(root());
    const Result r = run("synth --graphs 40 --nodes 10 --anomaly 0.2 --seed 3 --out \"" + data().string() + "\"");
    ASSERT_EQ(r.code, 0) << r.err;
    std::ofstream cfg(config());
    cfg << "# small run\ndataset = synth\nepochs = 4\npretrain_epochs = 1\nlearning_rate = 0.005\nviews = 2\n"
           "latent_width = 8\npool_hidden = 8\nhead_hidden = 8\nseeds = 0,1\nbackend = attention-topk\n";
  }
  static fs::path data() { return root() / "synth"; }
  static fs::path config() { return root() / "run.cfg"; }
  static std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }
};

}  // namespace

TEST_F(Cli, SynthWritesCorpusAndGroundTruth) {
  for (const char* f : {"SYNTH_A.txt", "SYNTH_graph_indicator.txt", "SYNTH_graph_labels.txt", "SYNTH_node_labels.txt",
                        "SYNTH_node_attributes.txt", "SYNTH_node_anomaly.txt"})
    EXPECT_TRUE(fs::exists(data() / f)) << f;
  EXPECT_EQ(lines(data() / "SYNTH_graph_labels.txt"), 40u);
  EXPECT_EQ(lines(data() / "SYNTH_node_anomaly.txt"), 400u);
}

TEST_F(Cli, RefusesToOverwriteWithoutForce) {
  const fs::path d = root() / "synth-again";
  ASSERT_EQ(run("synth --graphs 12 --nodes 6 --out " + q(d)).code, 0);
  const Result r = run("synth --graphs 12 --nodes 6 --out " + q(d));
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find("--force"), std::string::npos);
  EXPECT_EQ(run("synth --graphs 12 --nodes 6 --force --out " + q(d)).code, 0);
}

TEST_F(Cli, TrainIsDeterministicAndReproducibleFromManifest) {
  const fs::path a = root() / "run-a", b = root() / "run-b", c = root() / "run-c";
  const Result ra = run("train --config " + q(config()) + " --out " + q(a));
  ASSERT_EQ(ra.code, 0) << ra.err;
  EXPECT_NE(ra.out.find("accuracy="), std::string::npos);
  for (const char* f : {"manifest.json", "report.json", "metrics.csv", "models/seed-0.json", "models/seed-1.json"})
    EXPECT_TRUE(fs::exists(a / f)) << f;
  EXPECT_EQ(lines(a / "metrics.csv"), 3u);
  ASSERT_EQ(run("train --config " + q(config()) + " --out " + q(b)).code, 0);
  EXPECT_EQ(slurp(a / "metrics.csv"), slurp(b / "metrics.csv"));
  ASSERT_EQ(run("train --from-manifest " + q(a) + " --out " + q(c)).code, 0);
  for (const char* f : {"manifest.json", "report.json", "metrics.csv", "models/seed-1.json"})
    EXPECT_EQ(slurp(a / f), slurp(c / f)) << f;
  EXPECT_EQ(run("train --config " + q(config()) + " --out " + q(a)).code, 4);
}

TEST_F(Cli, FlagsOverrideConfigFile) {
  const fs::path d = root() / "run-flags";
  ASSERT_EQ(run("train --config " + q(config()) + " --backend mean --seed 5 --epochs 2 --out " + q(d)).code, 0);
  const std::string manifest = slurp(d / "manifest.json");
  EXPECT_NE(manifest.find("backend = mean"), std::string::npos);
  EXPECT_NE(manifest.find("seeds = 5\\n"), std::string::npos);
  EXPECT_NE(manifest.find("epochs = 2\\n"), std::string::npos);
  EXPECT_NE(manifest.find("views = 2\\n"), std::string::npos);  // from the file
}

TEST_F(Cli, ConfigErrorsExitTwoAndNameTheProblem) {
  Result r = run("train --dataset " + q(data()) + " --backend diffpool --out " + q(root() / "bad1"));
  EXPECT_EQ(r.code, 2);
  for (const char* kind : {"mean", "sum", "gcn-mean", "gcn-sum", "attention-topk", "feature-topk", "mincut"})
    EXPECT_NE(r.err.find(kind), std::string::npos) << kind;
  r = run("train --dataset " + q(data()) + " --set colour=red --out " + q(root() / "bad2"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("colour"), std::string::npos);
  r = run("train --dataset " + q(data()) + " --lambda 3 --out " + q(root() / "bad3"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("lambda"), std::string::npos);
  EXPECT_EQ(run("train --nonsense").code, 2);
  EXPECT_EQ(run("").code, 2);
}

TEST_F(Cli, MissingInputsExitThreeAndNameThePath) {
  Result r = run("train --dataset " + q(root() / "nowhere") + " --out " + q(root() / "bad4"));
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("nowhere"), std::string::npos);
  r = run("export-scores --dataset " + q(data()) + " --run " + q(root() / "no-run"));
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("no-run"), std::string::npos);
}

TEST_F(Cli, AnalyzeAndExportScores) {
  const fs::path d = root() / "run-analyze";
  ASSERT_EQ(run("train --config " + q(config()) + " --out " + q(d)).code, 0);
  Result r = run("analyze centrality --dataset " + q(data()) + " --run " + q(d));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(d / "centrality.csv"), 401u);  // header + one row per node
  const std::string head = slurp(d / "centrality.csv").substr(0, 120);
  EXPECT_NE(head.find("mvp_kept"), std::string::npos) << head;
  EXPECT_NE(head.find("mvp+attention_kept"), std::string::npos) << head;
  EXPECT_NE(head.find("degree<3_kept"), std::string::npos) << head;
  EXPECT_EQ(run("analyze centrality --dataset " + q(data()) + " --run " + q(d)).code, 4);

  r = run("analyze degree --dataset " + q(data()) + " --run " + q(d));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(d / "degree_profile.csv").rfind("policy,degree,nodes,pruned,pruned_fraction\n", 0), 0u);

  r = run("export-scores --dataset " + q(data()) + " --run " + q(d) + " --seed 1");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(d / "scores.csv"), 401u);
  EXPECT_EQ(slurp(d / "scores.csv").rfind("graph_id,node_id,degree,score,kept\n", 0), 0u);
}

TEST_F(Cli, ExportScoresNeedsMvpRun) {
  const fs::path d = root() / "run-nomvp";
  ASSERT_EQ(run("train --config " + q(config()) + " --mvp false --epochs 1 --out " + q(d)).code, 0);
  const Result r = run("export-scores --dataset " + q(data()) + " --run " + q(d));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("use_mvp"), std::string::npos);
}

TEST_F(Cli, SweepWritesOneRowPerMultiplier) {
  const fs::path d = root() / "sweep";
  const Result r = run("sweep --config " + q(config()) + " --epochs 2 --seeds 0 --mode reevaluate --multipliers 0.5,1,2,3 --out " + q(d));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(d / "sweep.csv"), 5u);
  EXPECT_EQ(run("sweep --config " + q(config()) + " --mode sideways --out " + q(root() / "sweep2")).code, 2);
}

TEST_F(Cli, VersionFlag) {
  const Result r = run("--version");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("mvprune"), std::string::npos);
}
