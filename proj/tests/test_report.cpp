#include <filesystem>
#include <fstream>

#include "helpers.hpp"

using namespace mvtest;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mvprune_report_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Dataset corpus() {
  SynthConfig sc;
  sc.graphs = 30;
  sc.nodes = 10;
  sc.attributes = 9;
  return synth_planted_anomalies(sc).dataset;
}

TrainConfig config() {
  TrainConfig c;
  c.epochs = 4;
  c.pretrain_epochs = 1;
  c.learning_rate = 5e-3;
  c.views = 3;
  c.latent_width = 9;
  c.pool.hidden = 8;
  c.head_hidden = 8;
  c.seeds = {2, 5};
  return c;
}

}  // namespace

TEST(FormatReal, RoundTripsExactly) {
  std::mt19937_64 rng(61);
  std::normal_distribution<double> n(0.0, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double x = n(rng);
    EXPECT_EQ(std::stod(format_real(x)), x);
  }
  EXPECT_EQ(format_real(0.5), "0.5");
  EXPECT_EQ(format_real(0.0), "0");
}

TEST(Run, WriteThenRestoreReproducesPredictions) {
  const Dataset ds = corpus();
  TrialOutcome out = run_trials(config(), ds);
  ASSERT_EQ(out.results.size(), 2u);
  const fs::path dir = scratch("restore");
  const RunManifest written = write_run(dir, out, "/data/SYNTH");
  for (const char* f : {"manifest.json", "report.json", "metrics.csv", "models/seed-2.json", "models/seed-5.json"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;

  const RunManifest m = load_manifest(dir);
  EXPECT_EQ(m.tool_version, kToolVersion);
  EXPECT_EQ(m.config_text, written.config_text);
  EXPECT_EQ(render_config(m.config), render_config(config()));
  EXPECT_EQ(m.dataset_fingerprint, fingerprint(ds));
  EXPECT_EQ(m.dataset_path, "/data/SYNTH");
  EXPECT_EQ(m.seeds, (std::vector<std::uint64_t>{2, 5}));
  ASSERT_EQ(m.partitions.size(), 2u);
  EXPECT_EQ(m.partitions[1].columns, out.results[1].model.partition.columns);

  for (std::size_t k = 0; k < 2; ++k) {
    TrainResult& r = out.results[k];
    RestoredSeed back = restore_seed(dir, m, ds, r.seed);
    EXPECT_EQ(back.split.test, r.split.test);
    EXPECT_TRUE(back.data == r.data);
    const auto a = back.model.parameters(), b = r.model.parameters();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i]->value, b[i]->value) << a[i]->name;
    EXPECT_EQ(accuracy(back.model, back.data, back.split.test, true), r.test_accuracy);
  }
}

TEST(Run, ReportAndMetricsAgree) {
  const Dataset ds = corpus();
  TrialOutcome out = run_trials(config(), ds);
  const json j = to_json(out.report);
  EXPECT_EQ(j.at("schema_version"), kSchemaVersion);
  EXPECT_EQ(j.at("seeds").size(), 2u);
  EXPECT_EQ(j.at("seeds")[0].at("trace").size(), 4u);
  EXPECT_EQ(j.at("mean_accuracy").get<double>(), out.report.mean_accuracy);
  const std::string csv = metrics_csv(out.report);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_EQ(csv.rfind("seed,train_size,val_size,test_size,best_epoch,", 0), 0u);
  EXPECT_NE(csv.find("\n2,"), std::string::npos);
  EXPECT_EQ(metrics_csv(run_trials(config(), ds).report), csv);
}

TEST(Run, RestoreRejectsAnotherDataset) {
  const Dataset ds = corpus();
  TrialOutcome out = run_trials(config(), ds);
  const fs::path dir = scratch("fingerprint");
  const RunManifest m = write_run(dir, out, "x");
  Dataset other = ds;
  other.graphs[0].features(0, 0) += 1.0;
  EXPECT_THROW(restore_seed(dir, m, other, 2), FormatError);
}

TEST(Model, LoadRejectsMismatches) {
  const Dataset ds = corpus();
  const TrainConfig c = config();
  MvpModel m = MvpModel::create(c, ds, {0, 1, 2}, 1);
  json j = model_to_json(m, 1);
  MvpModel copy = MvpModel::create(c, ds, {0, 1, 2}, 9);
  load_model_parameters(copy, j);
  const auto a = m.parameters(), b = copy.parameters();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i]->value, b[i]->value);

  json missing = j;
  missing["parameters"].erase("head.w1");
  EXPECT_THROW(load_model_parameters(copy, missing), FormatError);
  json shape = j;
  shape["parameters"]["head.b1"]["cols"] = 1;
  EXPECT_THROW(load_model_parameters(copy, shape), FormatError);
  TrainConfig wider = c;
  wider.head_hidden = 9;
  MvpModel other = MvpModel::create(wider, ds, {0, 1, 2}, 1);
  EXPECT_THROW(load_model_parameters(other, j), FormatError);
}

TEST(Manifest, MalformedInputs) {
  const fs::path dir = scratch("manifest");
  EXPECT_THROW(load_manifest(dir), LoadError);
  {
    std::ofstream f(dir / "manifest.json");
    f << "{ not json";
  }
  EXPECT_THROW(load_manifest(dir), FormatError);
  {
    std::ofstream f(dir / "manifest.json");
    f << R"({"tool_version": "x"})";
  }
  EXPECT_THROW(load_manifest(dir), FormatError);
}
