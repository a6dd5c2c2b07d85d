#include <filesystem>
#include <fstream>
#include <set>

#include "helpers.hpp"

using namespace mvtest;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mvprune_graph_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void put(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

// Two graphs: a triangle (nodes 1-3, with a duplicate edge and a self-loop) and
// a single edge (nodes 4-5). Graph labels -1 / 1, node labels 7 and 3.
fs::path tiny_dataset(const std::string& tag) {
  const fs::path d = scratch(tag);
  put(d / "T_A.txt", "1, 2\n2, 1\n2, 3\n3, 1\n1, 2\n3, 3\n4, 5\n");
  put(d / "T_graph_indicator.txt", "1\n1\n1\n2\n2\n");
  put(d / "T_graph_labels.txt", "1\n-1\n");
  put(d / "T_node_labels.txt", "7\n3\n7\n3\n3\n");
  put(d / "T_node_attributes.txt", "0.5, 1\n1.5, 2\n2.5, 3\n-1, 0\n1e-3, 4\n");
  return d;
}

}  // namespace

TEST(TuFormat, LoadsAndNormalizes) {
  const Dataset ds = tu::load(tiny_dataset("load"), "T");
  ASSERT_EQ(ds.graphs.size(), 2u);
  EXPECT_EQ(ds.class_count, 2u);
  EXPECT_EQ(ds.node_label_count, 2u);
  EXPECT_EQ(ds.attribute_count, 2u);
  EXPECT_EQ(ds.feature_dim, 4u);
  const Graph& g0 = ds.graphs[0];
  EXPECT_EQ(g0.label, 1u);  // 1 sorts after -1
  EXPECT_EQ(ds.graphs[1].label, 0u);
  EXPECT_EQ(g0.edge_count(), 3u);
  EXPECT_NO_THROW(g0.validate());
  EXPECT_EQ(g0.adjacency(2, 2), 0.0);
  // node label 7 → column 1, 3 → column 0
  EXPECT_EQ(g0.features(0, 1), 1.0);
  EXPECT_EQ(g0.features(1, 0), 1.0);
  EXPECT_EQ(g0.features(2, 3), 3.0);
  EXPECT_EQ(ds.graphs[1].features(1, 2), 1e-3);
}

TEST(TuFormat, MissingFileIsNamed) {
  const fs::path d = tiny_dataset("missing");
  fs::remove(d / "T_graph_labels.txt");
  try {
    tu::load(d, "T");
    FAIL() << "expected LoadError";
  } catch (const LoadError& e) {
    EXPECT_NE(std::string(e.what()).find("T_graph_labels.txt"), std::string::npos);
  }
  fs::remove(d / "T_node_labels.txt");
  fs::remove(d / "T_node_attributes.txt");
  put(d / "T_graph_labels.txt", "1\n-1\n");
  EXPECT_THROW(tu::load(d, "T"), LoadError);
}

TEST(TuFormat, CrossGraphEdgeReportsFileAndLine) {
  const fs::path d = tiny_dataset("cross");
  put(d / "T_A.txt", "1, 2\n3, 4\n");
  try {
    tu::load(d, "T");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("T_A.txt:2"), std::string::npos) << e.what();
  }
}

TEST(TuFormat, MalformedLinesAreRejected) {
  const fs::path d = tiny_dataset("malformed");
  put(d / "T_A.txt", "1, 2, 3\n");
  EXPECT_THROW(tu::load(d, "T"), FormatError);
  put(d / "T_A.txt", "1, x\n");
  EXPECT_THROW(tu::load(d, "T"), FormatError);
  put(d / "T_A.txt", "1, 9\n");
  EXPECT_THROW(tu::load(d, "T"), FormatError);
}

TEST(TuFormat, RoundTripIsExact) {
  SynthConfig sc;
  sc.graphs = 30;
  const SynthCorpus c = synth_planted_anomalies(sc);
  const fs::path d = scratch("roundtrip");
  tu::write(c.dataset, d, "SYNTH");
  const Dataset back = tu::load(d, "SYNTH");
  EXPECT_TRUE(back == c.dataset);
  EXPECT_EQ(fingerprint(back), fingerprint(c.dataset));
}

TEST(Fingerprint, SensitiveToContent) {
  std::mt19937_64 rng(4);
  Dataset a = random_dataset(12, 2, 3, rng);
  Dataset b = a;
  EXPECT_EQ(fingerprint(a), fingerprint(b));
  b.graphs[3].features(0, 0) += 1e-12;
  EXPECT_NE(fingerprint(a), fingerprint(b));
  EXPECT_EQ(fingerprint(a).size(), 16u);
}

TEST(Split, SizesFollowFlooredShares) {
  const SplitSizes s = split_sizes(1113);
  EXPECT_EQ(s.val, 100u);
  EXPECT_EQ(s.test, 111u);
  EXPECT_EQ(s.train, 902u);
  for (std::size_t n = 12; n < 400; ++n) {
    const SplitSizes z = split_sizes(n);
    EXPECT_EQ(z.train + z.val + z.test, n);
    EXPECT_EQ(z.val, n * 9 / 100);
    EXPECT_EQ(z.test, n / 10);
  }
}

TEST(Split, PartitionsEveryGraphOnceAcrossSeeds) {
  std::mt19937_64 rng(5);
  const Dataset ds = random_dataset(57, 3, 2, rng);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const SplitSpec s = split(ds, seed);
    std::multiset<std::size_t> all(s.train.begin(), s.train.end());
    all.insert(s.val.begin(), s.val.end());
    all.insert(s.test.begin(), s.test.end());
    ASSERT_EQ(all.size(), ds.graphs.size());
    for (std::size_t g = 0; g < ds.graphs.size(); ++g) ASSERT_EQ(all.count(g), 1u) << "seed " << seed;
    const SplitSizes z = split_sizes(ds.graphs.size());
    EXPECT_EQ(s.test.size(), z.test);
    EXPECT_EQ(s.val.size(), z.val);
  }
}

TEST(Split, StratifiesClasses) {
  std::mt19937_64 rng(6);
  Dataset ds = random_dataset(200, 2, 2, rng);
  for (std::size_t g = 0; g < 200; ++g) ds.graphs[g].label = g < 150 ? 0 : 1;  // 75 / 25
  const SplitSpec s = split(ds, 3);
  std::size_t test_minor = 0;
  for (std::size_t g : s.test) test_minor += ds.graphs[g].label;
  EXPECT_NEAR(static_cast<double>(test_minor) / static_cast<double>(s.test.size()), 0.25, 0.051);
}

TEST(Split, DeterministicAndSeedSensitive) {
  std::mt19937_64 rng(7);
  const Dataset ds = random_dataset(40, 2, 2, rng);
  EXPECT_EQ(split(ds, 1).test, split(ds, 1).test);
  EXPECT_NE(split(ds, 1).test, split(ds, 2).test);
}

TEST(Split, RejectsTinyDatasets) {
  std::mt19937_64 rng(8);
  EXPECT_THROW(split(random_dataset(11, 2, 2, rng), 0), SplitError);
}

TEST(Scaler, FitsOnTrainAndLeavesOneHotBlock) {
  std::mt19937_64 rng(9);
  Dataset ds = random_dataset(20, 2, 3, rng);
  ds.node_label_count = 1;
  ds.attribute_count = 2;
  for (Graph& g : ds.graphs)
    for (std::size_t i = 0; i < g.node_count(); ++i) g.features(i, 0) = 1.0;
  const std::vector<std::size_t> train = {0, 1, 2, 3, 4};
  const Dataset out = FeatureScaler::fit(ds, train, FeatureNorm::Standardize).apply(ds);
  double sum = 0.0, sq = 0.0, count = 0.0;
  for (std::size_t g : train)
    for (std::size_t i = 0; i < out.graphs[g].node_count(); ++i) {
      EXPECT_EQ(out.graphs[g].features(i, 0), 1.0);
      const double v = out.graphs[g].features(i, 2);
      sum += v;
      sq += v * v;
      count += 1.0;
    }
  EXPECT_NEAR(sum / count, 0.0, 1e-12);
  EXPECT_NEAR(sq / count, 1.0, 1e-12);

  const Dataset mm = FeatureScaler::fit(ds, train, FeatureNorm::MinMax).apply(ds);
  double lo = 1e9, hi = -1e9;
  for (std::size_t g : train)
    for (std::size_t i = 0; i < mm.graphs[g].node_count(); ++i) {
      lo = std::min(lo, mm.graphs[g].features(i, 1));
      hi = std::max(hi, mm.graphs[g].features(i, 1));
    }
  EXPECT_NEAR(lo, 0.0, 1e-12);
  EXPECT_NEAR(hi, 1.0, 1e-12);
  EXPECT_TRUE(FeatureScaler::fit(ds, train, FeatureNorm::None).apply(ds) == ds);
}

TEST(Synth, ZeroFractionHasNoAnomalies) {
  SynthConfig sc;
  sc.graphs = 10;
  sc.anomaly_fraction = 0.0;
  const SynthCorpus c = synth_planted_anomalies(sc);
  for (const auto& g : c.anomalies) EXPECT_EQ(std::count(g.begin(), g.end(), true), 0);
}

TEST(Synth, RejectsBadFractions) {
  SynthConfig sc;
  sc.anomaly_fraction = 0.5;
  EXPECT_THROW(synth_planted_anomalies(sc), ConfigError);
  sc.anomaly_fraction = -0.1;
  EXPECT_THROW(synth_planted_anomalies(sc), ConfigError);
}

TEST(Synth, PlantsDegreeOneAnomalies) {
  SynthConfig sc;  // 200 graphs, 20 nodes, 15 %
  const SynthCorpus c = synth_planted_anomalies(sc);
  ASSERT_EQ(c.dataset.graphs.size(), 200u);
  std::size_t per_class[2] = {0, 0};
  for (std::size_t g = 0; g < c.dataset.graphs.size(); ++g) {
    const Graph& gr = c.dataset.graphs[g];
    ASSERT_NO_THROW(gr.validate());
    EXPECT_EQ(gr.node_count(), 20u);
    EXPECT_EQ(std::count(c.anomalies[g].begin(), c.anomalies[g].end(), true), 3);
    ++per_class[gr.label];
    const auto adj = gr.neighbors();
    for (std::size_t i = 0; i < 20; ++i) {
      if (!c.anomalies[g][i]) continue;
      EXPECT_EQ(gr.degree(i), 1u);
      for (std::size_t j : adj[i]) EXPECT_FALSE(c.anomalies[g][j]);
    }
  }
  EXPECT_EQ(per_class[0], 100u);
  EXPECT_EQ(per_class[1], 100u);
}

TEST(Synth, DeterministicPerSeed) {
  SynthConfig sc;
  sc.graphs = 20;
  EXPECT_TRUE(synth_planted_anomalies(sc).dataset == synth_planted_anomalies(sc).dataset);
  SynthConfig other = sc;
  other.seed = 8;
  EXPECT_FALSE(synth_planted_anomalies(sc).dataset == synth_planted_anomalies(other).dataset);
}

TEST(Synth, GroundTruthFileRoundTrips) {
  SynthConfig sc;
  sc.graphs = 15;
  const SynthCorpus c = synth_planted_anomalies(sc);
  const fs::path d = scratch("truth");
  write_synth(c, d, "S");
  const Dataset ds = tu::load(d, "S");
  EXPECT_EQ(load_anomaly_labels(d, "S", ds), c.anomalies);
}
