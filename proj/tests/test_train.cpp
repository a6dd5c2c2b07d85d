#include "helpers.hpp"

using namespace mvtest;

namespace {

Dataset small_corpus(std::size_t graphs = 40) {
  SynthConfig sc;
  sc.graphs = graphs;
  sc.nodes = 10;
  sc.attributes = 9;
  return synth_planted_anomalies(sc).dataset;
}

TrainConfig small_config() {
  TrainConfig c;
  c.epochs = 6;
  c.pretrain_epochs = 2;
  c.learning_rate = 5e-3;
  c.views = 2;
  c.latent_width = 8;
  c.pool.hidden = 8;
  c.head_hidden = 8;
  c.seeds = {0};
  return c;
}

std::vector<Tensor> grads_of(MvpModel& m, const std::function<Var(MvpModel::Pass&)>& pick, const Graph& g) {
  for (Parameter* p : m.parameters()) p->zero_grad();
  Tape t;
  MvpModel::Pass pass = m.forward(t, g, true);
  t.backward(pick(pass));
  std::vector<Tensor> out;
  for (Parameter* p : m.parameters()) out.push_back(p->grad);
  return out;
}

}  // namespace

TEST(Config, ParsesKeyValueText) {
  TrainConfig c;
  apply_config_text(c, "# comment\nepochs = 12\nbackend = mincut  # trailing\nseeds = 0-3, 7\nuse_mvp = false\n"
                       "overlap_ratio = auto\nclusters = 5\nmodel_selection = last\n");
  EXPECT_EQ(c.epochs, 12u);
  EXPECT_EQ(c.pool.kind, PoolKind::MinCut);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{0, 1, 2, 3, 7}));
  EXPECT_FALSE(c.use_mvp);
  EXPECT_LT(c.overlap_ratio, 0.0);
  EXPECT_EQ(c.pool.clusters, 5u);
  EXPECT_TRUE(c.select_last);
}

TEST(Config, RenderRoundTrips) {
  TrainConfig c;
  apply_config_text(c, "learning_rate = 0.0013\nlambda = 0.3\nseeds = 4,9\nview_groups = g.txt\nfeature_norm = minmax\n"
                       "use_lpool = false\nthreshold = 1.7\n");
  TrainConfig back;
  apply_config_text(back, render_config(c));
  EXPECT_EQ(render_config(back), render_config(c));
  EXPECT_EQ(back.learning_rate, 0.0013);
  EXPECT_EQ(back.view_groups, "g.txt");
  EXPECT_FALSE(back.losses.pooling);
}

TEST(Config, ErrorsNameTheKey) {
  auto key_of = [](const std::string& text) {
    TrainConfig c;
    try {
      apply_config_text(c, text);
      c.validate();
    } catch (const ConfigError& e) {
      return e.key();
    }
    return std::string("<none>");
  };
  EXPECT_EQ(key_of("colour = red\n"), "colour");
  EXPECT_EQ(key_of("epochs = -3\n"), "epochs");
  EXPECT_EQ(key_of("learning_rate = fast\n"), "learning_rate");
  EXPECT_EQ(key_of("use_mvp = maybe\n"), "use_mvp");
  EXPECT_EQ(key_of("seeds = 5-2\n"), "seeds");
  EXPECT_EQ(key_of("lambda = 1.5\n"), "lambda");
  EXPECT_EQ(key_of("keep_ratio = 0\n"), "keep_ratio");
  EXPECT_EQ(key_of("model_selection = best\n"), "model_selection");
  EXPECT_EQ(key_of("backend = gmt\n"), "backend");
  EXPECT_EQ(key_of("epochs 3\n"), "");
}

TEST(Phases, PretrainEpochsCountWithinTotal) {
  TrainConfig c = small_config();
  c.pretrain_epochs = 2;
  EXPECT_FALSE(mvp_active_at(c, 0));
  EXPECT_FALSE(mvp_active_at(c, 1));
  EXPECT_TRUE(mvp_active_at(c, 2));
  c.use_mvp = false;
  EXPECT_FALSE(mvp_active_at(c, 5));
  EXPECT_FALSE(mvp_at_evaluation(c));
}

TEST(Loss, CombinedLossIsTheSumOfItsTerms) {
  const Dataset ds = small_corpus();
  TrainConfig c = small_config();
  c.pool.kind = PoolKind::MinCut;
  const std::vector<std::size_t> train = {0, 1, 2, 3};
  MvpModel m = MvpModel::create(c, ds, train, 3);
  for (const Graph& g : ds.graphs) {
    for (int mask = 0; mask < 4; ++mask) {
      LossToggles tg{(mask & 1) != 0, (mask & 2) != 0};
      Tape t;
      MvpModel::Pass p = m.forward(t, g, true, tg);
      double expect = p.cross_entropy.value().item();
      if (tg.reconstruction) expect += p.recon->adjacency.value().item() + p.recon->features.value().item();
      if (tg.pooling) expect += p.pool_loss.value().item();
      EXPECT_NEAR(p.total.value().item(), expect, 1e-12);
    }
  }
}

TEST(Loss, ToggledTermsRemoveTheirGradient) {
  const Dataset ds = small_corpus(12);
  TrainConfig c = small_config();
  c.pool.kind = PoolKind::MinCut;
  MvpModel m = MvpModel::create(c, ds, {0, 1, 2}, 5);
  const Graph& g = ds.graphs[4];
  const auto full = grads_of(m, [](MvpModel::Pass& p) { return p.total; }, g);
  const auto no_recon = grads_of(
      m, [](MvpModel::Pass& p) { return MvpModel::combined_loss(p, {false, true}); }, g);
  const auto recon = grads_of(m, [](MvpModel::Pass& p) { return p.recon->total; }, g);
  const auto no_pool = grads_of(
      m, [](MvpModel::Pass& p) { return MvpModel::combined_loss(p, {true, false}); }, g);
  const auto pool = grads_of(m, [](MvpModel::Pass& p) { return p.pool_loss; }, g);
  for (std::size_t k = 0; k < full.size(); ++k)
    for (std::size_t i = 0; i < full[k].size(); ++i) {
      EXPECT_NEAR(full[k][i] - no_recon[k][i], recon[k][i], 1e-10);
      EXPECT_NEAR(full[k][i] - no_pool[k][i], pool[k][i], 1e-10);
    }
}

TEST(Phases, PretrainLeavesMvpParametersUntouched) {
  const Dataset ds = small_corpus();
  TrainConfig c = small_config();
  c.epochs = 3;
  c.pretrain_epochs = 3;
  const SplitSpec s = split(ds, 0);
  const TrainResult r = train_one(c, ds, s, 0);
  MvpModel fresh = MvpModel::create(c, r.data, s.train, 0);
  MvpModel trained = r.model;
  const auto a = fresh.mvp_parameters(), b = trained.mvp_parameters();
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k]->value, b[k]->value) << a[k]->name;
  const auto da = fresh.downstream_parameters(), db = trained.downstream_parameters();
  bool moved = false;
  for (std::size_t k = 0; k < da.size(); ++k) moved = moved || !(da[k]->value == db[k]->value);
  EXPECT_TRUE(moved);
}

TEST(Training, ZeroEpochsKeepsInitialModel) {
  const Dataset ds = small_corpus();
  TrainConfig c = small_config();
  c.epochs = 0;
  const TrainResult r = train_one(c, ds, split(ds, 1), 1);
  EXPECT_TRUE(r.trace.empty());
  EXPECT_FALSE(r.best_epoch.has_value());
  EXPECT_EQ(r.pruning.pruned, 0u);  // MVP never reached phase 2
  EXPECT_GE(r.test_accuracy, 0.0);
  EXPECT_LE(r.test_accuracy, 1.0);
}

TEST(Training, DeterministicPerSeed) {
  const Dataset ds = small_corpus();
  const TrainConfig c = small_config();
  const TrainResult a = train_one(c, ds, split(ds, 2), 2);
  const TrainResult b = train_one(c, ds, split(ds, 2), 2);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t e = 0; e < a.trace.size(); ++e) EXPECT_EQ(a.trace[e].loss, b.trace[e].loss);
  EXPECT_EQ(a.test_accuracy, b.test_accuracy);
  EXPECT_EQ(a.best_epoch, b.best_epoch);
}

TEST(Training, LossDecreasesWithoutPretraining) {
  const Dataset ds = small_corpus();
  TrainConfig c = small_config();
  c.pretrain_epochs = 0;
  c.epochs = 15;
  const TrainResult r = train_one(c, ds, split(ds, 0), 0);
  ASSERT_EQ(r.trace.size(), 15u);
  EXPECT_LT(r.trace.back().loss, r.trace.front().loss);
  EXPECT_LT(r.trace.back().feature_loss, r.trace.front().feature_loss);
}

TEST(Selection, PicksBestEligibleEpochOrLast) {
  const Dataset ds = small_corpus();
  TrainConfig c = small_config();
  const TrainResult r = train_one(c, ds, split(ds, 0), 0);
  ASSERT_TRUE(r.best_epoch.has_value());
  EXPECT_GE(*r.best_epoch, c.pretrain_epochs);
  double best = -1.0;
  std::size_t at = 0;
  for (const EpochTrace& t : r.trace)
    if (t.epoch >= c.pretrain_epochs && t.val_accuracy > best) {
      best = t.val_accuracy;
      at = t.epoch;
    }
  EXPECT_EQ(*r.best_epoch, at);

  c.select_last = true;
  const TrainResult last = train_one(c, ds, split(ds, 0), 0);
  EXPECT_EQ(last.best_epoch, c.epochs - 1);
}

TEST(Optimizer, AdamMatchesHandComputedSteps) {
  Parameter p("p", Tensor::from_rows({{1.0, -2.0}}));
  Adam opt(0.1, 0.9, 0.999, 1e-8);
  const double g1[2] = {0.5, -1.0}, g2[2] = {0.2, 0.4};
  double m[2] = {0, 0}, v[2] = {0, 0}, x[2] = {1.0, -2.0};
  for (int t = 1; t <= 2; ++t) {
    const double* g = t == 1 ? g1 : g2;
    for (int i = 0; i < 2; ++i) {
      p.grad[i] = 2.0 * g[i];  // grad_scale 0.5 below
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(0.9, t)), vh = v[i] / (1 - std::pow(0.999, t));
      x[i] -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    }
    opt.step({&p}, 0.5);
    for (int i = 0; i < 2; ++i) EXPECT_NEAR(p.value[i], x[i], 1e-14);
  }
}

TEST(Trials, SingleSeedHasZeroSpread) {
  const Dataset ds = small_corpus();
  const TrialOutcome o = run_trials(small_config(), ds);
  ASSERT_EQ(o.report.seeds.size(), 1u);
  EXPECT_EQ(o.report.std_accuracy, 0.0);
  EXPECT_EQ(o.report.mean_accuracy, o.report.seeds[0].test_accuracy);
  EXPECT_EQ(o.report.dataset_fingerprint, fingerprint(ds));
}

TEST(Trials, ParallelMatchesSequentialAndAggregates) {
  const Dataset ds = small_corpus();
  TrainConfig c = small_config();
  c.epochs = 3;
  c.seeds = {4, 1, 3};
  const TrialOutcome a = run_trials(c, ds, 1), b = run_trials(c, ds, 3);
  ASSERT_EQ(a.report.seeds.size(), 3u);
  double mu = 0.0, var = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.report.seeds[i].seed, c.seeds[i]);
    EXPECT_EQ(a.report.seeds[i].test_accuracy, b.report.seeds[i].test_accuracy);
    mu += a.report.seeds[i].test_accuracy / 3.0;
  }
  for (const auto& s : a.report.seeds) var += (s.test_accuracy - mu) * (s.test_accuracy - mu) / 3.0;
  EXPECT_NEAR(a.report.mean_accuracy, mu, 1e-12);
  EXPECT_NEAR(a.report.std_accuracy, std::sqrt(var), 1e-12);
}

TEST(Trials, FailuresAreCollectedPerSeed) {
  const Dataset ds = small_corpus();
  TrainConfig c = small_config();
  c.learning_rate = 1e300;  // parameters blow up and the loss turns non-finite
  c.seeds = {0, 1};
  const TrialOutcome o = run_trials(c, ds);
  EXPECT_TRUE(o.report.seeds.empty());
  ASSERT_EQ(o.report.failures.size(), 2u);
  EXPECT_EQ(o.report.failures[1].seed, 1u);
  EXPECT_NE(o.report.failures[0].message.find("non-finite"), std::string::npos) << o.report.failures[0].message;
}

TEST(Trials, TinyDatasetFailsEverySeed) {
  std::mt19937_64 rng(1);
  const Dataset ds = random_dataset(8, 2, 3, rng);
  const TrialOutcome o = run_trials(small_config(), ds);
  ASSERT_EQ(o.report.failures.size(), 1u);
  EXPECT_EQ(o.report.mean_accuracy, 0.0);
}
