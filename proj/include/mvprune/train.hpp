#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "mvprune/config.hpp"
#include "mvprune/error.hpp"
#include "mvprune/model.hpp"
#include "mvprune/optim.hpp"
#include "mvprune/rng.hpp"
#include "mvprune/split.hpp"

namespace mvprune {

struct EpochTrace {
  std::size_t epoch = 0;
  bool mvp_active = false;
  double loss = 0.0;  // mean combined objective over training graphs
  double cross_entropy = 0.0;
  double adjacency_loss = 0.0;
  double feature_loss = 0.0;
  double pool_loss = 0.0;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
};

struct PruningStats {
  std::size_t nodes = 0;
  std::size_t pruned = 0;
  double pruned_fraction = 0.0;
  double mean_degree_pruned = 0.0;
  double mean_degree_kept = 0.0;
  std::map<std::size_t, std::size_t> pruned_degree_histogram;
};

struct TrainResult {
  std::uint64_t seed = 0;
  MvpModel model;        // parameters of the selected epoch
  FeatureScaler scaler;  // fitted on the training split
  Dataset data;          // dataset after feature scaling
  SplitSpec split;
  std::vector<EpochTrace> trace;
  std::optional<std::size_t> best_epoch;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  PruningStats pruning;
};

/// Whether the MVP stage runs during `epoch` (0-based). The first
/// pretrain_epochs epochs train only the pooling backend and classifier.
inline bool mvp_active_at(const TrainConfig& cfg, std::size_t epoch) {
  return cfg.use_mvp && epoch >= cfg.pretrain_epochs;
}

/// MVP is evaluated whenever the configuration enables it; a run that never
/// reaches phase 2 is evaluated without it.
inline bool mvp_at_evaluation(const TrainConfig& cfg) { return cfg.use_mvp && cfg.epochs > cfg.pretrain_epochs; }

inline double accuracy(MvpModel& model, const Dataset& data, const std::vector<std::size_t>& idx, bool mvp) {
  if (idx.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t g : idx) hit += model.predict(data.graphs[g], mvp) == data.graphs[g].label ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(idx.size());
}

/// Indicator-based pruning statistics of `model` over all graphs of `data`.
inline PruningStats pruning_stats(MvpModel& model, const Dataset& data, bool mvp) {
  PruningStats s;
  double deg_pruned = 0.0, deg_kept = 0.0;
  for (const Graph& g : data.graphs) {
    std::vector<double> keep(g.node_count(), 1.0);
    if (mvp) {
      Tape t;
      keep = model.forward(t, g, true).indicator.keep;
    }
    const auto deg = g.degrees();
    for (std::size_t i = 0; i < keep.size(); ++i) {
      ++s.nodes;
      if (keep[i] == 0.0) {
        ++s.pruned;
        deg_pruned += static_cast<double>(deg[i]);
        ++s.pruned_degree_histogram[deg[i]];
      } else {
        deg_kept += static_cast<double>(deg[i]);
      }
    }
  }
  if (s.nodes > 0) s.pruned_fraction = static_cast<double>(s.pruned) / static_cast<double>(s.nodes);
  if (s.pruned > 0) s.mean_degree_pruned = deg_pruned / static_cast<double>(s.pruned);
  if (s.nodes > s.pruned) s.mean_degree_kept = deg_kept / static_cast<double>(s.nodes - s.pruned);
  return s;
}

/// Two-phase Adam training with per-graph gradient accumulation and model
/// selection on validation accuracy (ties keep the earlier epoch).
inline TrainResult train_one(const TrainConfig& cfg, const Dataset& raw, const SplitSpec& split, std::uint64_t seed) {
  cfg.validate();
  for (const auto* part : {&split.train, &split.val, &split.test})
    for (std::size_t g : *part)
      if (g >= raw.graphs.size()) throw SplitError("train_one: split index outside dataset");
  if (split.train.empty()) throw SplitError("train_one: empty training split");

  TrainResult r;
  r.seed = seed;
  r.split = split;
  r.scaler = FeatureScaler::fit(raw, split.train, cfg.feature_norm);
  r.data = r.scaler.apply(raw);
  MvpModel model = MvpModel::create(cfg, r.data, split.train, seed);
  Adam opt(cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  Rng order_rng = stream(seed, "batch-order");
  auto all_params = model.parameters();
  auto downstream = model.downstream_parameters();
  std::vector<std::size_t> order = split.train;

  const bool eval_mvp = mvp_at_evaluation(cfg);
  double best_val = -1.0;
  MvpModel best = model;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const bool mvp = mvp_active_at(cfg, epoch);
    const auto& active = mvp ? all_params : downstream;
    std::shuffle(order.begin(), order.end(), order_rng);
    EpochTrace tr;
    tr.epoch = epoch;
    tr.mvp_active = mvp;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      for (Parameter* p : all_params) p->zero_grad();
      for (std::size_t b = start; b < stop; ++b) {
        const Graph& g = r.data.graphs[order[b]];
        Tape tape;
        MvpModel::Pass pass = model.forward(tape, g, mvp, cfg.losses);
        const double loss = pass.total.value().item();
        if (!std::isfinite(loss)) {
          throw DivergenceError("seed " + std::to_string(seed) + " epoch " + std::to_string(epoch) + ": non-finite loss on graph " +
                                std::to_string(order[b]));
        }
        tape.backward(pass.total);
        tr.loss += loss;
        tr.cross_entropy += pass.cross_entropy.value().item();
        if (pass.recon) {
          tr.adjacency_loss += pass.recon->adjacency.value().item();
          tr.feature_loss += pass.recon->features.value().item();
        }
        tr.pool_loss += pass.pool_loss.value().item();
        const Tensor& z = pass.logits.value();
        std::size_t arg = 0;
        for (std::size_t j = 1; j < z.cols(); ++j)
          if (z[j] > z[arg]) arg = j;
        correct += arg == g.label ? 1 : 0;
      }
      opt.step(active, 1.0 / static_cast<double>(stop - start));
    }
    const double m = static_cast<double>(order.size());
    tr.loss /= m;
    tr.cross_entropy /= m;
    tr.adjacency_loss /= m;
    tr.feature_loss /= m;
    tr.pool_loss /= m;
    tr.train_accuracy = static_cast<double>(correct) / m;
    tr.val_accuracy = accuracy(model, r.data, split.val, mvp);
    r.trace.push_back(tr);

    const bool eligible = !eval_mvp || mvp;
    if (eligible && (tr.val_accuracy > best_val || cfg.select_last)) {
      best_val = tr.val_accuracy;
      best = model;
      r.best_epoch = epoch;
    }
  }
  r.model = r.best_epoch ? best : model;
  r.val_accuracy = accuracy(r.model, r.data, split.val, eval_mvp);
  r.test_accuracy = accuracy(r.model, r.data, split.test, eval_mvp);
  r.pruning = pruning_stats(r.model, r.data, eval_mvp);
  return r;
}

struct SeedSummary {
  std::uint64_t seed = 0;
  std::size_t train_size = 0, val_size = 0, test_size = 0;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::optional<std::size_t> best_epoch;
  std::vector<EpochTrace> trace;
  PruningStats pruning;
  ViewPartition partition;
};

struct TrialFailure {
  std::uint64_t seed = 0;
  std::string message;
};

struct TrialReport {
  TrainConfig config;
  std::string dataset_name;
  std::string dataset_fingerprint;
  std::vector<SeedSummary> seeds;  // successful seeds, in config order
  std::vector<TrialFailure> failures;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // population std over successful seeds
};

struct TrialOutcome {
  TrialReport report;
  std::vector<TrainResult> results;  // parallel to report.seeds
};

inline SeedSummary summarize(const TrainResult& r) {
  SeedSummary s;
  s.seed = r.seed;
  s.train_size = r.split.train.size();
  s.val_size = r.split.val.size();
  s.test_size = r.split.test.size();
  s.val_accuracy = r.val_accuracy;
  s.test_accuracy = r.test_accuracy;
  s.best_epoch = r.best_epoch;
  s.trace = r.trace;
  s.pruning = r.pruning;
  s.partition = r.model.partition;
  return s;
}

/// One split and one training per seed; up to `jobs` seeds run concurrently.
/// Results are aggregated in seed order regardless of completion order.
inline TrialOutcome run_trials(const TrainConfig& cfg, const Dataset& ds, std::size_t jobs = 1) {
  cfg.validate();
  const std::size_t n = cfg.seeds.size();
  std::vector<std::optional<TrainResult>> slots(n);
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      const std::uint64_t seed = cfg.seeds[i];
      try {
        slots[i] = train_one(cfg, ds, split(ds, seed), seed);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  TrialOutcome out;
  out.report.config = cfg;
  out.report.dataset_name = ds.name;
  out.report.dataset_fingerprint = fingerprint(ds);
  for (std::size_t i = 0; i < n; ++i) {
    if (slots[i]) {
      out.report.seeds.push_back(summarize(*slots[i]));
      out.results.push_back(std::move(*slots[i]));
    } else {
      out.report.failures.push_back({cfg.seeds[i], errors[i]});
    }
  }
  const auto& s = out.report.seeds;
  if (!s.empty()) {
    double mu = 0.0;
    for (const auto& x : s) mu += x.test_accuracy;
    mu /= static_cast<double>(s.size());
    double var = 0.0;
    for (const auto& x : s) var += (x.test_accuracy - mu) * (x.test_accuracy - mu);
    out.report.mean_accuracy = mu;
    out.report.std_accuracy = std::sqrt(var / static_cast<double>(s.size()));
  }
  return out;
}

}  // namespace mvprune
