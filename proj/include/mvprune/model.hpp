#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "mvprune/autodiff.hpp"
#include "mvprune/config.hpp"
#include "mvprune/graph.hpp"
#include "mvprune/multiview.hpp"
#include "mvprune/pooling.hpp"
#include "mvprune/prune.hpp"

namespace mvprune {

/// Resolved overlap: explicit ratio, or the < 4 features-per-view rule.
inline double resolve_overlap(const TrainConfig& c, std::size_t d) {
  return c.overlap_ratio >= 0.0 ? c.overlap_ratio : default_overlap(d, c.views);
}

/// ⌈mean training graph size / 4⌉, at least 2.
inline std::size_t resolve_clusters(const TrainConfig& c, const Dataset& ds, const std::vector<std::size_t>& train) {
  if (c.pool.clusters != 0) return c.pool.clusters;
  double total = 0.0;
  for (std::size_t g : train) total += static_cast<double>(ds.graphs[g].node_count());
  const double mean = train.empty() ? ds.mean_node_count() : total / static_cast<double>(train.size());
  return std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(mean / 4.0)));
}

/// Multi-view pruning stage + pooling backend + classifier.
class MvpModel {
 public:
  ViewPartition partition;
  ViewEncoder encoder;
  ReconHead recon;
  PoolBackend backend;
  ClassifierHead head;
  double lambda = 0.5;
  double threshold = 2.0;

  struct Pass {
    Var logits;
    Var cross_entropy;
    std::optional<ReconLosses> recon;  // present when the MVP stage ran
    Var pool_loss;
    Var total;
    bool pruned = false;
    std::vector<double> scores;  // MVP node scores (empty when the stage is off)
    Indicator indicator;         // all-keep when the stage is off
    PoolOutput pool;
  };

  static MvpModel create(const TrainConfig& cfg, const Dataset& ds, const std::vector<std::size_t>& train, std::uint64_t seed) {
    MvpModel m;
    m.lambda = cfg.lambda;
    m.threshold = cfg.threshold;
    const std::size_t d = ds.feature_dim;
    m.partition = cfg.view_groups.empty() ? make_partition(d, cfg.views, resolve_overlap(cfg, d), seed)
                                          : load_view_groups(cfg.view_groups, d);
    Rng rng = stream(seed, "init");
    m.encoder = ViewEncoder::create(m.partition, cfg.latent_width, rng);
    m.recon = ReconHead::create(m.encoder.output_width(), d, rng);
    PoolConfig pc = cfg.pool;
    pc.clusters = pc.kind == PoolKind::MinCut ? resolve_clusters(cfg, ds, train) : pc.clusters;
    m.backend = PoolBackend(pc, d, rng);
    m.head = ClassifierHead::create(m.backend.output_width(), cfg.head_hidden, std::max<std::size_t>(ds.class_count, 2), rng);
    return m;
  }

  std::vector<Parameter*> mvp_parameters() {
    auto p = encoder.parameters();
    for (Parameter* q : recon.parameters()) p.push_back(q);
    return p;
  }

  std::vector<Parameter*> downstream_parameters() {
    auto p = backend.parameters();
    for (Parameter* q : head.parameters()) p.push_back(q);
    return p;
  }

  std::vector<Parameter*> parameters() {
    auto p = mvp_parameters();
    for (Parameter* q : downstream_parameters()) p.push_back(q);
    return p;
  }

  Pass forward(Tape& tape, const Graph& g, bool mvp_enabled, const LossToggles& toggles = {}) {
    Pass pass;
    const std::size_t n = g.node_count();
    const Tensor* x_in = &g.features;
    const Tensor* a_in = &g.adjacency;
    MaskedGraph masked;
    if (mvp_enabled) {
      Var z = encode_views(tape, g, partition, encoder);
      Reconstruction rec = reconstruct(z, recon);
      pass.recon = recon_losses(g.adjacency, g.features, rec.adjacency, rec.features);
      pass.scores = node_scores(g.adjacency, g.features, rec.adjacency.value(), rec.features.value(), lambda);
      pass.indicator = build_indicator(pass.scores, threshold);
      masked = apply_mask(g, pass.indicator.keep);
      x_in = &masked.features;
      a_in = &masked.adjacency;
      pass.pruned = true;
    } else {
      pass.indicator.keep.assign(n, 1.0);
    }
    pass.pool = backend.forward(tape.constant(*x_in), *a_in, pass.indicator.keep);
    pass.pool_loss = pass.pool.aux_loss;
    pass.logits = classify(pass.pool.graph_vector, head);
    pass.cross_entropy = ad::softmax_cross_entropy(pass.logits, g.label);
    pass.total = combined_loss(pass, toggles);
    return pass;
  }

  /// L = L_ce + L_r + L_pool over the enabled terms.
  static Var combined_loss(const Pass& pass, const LossToggles& toggles) {
    Var total = pass.cross_entropy;
    if (toggles.reconstruction && pass.recon) total = ad::add(total, pass.recon->total);
    if (toggles.pooling) total = ad::add(total, pass.pool_loss);
    return total;
  }

  std::size_t predict(const Graph& g, bool mvp_enabled) {
    Tape tape;
    Pass p = forward(tape, g, mvp_enabled);
    const Tensor& z = p.logits.value();
    std::size_t best = 0;
    for (std::size_t j = 1; j < z.cols(); ++j)
      if (z[j] > z[best]) best = j;
    return best;
  }
};

}  // namespace mvprune
