#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "mvprune/autodiff.hpp"
#include "mvprune/error.hpp"
#include "mvprune/init.hpp"
#include "mvprune/multiview.hpp"

namespace mvprune {

enum class PoolKind { MeanReadout, SumReadout, GcnMean, GcnSum, AttentionTopK, FeatureTopK, MinCut };

inline const std::vector<std::pair<std::string, PoolKind>>& pool_kind_names() {
  static const std::vector<std::pair<std::string, PoolKind>> names = {
      {"mean", PoolKind::MeanReadout},        {"sum", PoolKind::SumReadout},
      {"gcn-mean", PoolKind::GcnMean},        {"gcn-sum", PoolKind::GcnSum},
      {"attention-topk", PoolKind::AttentionTopK}, {"feature-topk", PoolKind::FeatureTopK},
      {"mincut", PoolKind::MinCut},
  };
  return names;
}

inline std::string to_string(PoolKind k) {
  for (const auto& [name, kind] : pool_kind_names())
    if (kind == k) return name;
  return "?";
}

inline PoolKind parse_pool_kind(const std::string& s) {
  for (const auto& [name, kind] : pool_kind_names())
    if (name == s) return kind;
  std::string valid;
  for (const auto& [name, kind] : pool_kind_names()) valid += (valid.empty() ? "" : ", ") + name;
  throw ConfigError("backend", "unknown backend '" + s + "' (valid: " + valid + ")");
}

inline bool is_readout(PoolKind k) { return k == PoolKind::MeanReadout || k == PoolKind::SumReadout; }

// ---------------------------------------------------------------------------
// Readouts

namespace detail {
inline Tensor keep_row(const std::vector<double>& keep, bool normalize) {
  Tensor w(1, keep.size());
  double k = 0.0;
  for (double v : keep) k += v;
  if (normalize && k == 0.0) throw ContractError("masked_mean_readout: no kept nodes");
  for (std::size_t i = 0; i < keep.size(); ++i) w(0, i) = normalize ? keep[i] / k : keep[i];
  return w;
}
}  // namespace detail

/// Mean over kept rows only; the denominator is the kept count.
inline Var masked_mean_readout(Var x, const std::vector<double>& keep) {
  if (keep.size() != x.rows()) throw ShapeError("masked_mean_readout: indicator length mismatch");
  return ad::matmul(x.tape()->constant(detail::keep_row(keep, true)), x);
}

inline Var masked_sum_readout(Var x, const std::vector<double>& keep) {
  if (keep.size() != x.rows()) throw ShapeError("masked_sum_readout: indicator length mismatch");
  return ad::matmul(x.tape()->constant(detail::keep_row(keep, false)), x);
}

// ---------------------------------------------------------------------------
// Top-k selection

/// Indices of the ⌈ratio·m⌉ highest-scoring kept nodes (m = kept count), ties
/// broken by lower index; returned in increasing node order.
inline std::vector<std::size_t> topk_indices(const std::vector<double>& scores, const std::vector<double>& keep, double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError("keep_ratio", "must lie in (0, 1]");
  std::vector<std::size_t> cand;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (keep.empty() || keep[i] != 0.0) cand.push_back(i);
  const auto k = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(cand.size()) - 1e-12));
  std::stable_sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  cand.resize(std::min(k, cand.size()));
  std::sort(cand.begin(), cand.end());
  return cand;
}

struct TopKResult {
  Var features;                    // selected rows gated by tanh(score)
  Tensor adjacency;                // induced subgraph on the selected nodes
  std::vector<double> scores;      // one per input node
  std::vector<std::size_t> selected;
};

namespace detail {
/// Rows of x scaled by tanh of the matching entry of the column vector `score`.
inline Var gate_rows(Var x, Var score) {
  Tape& t = *x.tape();
  Var gate = ad::tanh(score);
  Var spread = ad::matmul(gate, t.constant(Tensor(1, x.cols(), 1.0)));
  return ad::mul(x, spread);
}

inline TopKResult finish_topk(Var x, const Tensor& adjacency, Var score, const std::vector<double>& keep, double ratio) {
  TopKResult r;
  r.scores.assign(score.value().values().begin(), score.value().values().end());
  r.selected = topk_indices(r.scores, keep, ratio);
  Var xs = ad::gather_rows(x, r.selected);
  Var ss = ad::gather_rows(score, r.selected);
  r.features = gate_rows(xs, ss);
  r.adjacency = Tensor(r.selected.size(), r.selected.size());
  for (std::size_t i = 0; i < r.selected.size(); ++i)
    for (std::size_t j = 0; j < r.selected.size(); ++j) r.adjacency(i, j) = adjacency(r.selected[i], r.selected[j]);
  return r;
}
}  // namespace detail

/// Self-attention pooling: node scores from a one-output GCN over (x, A).
inline TopKResult attention_topk_pool(Var x, const Tensor& adjacency, Var score_weight, double keep_ratio,
                                      const std::vector<double>& keep = {}) {
  Var score = ad::matmul(ad::propagate(normalized_adjacency_sparse(adjacency), x), score_weight);
  return detail::finish_topk(x, adjacency, score, keep, keep_ratio);
}

/// Projection pooling: score = x·p / ‖p‖.
inline TopKResult feature_topk_pool(Var x, const Tensor& adjacency, Var projection, double keep_ratio,
                                    const std::vector<double>& keep = {}) {
  Var norm = ad::sqrt(ad::sum(ad::mul(projection, projection)));
  Var score = ad::div_scalar(ad::matmul(x, projection), norm);
  return detail::finish_topk(x, adjacency, score, keep, keep_ratio);
}

// ---------------------------------------------------------------------------
// MinCut

struct MinCutResult {
  Var features;    // Sᵀ X, K × h
  Var adjacency;   // Sᵀ A S, K × K
  Var assignment;  // S, n × K (rows of dropped nodes zero)
  Var cut_loss;
  Var ortho_loss;
  Var loss;        // cut + orthogonality
};

/// Soft clustering S = softmax(X·W + b). Cut loss −tr(SᵀAS)/tr(SᵀDS) (0 when the
/// graph has no edges); orthogonality ‖SᵀS/‖SᵀS‖_F − I_K/√K‖_F.
inline MinCutResult mincut_pool(Var x, const Tensor& adjacency, Var assign_weight, Var assign_bias,
                                const std::vector<double>& keep = {}) {
  Tape& t = *x.tape();
  const std::size_t n = x.rows();
  Var s = ad::softmax_rows(ad::add_row(ad::matmul(x, assign_weight), assign_bias));
  if (!keep.empty()) s = ad::mask_rows(s, keep);
  const std::size_t k = s.cols();
  if (k < 2) throw ConfigError("clusters", "MinCut needs at least 2 clusters");

  Var a = t.constant(adjacency);
  Var st = ad::transpose(s);
  MinCutResult r;
  r.assignment = s;
  r.features = ad::matmul(st, x);
  r.adjacency = ad::matmul(st, ad::matmul(a, s));

  Tensor deg(n, k);
  double total_degree = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < n; ++j) d += adjacency(i, j);
    total_degree += d;
    for (std::size_t c = 0; c < k; ++c) deg(i, c) = d;
  }
  if (total_degree == 0.0) {
    r.cut_loss = t.constant(Tensor::scalar(0.0));
  } else {
    Var num = ad::sum(ad::mul(s, ad::matmul(a, s)));
    Var den = ad::sum(ad::mul_const(ad::mul(s, s), deg));
    r.cut_loss = ad::scale(ad::div_scalar(num, den), -1.0);
  }
  Var sts = ad::matmul(st, s);
  Var sts_norm = ad::sqrt(ad::sum(ad::mul(sts, sts)));
  Tensor ident = Tensor::identity(k);
  for (double& v : ident.values()) v /= std::sqrt(static_cast<double>(k));
  Var diff = ad::sub(ad::div_scalar(sts, sts_norm), t.constant(ident));
  r.ortho_loss = ad::sqrt(ad::sum(ad::mul(diff, diff)));
  r.loss = ad::add(r.cut_loss, r.ortho_loss);
  return r;
}

// ---------------------------------------------------------------------------
// Backend wrapper

struct PoolConfig {
  PoolKind kind = PoolKind::MeanReadout;
  std::size_t hidden = 64;
  double keep_ratio = 0.5;
  std::size_t clusters = 0;  // 0 → ⌈mean training graph size / 4⌉
  double aux_loss_weight = 1.0;
};

struct PoolOutput {
  Var graph_vector;                    // 1 × output_width
  Var aux_loss;                        // L_pool (exactly 0 for readouts)
  std::vector<double> scores;          // per-node attention/projection scores (top-k kinds)
  std::vector<std::size_t> selected;   // nodes kept by top-k kinds
};

/// One pooling stage mapping (X′, A′, indicator) to a fixed-width graph vector.
/// Non-readout kinds first embed nodes with one GCN layer.
class PoolBackend {
 public:
  PoolBackend() = default;
  PoolBackend(PoolConfig cfg, std::size_t feature_dim, Rng& rng) : cfg_(cfg), feature_dim_(feature_dim) {
    if (is_readout(cfg_.kind)) return;
    gcn_ = Parameter("pool.gcn", glorot_uniform(feature_dim, cfg_.hidden, rng));
    switch (cfg_.kind) {
      case PoolKind::AttentionTopK:
      case PoolKind::FeatureTopK:
        score_ = Parameter("pool.score", glorot_uniform(cfg_.hidden, 1, rng));
        break;
      case PoolKind::MinCut:
        if (cfg_.clusters < 2) throw ConfigError("clusters", "MinCut needs at least 2 clusters");
        assign_w_ = Parameter("pool.assign.weight", glorot_uniform(cfg_.hidden, cfg_.clusters, rng));
        assign_b_ = Parameter("pool.assign.bias", Tensor(1, cfg_.clusters));
        post_ = Parameter("pool.post", glorot_uniform(cfg_.hidden, cfg_.hidden, rng));
        break;
      default:
        break;
    }
  }

  const PoolConfig& config() const noexcept { return cfg_; }
  std::size_t output_width() const { return is_readout(cfg_.kind) ? feature_dim_ : cfg_.hidden; }

  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out;
    for (Parameter* p : {&gcn_, &score_, &assign_w_, &assign_b_, &post_})
      if (!p->value.empty()) out.push_back(p);
    return out;
  }

  PoolOutput forward(Var x, const Tensor& adjacency, const std::vector<double>& keep) {
    Tape& t = *x.tape();
    PoolOutput out;
    out.aux_loss = t.constant(Tensor::scalar(0.0));
    switch (cfg_.kind) {
      case PoolKind::MeanReadout:
        out.graph_vector = masked_mean_readout(x, keep);
        return out;
      case PoolKind::SumReadout:
        out.graph_vector = masked_sum_readout(x, keep);
        return out;
      default:
        break;
    }
    Var h = embed(x, adjacency, keep);
    switch (cfg_.kind) {
      case PoolKind::GcnMean:
        out.graph_vector = masked_mean_readout(h, keep);
        break;
      case PoolKind::GcnSum:
        out.graph_vector = masked_sum_readout(h, keep);
        break;
      case PoolKind::AttentionTopK:
      case PoolKind::FeatureTopK: {
        TopKResult r = cfg_.kind == PoolKind::AttentionTopK
                           ? attention_topk_pool(h, adjacency, t.parameter(score_), cfg_.keep_ratio, keep)
                           : feature_topk_pool(h, adjacency, t.parameter(score_), cfg_.keep_ratio, keep);
        out.graph_vector = masked_mean_readout(r.features, std::vector<double>(r.selected.size(), 1.0));
        out.scores = std::move(r.scores);
        out.selected = std::move(r.selected);
        break;
      }
      case PoolKind::MinCut: {
        MinCutResult r = mincut_pool(h, adjacency, t.parameter(assign_w_), t.parameter(assign_b_), keep);
        Var post = ad::relu(ad::matmul(r.features, t.parameter(post_)));
        out.graph_vector = ad::mean_rows(post);
        out.aux_loss = cfg_.aux_loss_weight == 1.0 ? r.loss : ad::scale(r.loss, cfg_.aux_loss_weight);
        break;
      }
      default:
        break;
    }
    return out;
  }

  /// Per-node scores of a top-k backend without building a gradient path.
  std::vector<double> node_scores(const Tensor& features, const Tensor& adjacency, const std::vector<double>& keep) {
    Tape t;
    return forward(t.constant(features), adjacency, keep).scores;
  }

 private:
  Var embed(Var x, const Tensor& adjacency, const std::vector<double>& keep) {
    Tape& t = *x.tape();
    Var agg = ad::propagate(normalized_adjacency_sparse(adjacency), x);
    Var h = ad::relu(ad::matmul(agg, t.parameter(gcn_)));
    return ad::mask_rows(h, keep);
  }

  PoolConfig cfg_;
  std::size_t feature_dim_ = 0;
  Parameter gcn_, score_, assign_w_, assign_b_, post_;
};

// ---------------------------------------------------------------------------
// Classifier

/// Two affine layers with a ReLU in between.
struct ClassifierHead {
  Parameter w1, b1, w2, b2;

  static ClassifierHead create(std::size_t in, std::size_t hidden, std::size_t classes, Rng& rng) {
    return {Parameter("head.w1", glorot_uniform(in, hidden, rng)), Parameter("head.b1", Tensor(1, hidden)),
            Parameter("head.w2", glorot_uniform(hidden, classes, rng)), Parameter("head.b2", Tensor(1, classes))};
  }

  std::vector<Parameter*> parameters() { return {&w1, &b1, &w2, &b2}; }
};

inline Var classify(Var graph_vector, ClassifierHead& head) {
  Tape& t = *graph_vector.tape();
  if (graph_vector.cols() != head.w1.value.rows()) {
    throw ShapeError("classify: graph vector width " + std::to_string(graph_vector.cols()) + " but head expects " +
                     std::to_string(head.w1.value.rows()));
  }
  Var h = ad::relu(ad::add_row(ad::matmul(graph_vector, t.parameter(head.w1)), t.parameter(head.b1)));
  return ad::add_row(ad::matmul(h, t.parameter(head.w2)), t.parameter(head.b2));
}

}  // namespace mvprune
