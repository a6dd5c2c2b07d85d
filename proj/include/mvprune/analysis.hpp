#pragma once

// Post-hoc pruning diagnostics: betweenness centrality, degree-conditioned
// pruning rates per scoring policy, and threshold sweeps.
//
// A policy is a per-graph keep mask (1 keep, 0 prune). Column schemas:
//   centrality.csv      graph_id,node_id,degree,betweenness,<policy>_kept...
//   degree_profile.csv  policy,degree,nodes,pruned,pruned_fraction
//   sweep.csv           dataset,multiplier,mean_accuracy,std_accuracy,mean_pruned_fraction,max_pruned_fraction,seeds,failures

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mvprune/error.hpp"
#include "mvprune/format.hpp"
#include "mvprune/graph.hpp"
#include "mvprune/model.hpp"
#include "mvprune/prune.hpp"
#include "mvprune/train.hpp"

namespace mvprune {

/// Unnormalized betweenness, each unordered (s, t) pair counted once.
inline std::vector<double> betweenness(const Graph& g) {
  const std::size_t n = g.node_count();
  const auto adj = g.neighbors();
  std::vector<double> cb(n, 0.0);
  std::vector<double> sigma(n), delta(n);
  std::vector<long> dist(n);
  std::vector<std::vector<std::size_t>> pred(n);
  std::vector<std::size_t> order;
  for (std::size_t s = 0; s < n; ++s) {
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(delta.begin(), delta.end(), 0.0);
    std::fill(dist.begin(), dist.end(), -1L);
    for (auto& p : pred) p.clear();
    order.clear();
    sigma[s] = 1.0;
    dist[s] = 0;
    std::deque<std::size_t> q{s};
    while (!q.empty()) {
      const std::size_t v = q.front();
      q.pop_front();
      order.push_back(v);
      for (std::size_t w : adj[v]) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          q.push_back(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          pred[w].push_back(v);
        }
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const std::size_t w = *it;
      for (std::size_t v : pred[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != s) cb[w] += delta[w];
    }
  }
  for (double& x : cb) x /= 2.0;
  return cb;
}

inline constexpr double kHarmonicEpsilon = 1e-9;

/// k / Σ 1/(xᵢ + ε); 0 for an empty input.
inline double harmonic_mean(const std::vector<double>& values) {
  double inv = 0.0;
  std::size_t k = 0;
  for (double v : values) {
    const double x = v + kHarmonicEpsilon;
    if (x > 0.0) {
      inv += 1.0 / x;
      ++k;
    }
  }
  return k == 0 ? 0.0 : static_cast<double>(k) / inv;
}

/// Linear-interpolated quantile of an unsorted sample (q in [0, 1]).
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// ---------------------------------------------------------------------------
// Policies

using KeepMasks = std::vector<std::vector<double>>;  // per graph, per node

struct Policy {
  std::string name;
  KeepMasks keep;
};

/// Prunes the ⌈fraction·n⌉ lowest-degree nodes of each graph (ties: lower index first).
inline KeepMasks bottom_degree_policy(const Dataset& ds, double fraction) {
  KeepMasks out;
  for (const Graph& g : ds.graphs) {
    const auto deg = g.degrees();
    std::vector<std::size_t> idx(deg.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return deg[a] < deg[b]; });
    const auto drop = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(deg.size()) - 1e-12));
    std::vector<double> keep(deg.size(), 1.0);
    for (std::size_t i = 0; i < std::min(drop, idx.size()); ++i) keep[idx[i]] = 0.0;
    out.push_back(std::move(keep));
  }
  return out;
}

/// Prunes every node whose degree is below `limit`.
inline KeepMasks degree_below_policy(const Dataset& ds, std::size_t limit) {
  KeepMasks out;
  for (const Graph& g : ds.graphs) {
    std::vector<double> keep;
    for (std::size_t d : g.degrees()) keep.push_back(d < limit ? 0.0 : 1.0);
    out.push_back(std::move(keep));
  }
  return out;
}

/// Keep-or-drop indicator (s ≤ μ + cσ) applied to precomputed per-graph scores.
inline KeepMasks threshold_policy(const std::vector<std::vector<double>>& scores, double c) {
  KeepMasks out;
  for (const auto& s : scores) out.push_back(build_indicator(s, c).keep);
  return out;
}

/// MVP scores of a trained model for every graph.
inline std::vector<std::vector<double>> mvp_scores(MvpModel& model, const Dataset& data) {
  std::vector<std::vector<double>> out;
  for (const Graph& g : data.graphs) {
    Tape t;
    out.push_back(model.forward(t, g, true).scores);
  }
  return out;
}

/// Nodes retained by a top-k backend (everything else counts as pruned).
inline KeepMasks backend_selection_policy(MvpModel& model, const Dataset& data, bool mvp) {
  KeepMasks out;
  for (const Graph& g : data.graphs) {
    Tape t;
    const auto pass = model.forward(t, g, mvp);
    std::vector<double> keep(g.node_count(), 0.0);
    if (pass.pool.selected.empty()) {
      keep = pass.indicator.keep;
    } else {
      for (std::size_t i : pass.pool.selected) keep[i] = 1.0;
    }
    out.push_back(std::move(keep));
  }
  return out;
}

/// The four degree-based reference policies.
inline std::vector<Policy> degree_policies(const Dataset& ds) {
  return {{"bottom-10%", bottom_degree_policy(ds, 0.10)},
          {"bottom-20%", bottom_degree_policy(ds, 0.20)},
          {"degree<3", degree_below_policy(ds, 3)},
          {"degree<4", degree_below_policy(ds, 4)}};
}

inline void check_masks(const Dataset& ds, const Policy& p) {
  if (p.keep.size() != ds.graphs.size()) throw ShapeError("policy '" + p.name + "': mask count differs from graph count");
  for (std::size_t g = 0; g < ds.graphs.size(); ++g)
    if (p.keep[g].size() != ds.graphs[g].node_count())
      throw ShapeError("policy '" + p.name + "': mask length differs from node count of graph " + std::to_string(g));
}

// ---------------------------------------------------------------------------
// Degree profile

struct DegreeProfileRow {
  std::string policy;
  std::size_t degree = 0;
  std::size_t nodes = 0;
  std::size_t pruned = 0;
  double pruned_fraction = 0.0;
};

inline std::vector<DegreeProfileRow> degree_pruning_profile(const Dataset& ds, const std::vector<Policy>& policies) {
  std::vector<DegreeProfileRow> rows;
  for (const Policy& p : policies) {
    check_masks(ds, p);
    std::map<std::size_t, std::pair<std::size_t, std::size_t>> bins;  // degree → (nodes, pruned)
    for (std::size_t g = 0; g < ds.graphs.size(); ++g) {
      const auto deg = ds.graphs[g].degrees();
      for (std::size_t i = 0; i < deg.size(); ++i) {
        auto& b = bins[deg[i]];
        ++b.first;
        if (p.keep[g][i] == 0.0) ++b.second;
      }
    }
    for (const auto& [d, b] : bins)
      rows.push_back({p.name, d, b.first, b.second, static_cast<double>(b.second) / static_cast<double>(b.first)});
  }
  return rows;
}

struct DegreeSummary {
  std::string policy;
  std::size_t nodes = 0;
  std::size_t pruned = 0;
  double mean_degree_pruned = 0.0;
  double mean_degree_kept = 0.0;
  double gap() const { return mean_degree_kept - mean_degree_pruned; }
};

inline DegreeSummary degree_summary(const Dataset& ds, const Policy& p) {
  check_masks(ds, p);
  DegreeSummary s;
  s.policy = p.name;
  double dp = 0.0, dk = 0.0;
  for (std::size_t g = 0; g < ds.graphs.size(); ++g) {
    const auto deg = ds.graphs[g].degrees();
    for (std::size_t i = 0; i < deg.size(); ++i) {
      ++s.nodes;
      if (p.keep[g][i] == 0.0) {
        ++s.pruned;
        dp += static_cast<double>(deg[i]);
      } else {
        dk += static_cast<double>(deg[i]);
      }
    }
  }
  if (s.pruned > 0) s.mean_degree_pruned = dp / static_cast<double>(s.pruned);
  if (s.nodes > s.pruned) s.mean_degree_kept = dk / static_cast<double>(s.nodes - s.pruned);
  return s;
}

// ---------------------------------------------------------------------------
// Centrality

struct PolicyCentrality {
  std::string policy;
  // Harmonic-mean betweenness of the pruned nodes per graph; empty when the
  // policy prunes nothing in that graph (such graphs are left out of the quartiles).
  std::vector<std::optional<double>> per_graph;
  double q1 = 0.0, median = 0.0, q3 = 0.0;
  std::size_t graphs_with_pruning = 0;
};

struct CentralityReport {
  std::vector<std::vector<double>> betweenness;  // per graph, per node
  std::vector<PolicyCentrality> policies;
};

inline CentralityReport centrality_report(const Dataset& ds, const std::vector<Policy>& policies) {
  CentralityReport r;
  for (const Graph& g : ds.graphs) r.betweenness.push_back(betweenness(g));
  for (const Policy& p : policies) {
    check_masks(ds, p);
    PolicyCentrality pc;
    pc.policy = p.name;
    std::vector<double> sample;
    for (std::size_t g = 0; g < ds.graphs.size(); ++g) {
      std::vector<double> vals;
      for (std::size_t i = 0; i < p.keep[g].size(); ++i)
        if (p.keep[g][i] == 0.0) vals.push_back(r.betweenness[g][i]);
      if (vals.empty()) {
        pc.per_graph.emplace_back();
      } else {
        pc.per_graph.emplace_back(harmonic_mean(vals));
        sample.push_back(*pc.per_graph.back());
      }
    }
    pc.graphs_with_pruning = sample.size();
    pc.q1 = quantile(sample, 0.25);
    pc.median = quantile(sample, 0.5);
    pc.q3 = quantile(sample, 0.75);
    r.policies.push_back(std::move(pc));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Threshold sweep

inline const std::vector<double>& default_multipliers() {
  static const std::vector<double> m = {0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  return m;
}

enum class SweepMode { Retrain, Reevaluate };

struct SweepRow {
  double multiplier = 0.0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  double mean_pruned_fraction = 0.0;  // mean over seeds of the mean per-graph pruned fraction
  double max_pruned_fraction = 0.0;   // largest per-graph pruned fraction seen
  std::size_t seeds = 0;
  std::size_t failures = 0;
};

namespace sweep_detail {

struct Fractions {
  double mean = 0.0, max = 0.0;
};

inline Fractions pruned_fractions(MvpModel& model, const Dataset& data) {
  Fractions f;
  if (data.graphs.empty()) return f;
  for (const Graph& g : data.graphs) {
    Tape t;
    const auto ind = model.forward(t, g, true).indicator;
    const double frac = g.node_count() == 0 ? 0.0 : static_cast<double>(ind.dropped()) / static_cast<double>(g.node_count());
    f.mean += frac;
    f.max = std::max(f.max, frac);
  }
  f.mean /= static_cast<double>(data.graphs.size());
  return f;
}

inline void finish(SweepRow& row, const std::vector<double>& acc, const std::vector<double>& frac_mean) {
  row.seeds = acc.size();
  if (acc.empty()) return;
  const double n = static_cast<double>(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) {
    row.mean_accuracy += acc[i] / n;
    row.mean_pruned_fraction += frac_mean[i] / n;
  }
  double var = 0.0;
  for (double a : acc) var += (a - row.mean_accuracy) * (a - row.mean_accuracy);
  row.std_accuracy = std::sqrt(var / n);
}

}  // namespace sweep_detail

/// Accuracy and pruned fraction per multiplier c. Retrain runs the full trial
/// protocol at each c; Reevaluate trains once at cfg.threshold and only swaps c.
inline std::vector<SweepRow> threshold_sweep(const Dataset& ds, const TrainConfig& cfg, const std::vector<double>& multipliers,
                                             SweepMode mode = SweepMode::Retrain, std::size_t jobs = 1) {
  if (!cfg.use_mvp) throw ConfigError("use_mvp", "a threshold sweep needs the MVP stage enabled");
  for (double c : multipliers)
    if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("multipliers", "multipliers must be positive");
  std::vector<SweepRow> rows;
  std::optional<TrialOutcome> shared;
  if (mode == SweepMode::Reevaluate) shared = run_trials(cfg, ds, jobs);
  for (double c : multipliers) {
    SweepRow row;
    row.multiplier = c;
    std::vector<double> acc, frac;
    auto visit = [&](TrainResult& r) {
      r.model.threshold = c;
      acc.push_back(accuracy(r.model, r.data, r.split.test, true));
      const auto f = sweep_detail::pruned_fractions(r.model, r.data);
      frac.push_back(f.mean);
      row.max_pruned_fraction = std::max(row.max_pruned_fraction, f.max);
    };
    if (shared) {
      for (TrainResult& r : shared->results) visit(r);
      row.failures = shared->report.failures.size();
    } else {
      TrainConfig at = cfg;
      at.threshold = c;
      TrialOutcome out = run_trials(at, ds, jobs);
      for (TrainResult& r : out.results) visit(r);
      row.failures = out.report.failures.size();
    }
    sweep_detail::finish(row, acc, frac);
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// CSV output

inline std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw LoadError("cannot write " + path.string());
  return f;
}

inline void write_centrality_csv(const std::filesystem::path& path, const Dataset& ds, const CentralityReport& r,
                                 const std::vector<Policy>& policies) {
  auto f = open_csv(path);
  f << "graph_id,node_id,degree,betweenness";
  for (const Policy& p : policies) f << ',' << p.name << "_kept";
  f << '\n';
  for (std::size_t g = 0; g < ds.graphs.size(); ++g) {
    const auto deg = ds.graphs[g].degrees();
    for (std::size_t i = 0; i < deg.size(); ++i) {
      f << g << ',' << i << ',' << deg[i] << ',' << format_real(r.betweenness[g][i]);
      for (const Policy& p : policies) f << ',' << (p.keep[g][i] != 0.0 ? 1 : 0);
      f << '\n';
    }
  }
}

inline void write_degree_profile_csv(const std::filesystem::path& path, const std::vector<DegreeProfileRow>& rows) {
  auto f = open_csv(path);
  f << "policy,degree,nodes,pruned,pruned_fraction\n";
  for (const auto& r : rows) f << r.policy << ',' << r.degree << ',' << r.nodes << ',' << r.pruned << ',' << format_real(r.pruned_fraction) << '\n';
}

inline void write_sweep_csv(const std::filesystem::path& path, const std::string& dataset, const std::vector<SweepRow>& rows) {
  auto f = open_csv(path);
  f << "dataset,multiplier,mean_accuracy,std_accuracy,mean_pruned_fraction,max_pruned_fraction,seeds,failures\n";
  for (const auto& r : rows)
    f << dataset << ',' << format_real(r.multiplier) << ',' << format_real(r.mean_accuracy) << ',' << format_real(r.std_accuracy) << ','
      << format_real(r.mean_pruned_fraction) << ',' << format_real(r.max_pruned_fraction) << ',' << r.seeds << ',' << r.failures << '\n';
}

}  // namespace mvprune
