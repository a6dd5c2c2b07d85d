#pragma once

// Planted-anomaly corpus: class-correlated community graphs with a known set of
// uninformative nodes. Normal nodes carry attributes near a class prototype and
// sit in a dense core (one community for even classes, two bridged communities
// for odd classes) or on sparse branches hanging off it. Anomalies carry
// class-independent attributes (a balanced random sign pattern of magnitude
// `anomaly_scale`) and a single edge to a random normal node.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "mvprune/error.hpp"
#include "mvprune/graph.hpp"
#include "mvprune/rng.hpp"
#include "mvprune/tu_format.hpp"

namespace mvprune {

struct SynthConfig {
  std::size_t graphs = 200;
  std::size_t nodes = 20;
  double anomaly_fraction = 0.15;
  std::uint64_t seed = 7;
  std::size_t classes = 2;
  std::size_t categories = 3;    // one-hot node-label block width
  std::size_t attributes = 29;   // real attribute columns
  double core_fraction = 0.6;    // share of normal nodes in the dense core
  double core_density = 0.5;     // edge probability inside a community
  double separation = 0.25;      // prototype entry scale
  double noise = 1.0;            // per-node attribute noise (std)
  double anomaly_scale = 4.0;
};

struct SynthCorpus {
  Dataset dataset;
  std::vector<std::vector<bool>> anomalies;  // per graph, per node
};

inline SynthCorpus synth_planted_anomalies(const SynthConfig& cfg) {
  if (!(cfg.anomaly_fraction >= 0.0 && cfg.anomaly_fraction < 0.5)) {
    throw ConfigError("anomaly", "anomaly fraction must lie in [0, 0.5)");
  }
  if (cfg.nodes < 4) throw ConfigError("nodes", "need at least 4 nodes per graph");
  if (cfg.graphs == 0) throw ConfigError("graphs", "need at least one graph");
  if (cfg.classes < 2) throw ConfigError("classes", "need at least two classes");
  if (cfg.attributes < 2) throw ConfigError("attributes", "need at least two attributes");

  Rng proto_rng = stream(cfg.seed, "synth-prototypes");
  std::normal_distribution<double> stdn(0.0, 1.0);
  std::vector<std::vector<double>> proto(cfg.classes, std::vector<double>(cfg.attributes));
  for (auto& p : proto)
    for (double& v : p) v = cfg.separation * stdn(proto_rng);

  Rng rng = stream(cfg.seed, "synth-graphs");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto n_anom = static_cast<std::size_t>(std::llround(cfg.anomaly_fraction * static_cast<double>(cfg.nodes)));
  const std::size_t n_norm = cfg.nodes - n_anom;
  const std::size_t n_core = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(cfg.core_fraction * n_norm)), 2, n_norm);

  SynthCorpus out;
  Dataset& ds = out.dataset;
  ds.name = "SYNTH";
  ds.class_count = cfg.classes;
  ds.node_label_count = cfg.categories;
  ds.attribute_count = cfg.attributes;
  ds.feature_dim = cfg.categories + cfg.attributes;

  auto pick = [&rng](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };

  for (std::size_t g = 0; g < cfg.graphs; ++g) {
    const std::size_t label = g % cfg.classes;
    const std::size_t n = cfg.nodes;
    Tensor adj(n, n);
    auto link = [&adj](std::size_t u, std::size_t v) {
      if (u == v) return;
      adj(u, v) = adj(v, u) = 1.0;
    };
    // Communities over the core nodes [0, n_core).
    std::vector<std::vector<std::size_t>> comms;
    std::vector<std::size_t> core(n_core);
    std::iota(core.begin(), core.end(), 0);
    if (label % 2 == 1 && n_core >= 4) {
      comms.emplace_back(core.begin(), core.begin() + static_cast<std::ptrdiff_t>(n_core / 2));
      comms.emplace_back(core.begin() + static_cast<std::ptrdiff_t>(n_core / 2), core.end());
    } else {
      comms.push_back(core);
    }
    for (const auto& c : comms) {
      for (std::size_t i = 1; i < c.size(); ++i) link(c[i - 1], c[i]);  // keeps each community connected
      for (std::size_t i = 0; i < c.size(); ++i)
        for (std::size_t j = i + 2; j < c.size(); ++j)
          if (unif(rng) < cfg.core_density) link(c[i], c[j]);
    }
    for (std::size_t k = 1; k < comms.size(); ++k) link(comms[k - 1][pick(comms[k - 1].size())], comms[k][pick(comms[k].size())]);
    // Branch normals attach to a random earlier normal node.
    for (std::size_t v = n_core; v < n_norm; ++v) link(v, pick(v));
    // Anomalies: one edge to a random normal node.
    for (std::size_t v = n_norm; v < n; ++v) link(v, pick(n_norm));

    Tensor feat(n, ds.feature_dim);
    for (std::size_t v = 0; v < n; ++v) {
      feat(v, pick(cfg.categories)) = 1.0;
      if (v < n_norm) {
        for (std::size_t f = 0; f < cfg.attributes; ++f) feat(v, cfg.categories + f) = proto[label][f] + cfg.noise * stdn(rng);
      } else {
        std::vector<double> sign(cfg.attributes, 1.0);
        std::fill(sign.begin(), sign.begin() + static_cast<std::ptrdiff_t>(cfg.attributes / 2), -1.0);
        std::shuffle(sign.begin(), sign.end(), rng);
        for (std::size_t f = 0; f < cfg.attributes; ++f) feat(v, cfg.categories + f) = cfg.anomaly_scale * sign[f];
      }
    }

    // Random node order so anomalies are not positionally identifiable.
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);  // perm[new] = old
    Graph gr;
    gr.label = label;
    gr.adjacency = Tensor(n, n);
    gr.features = Tensor(n, ds.feature_dim);
    std::vector<bool> truth(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = perm[i] >= n_norm;
      for (std::size_t j = 0; j < n; ++j) gr.adjacency(i, j) = adj(perm[i], perm[j]);
      for (std::size_t f = 0; f < ds.feature_dim; ++f) gr.features(i, f) = feat(perm[i], f);
    }
    ds.graphs.push_back(std::move(gr));
    out.anomalies.push_back(std::move(truth));
  }
  return out;
}

/// Writes the corpus in TU layout plus `{name}_node_anomaly.txt` (0/1 per node).
inline void write_synth(const SynthCorpus& corpus, const std::filesystem::path& dir, const std::string& name) {
  tu::write(corpus.dataset, dir, name);
  std::ofstream f(dir / (name + "_node_anomaly.txt"));
  if (!f) throw LoadError("cannot write " + (dir / (name + "_node_anomaly.txt")).string());
  for (const auto& g : corpus.anomalies)
    for (bool a : g) f << (a ? 1 : 0) << '\n';
}

/// Reads `{name}_node_anomaly.txt` back into per-graph flags.
inline std::vector<std::vector<bool>> load_anomaly_labels(const std::filesystem::path& dir, const std::string& name, const Dataset& ds) {
  const auto path = dir / (name + "_node_anomaly.txt");
  std::ifstream in(path);
  if (!in) throw LoadError("missing ground-truth file " + path.string());
  std::vector<std::vector<bool>> out;
  for (const Graph& g : ds.graphs) {
    std::vector<bool> flags(g.node_count());
    for (std::size_t i = 0; i < flags.size(); ++i) {
      int v = 0;
      if (!(in >> v)) throw FormatError(path.filename().string() + ": fewer rows than nodes");
      flags[i] = v != 0;
    }
    out.push_back(std::move(flags));
  }
  return out;
}

}  // namespace mvprune
