#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <string>
#include <utility>
#include <vector>

#include "mvprune/error.hpp"
#include "mvprune/rng.hpp"
#include "mvprune/tensor.hpp"

namespace mvprune {

/// Undirected graph with dense binary adjacency (zero diagonal) and node features.
struct Graph {
  Tensor adjacency;  // n×n
  Tensor features;   // n×d
  std::size_t label = 0;

  std::size_t node_count() const noexcept { return adjacency.rows(); }
  std::size_t feature_dim() const noexcept { return features.cols(); }

  std::size_t degree(std::size_t i) const {
    std::size_t d = 0;
    for (double v : adjacency.row(i)) d += v != 0.0 ? 1 : 0;
    return d;
  }

  std::vector<std::size_t> degrees() const {
    std::vector<std::size_t> d(node_count());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = degree(i);
    return d;
  }

  /// Neighbor lists in increasing node order.
  std::vector<std::vector<std::size_t>> neighbors() const {
    const std::size_t n = node_count();
    std::vector<std::vector<std::size_t>> nb(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (adjacency(i, j) != 0.0) nb[i].push_back(j);
    return nb;
  }

  std::size_t edge_count() const {
    std::size_t e = 0;
    for (std::size_t i = 0; i < node_count(); ++i)
      for (std::size_t j = i + 1; j < node_count(); ++j) e += adjacency(i, j) != 0.0 ? 1 : 0;
    return e;
  }

  /// Throws ContractError unless adjacency is symmetric, binary, zero-diagonal and features are NaN-free.
  void validate() const {
    const std::size_t n = node_count();
    if (adjacency.cols() != n) throw ContractError("Graph: adjacency is not square");
    if (features.rows() != n) throw ContractError("Graph: feature rows do not match node count");
    for (std::size_t i = 0; i < n; ++i) {
      if (adjacency(i, i) != 0.0) throw ContractError("Graph: non-zero diagonal at node " + std::to_string(i));
      for (std::size_t j = 0; j < n; ++j) {
        const double a = adjacency(i, j);
        if (a != 0.0 && a != 1.0) throw ContractError("Graph: adjacency entry is not binary");
        if (a != adjacency(j, i)) throw ContractError("Graph: adjacency is not symmetric");
      }
    }
    for (double v : features.values())
      if (std::isnan(v)) throw ContractError("Graph: NaN feature");
  }
};

/// A graph classification corpus. Feature columns are laid out as a one-hot
/// node-label block (`node_label_count` columns) followed by real attributes.
struct Dataset {
  std::string name;
  std::vector<Graph> graphs;
  std::size_t feature_dim = 0;
  std::size_t class_count = 0;
  std::size_t node_label_count = 0;
  std::size_t attribute_count = 0;

  bool operator==(const Dataset& o) const {
    if (name != o.name || feature_dim != o.feature_dim || class_count != o.class_count ||
        node_label_count != o.node_label_count || attribute_count != o.attribute_count ||
        graphs.size() != o.graphs.size())
      return false;
    for (std::size_t g = 0; g < graphs.size(); ++g) {
      const Graph& a = graphs[g];
      const Graph& b = o.graphs[g];
      if (a.label != b.label || !(a.adjacency == b.adjacency) || !(a.features == b.features)) return false;
    }
    return true;
  }

  double mean_node_count() const {
    if (graphs.empty()) return 0.0;
    double s = 0.0;
    for (const Graph& g : graphs) s += static_cast<double>(g.node_count());
    return s / static_cast<double>(graphs.size());
  }
};

/// Content hash (hex) over structure, features and labels.
inline std::string fingerprint(const Dataset& ds) {
  std::uint64_t h = fnv1a(ds.name);
  auto mix = [&h](std::uint64_t v) { h = splitmix64(h ^ v); };
  mix(ds.feature_dim);
  mix(ds.class_count);
  mix(ds.node_label_count);
  for (const Graph& g : ds.graphs) {
    mix(g.node_count());
    mix(g.label);
    for (double v : g.adjacency.values()) mix(v != 0.0 ? 1 : 0);
    for (double v : g.features.values()) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      mix(bits);
    }
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex[h & 0xf];
    h >>= 4;
  }
  return out;
}

}  // namespace mvprune
