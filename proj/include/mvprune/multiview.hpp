#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mvprune/autodiff.hpp"
#include "mvprune/error.hpp"
#include "mvprune/graph.hpp"
#include "mvprune/init.hpp"
#include "mvprune/rng.hpp"
#include "mvprune/sparse.hpp"

namespace mvprune {

/// Assignment of feature columns to views.
struct ViewPartition {
  std::vector<std::vector<std::size_t>> columns;
  double overlap_ratio = 0.0;
  std::uint64_t seed = 0;

  std::size_t view_count() const noexcept { return columns.size(); }

  std::size_t feature_dim() const {
    std::size_t mx = 0;
    for (const auto& v : columns)
      for (std::size_t c : v) mx = std::max(mx, c + 1);
    return mx;
  }
};

/// Overlap used when the caller does not pick one: 0.25 if a view would hold
/// fewer than 4 features, otherwise 0.
inline double default_overlap(std::size_t d, std::size_t k) {
  return k > 0 && d / k < 4 ? 0.25 : 0.0;
}

/// Shuffles the d feature indices with `seed`, cuts them into k near-equal
/// chunks (the first d % k chunks get one extra), then extends every view with
/// the first ⌊overlap · ⌈d/k⌉⌋ features of its successor's chunk. Views wrap
/// around cyclically for k ≥ 3; with k = 2 only the first view is extended so
/// the pair shares exactly that many features.
inline ViewPartition make_partition(std::size_t d, std::size_t k, double overlap_ratio, std::uint64_t seed) {
  if (k < 1) throw ConfigError("views", "view count must be at least 1");
  if (d < k) throw ConfigError("views", "view count " + std::to_string(k) + " exceeds feature dimension " + std::to_string(d));
  if (!(overlap_ratio >= 0.0 && overlap_ratio < 1.0)) throw ConfigError("overlap_ratio", "must lie in [0, 1)");
  std::vector<std::size_t> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng = stream(seed, "partition");
  std::shuffle(perm.begin(), perm.end(), rng);

  std::vector<std::vector<std::size_t>> base(k);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t width = d / k + (i < d % k ? 1 : 0);
    base[i].assign(perm.begin() + static_cast<std::ptrdiff_t>(pos), perm.begin() + static_cast<std::ptrdiff_t>(pos + width));
    pos += width;
  }
  const std::size_t view_width = (d + k - 1) / k;
  const auto shared = static_cast<std::size_t>(std::floor(overlap_ratio * static_cast<double>(view_width)));

  ViewPartition p;
  p.overlap_ratio = overlap_ratio;
  p.seed = seed;
  p.columns = base;
  if (shared > 0 && k >= 2) {
    const std::size_t extended = k == 2 ? 1 : k;
    for (std::size_t i = 0; i < extended; ++i) {
      const auto& next = base[(i + 1) % k];
      p.columns[i].insert(p.columns[i].end(), next.begin(), next.begin() + static_cast<std::ptrdiff_t>(std::min(shared, next.size())));
    }
  }
  return p;
}

/// Partition from explicit column groups (intrinsic modalities).
inline ViewPartition partition_from_groups(std::vector<std::vector<std::size_t>> groups, std::size_t d) {
  if (groups.empty()) throw ConfigError("view_groups", "no groups given");
  std::set<std::size_t> seen;
  for (const auto& g : groups) {
    if (g.empty()) throw ConfigError("view_groups", "empty view group");
    for (std::size_t c : g) {
      if (c >= d) throw ConfigError("view_groups", "column " + std::to_string(c) + " outside feature dimension " + std::to_string(d));
      seen.insert(c);
    }
  }
  if (seen.size() != d) throw ConfigError("view_groups", "groups cover " + std::to_string(seen.size()) + " of " + std::to_string(d) + " features");
  ViewPartition p;
  p.columns = std::move(groups);
  return p;
}

/// Reads one view per line, comma-separated 0-based column indices.
inline ViewPartition load_view_groups(const std::string& path, std::size_t d) {
  std::ifstream in(path);
  if (!in) throw ConfigError("view_groups", "cannot open " + path);
  std::vector<std::vector<std::size_t>> groups;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    std::vector<std::size_t> g;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        g.push_back(static_cast<std::size_t>(std::stoul(tok)));
      } catch (const std::exception&) {
        throw ConfigError("view_groups", "bad column index '" + tok + "' in " + path);
      }
    }
    groups.push_back(std::move(g));
  }
  return partition_from_groups(std::move(groups), d);
}

/// D̂^{-1/2} Â D̂^{-1/2} with Â = A + I and D̂ the degree matrix of Â.
inline Tensor normalize_adjacency(const Tensor& a) {
  const std::size_t n = a.rows();
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 1.0;
    for (std::size_t j = 0; j < n; ++j) deg += a(i, j);
    inv_sqrt[i] = 1.0 / std::sqrt(deg);
  }
  Tensor out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double ahat = a(i, j) + (i == j ? 1.0 : 0.0);
      if (ahat != 0.0) out(i, j) = inv_sqrt[i] * ahat * inv_sqrt[j];
    }
  return out;
}

/// Same operator as normalize_adjacency, built straight from the edge list.
inline std::shared_ptr<const SparseMatrix> normalized_adjacency_sparse(const Tensor& a) {
  const std::size_t n = a.rows();
  auto s = std::make_shared<SparseMatrix>();
  s->rows = s->cols = n;
  s->row_ptr.assign(n + 1, 0);
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 1.0;
    for (std::size_t j = 0; j < n; ++j) deg += a(i, j);
    inv_sqrt[i] = 1.0 / std::sqrt(deg);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double ahat = a(i, j) + (i == j ? 1.0 : 0.0);
      if (ahat != 0.0) {
        s->col_idx.push_back(j);
        s->weights.push_back(inv_sqrt[i] * ahat * inv_sqrt[j]);
      }
    }
    s->row_ptr[i + 1] = s->col_idx.size();
  }
  return s;
}

/// Per view: a bias-free linear embedding followed by one GCN layer.
struct ViewEncoder {
  std::vector<Parameter> embed;  // dᵢ × e
  std::vector<Parameter> gcn;    // e × h

  std::size_t view_count() const noexcept { return embed.size(); }

  std::size_t output_width() const {
    std::size_t w = 0;
    for (const auto& p : gcn) w += p.value.cols();
    return w;
  }

  /// Glorot-initialized encoder with eᵢ = hᵢ = ⌈latent_width / k⌉.
  static ViewEncoder create(const ViewPartition& partition, std::size_t latent_width, Rng& rng) {
    ViewEncoder enc;
    const std::size_t k = partition.view_count();
    const std::size_t w = (latent_width + k - 1) / k;
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t di = partition.columns[i].size();
      enc.embed.emplace_back("view" + std::to_string(i) + ".embed", glorot_uniform(di, w, rng));
      enc.gcn.emplace_back("view" + std::to_string(i) + ".gcn", glorot_uniform(w, w, rng));
    }
    return enc;
  }

  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out;
    for (auto& p : embed) out.push_back(&p);
    for (auto& p : gcn) out.push_back(&p);
    return out;
  }
};

/// Z = [U₁ | … | U_k], Uᵢ = ReLU(Â_norm · X[:, viewᵢ] · Embedᵢ · Wᵢ).
inline Var encode_views(Var features, std::shared_ptr<const SparseMatrix> norm_adj, const ViewPartition& partition,
                        ViewEncoder& encoder) {
  if (partition.view_count() != encoder.view_count()) {
    throw ContractError("encode_views: partition has " + std::to_string(partition.view_count()) + " views, encoder " +
                        std::to_string(encoder.view_count()));
  }
  Tape& tape = *features.tape();
  std::vector<Var> blocks;
  blocks.reserve(partition.view_count());
  for (std::size_t i = 0; i < partition.view_count(); ++i) {
    const auto& cols = partition.columns[i];
    if (cols.size() != encoder.embed[i].value.rows()) {
      throw ContractError("encode_views: view " + std::to_string(i) + " has " + std::to_string(cols.size()) +
                          " columns but its embedding expects " + std::to_string(encoder.embed[i].value.rows()));
    }
    for (std::size_t c : cols)
      if (c >= features.cols()) throw ContractError("encode_views: partition column outside graph feature dimension");
    Var xi = ad::gather_cols(features, cols);
    Var hi = ad::matmul(xi, tape.parameter(encoder.embed[i]));
    // Propagate after the width-reducing product: Â(XE)W == (Â X E) W.
    Var agg = ad::propagate(norm_adj, hi);
    blocks.push_back(ad::relu(ad::matmul(agg, tape.parameter(encoder.gcn[i]))));
  }
  return blocks.size() == 1 ? blocks.front() : ad::concat_cols(blocks);
}

inline Var encode_views(Tape& tape, const Graph& g, const ViewPartition& partition, ViewEncoder& encoder) {
  return encode_views(tape.constant(g.features), normalized_adjacency_sparse(g.adjacency), partition, encoder);
}

}  // namespace mvprune
