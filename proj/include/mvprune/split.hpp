#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "mvprune/error.hpp"
#include "mvprune/graph.hpp"
#include "mvprune/rng.hpp"

namespace mvprune {

struct SplitSpec {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
};

struct SplitSizes {
  std::size_t train, val, test;
};

/// 81/9/10 with each share floored and the remainder added to train.
inline SplitSizes split_sizes(std::size_t n) {
  const std::size_t val = n * 9 / 100;
  const std::size_t test = n * 10 / 100;
  return {n - val - test, val, test};
}

/// Stratified 81/9/10 split. Graphs of each class are shuffled, then classes
/// are interleaved proportionally so every prefix of the ordering roughly
/// preserves class ratios; test takes the first block, val the next, train the rest.
inline SplitSpec split(const Dataset& ds, std::uint64_t seed) {
  const std::size_t n = ds.graphs.size();
  if (n < 12) throw SplitError("split: need at least 12 graphs, dataset has " + std::to_string(n));
  Rng rng = stream(seed, "split");
  std::vector<std::vector<std::size_t>> by_class(std::max<std::size_t>(ds.class_count, 1));
  for (std::size_t g = 0; g < n; ++g) {
    const std::size_t c = ds.graphs[g].label;
    if (c >= by_class.size()) by_class.resize(c + 1);
    by_class[c].push_back(g);
  }
  struct Slot {
    double key;
    std::size_t cls, rank, graph;
  };
  std::vector<Slot> order;
  order.reserve(n);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& v = by_class[c];
    std::shuffle(v.begin(), v.end(), rng);
    for (std::size_t r = 0; r < v.size(); ++r)
      order.push_back({(static_cast<double>(r) + 0.5) / static_cast<double>(v.size()), c, r, v[r]});
  }
  std::sort(order.begin(), order.end(), [](const Slot& a, const Slot& b) {
    if (a.key != b.key) return a.key < b.key;
    return a.cls < b.cls;
  });
  const SplitSizes sz = split_sizes(n);
  SplitSpec s;
  s.seed = seed;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t g = order[i].graph;
    if (i < sz.test) {
      s.test.push_back(g);
    } else if (i < sz.test + sz.val) {
      s.val.push_back(g);
    } else {
      s.train.push_back(g);
    }
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

enum class FeatureNorm { None, Standardize, MinMax };

inline std::string to_string(FeatureNorm f) {
  switch (f) {
    case FeatureNorm::None: return "none";
    case FeatureNorm::Standardize: return "standardize";
    case FeatureNorm::MinMax: return "minmax";
  }
  return "none";
}

inline FeatureNorm parse_feature_norm(const std::string& s) {
  if (s == "none") return FeatureNorm::None;
  if (s == "standardize") return FeatureNorm::Standardize;
  if (s == "minmax") return FeatureNorm::MinMax;
  throw ConfigError("feature_norm", "unknown value '" + s + "' (valid: none, standardize, minmax)");
}

/// Per-column affine map fitted on the training graphs; applied only to the
/// real-attribute columns (the one-hot label block is left untouched).
struct FeatureScaler {
  std::size_t first_col = 0;
  std::vector<double> shift;
  std::vector<double> scale;

  static FeatureScaler fit(const Dataset& ds, const std::vector<std::size_t>& train, FeatureNorm mode) {
    FeatureScaler s;
    s.first_col = ds.node_label_count;
    const std::size_t m = ds.attribute_count;
    s.shift.assign(m, 0.0);
    s.scale.assign(m, 1.0);
    if (mode == FeatureNorm::None || m == 0) return s;
    std::vector<double> sum(m, 0.0), sq(m, 0.0), lo(m, INFINITY), hi(m, -INFINITY);
    double count = 0.0;
    for (std::size_t g : train) {
      const Tensor& x = ds.graphs[g].features;
      for (std::size_t i = 0; i < x.rows(); ++i) {
        count += 1.0;
        for (std::size_t j = 0; j < m; ++j) {
          const double v = x(i, s.first_col + j);
          sum[j] += v;
          sq[j] += v * v;
          lo[j] = std::min(lo[j], v);
          hi[j] = std::max(hi[j], v);
        }
      }
    }
    if (count == 0.0) return s;
    for (std::size_t j = 0; j < m; ++j) {
      if (mode == FeatureNorm::Standardize) {
        const double mu = sum[j] / count;
        const double var = std::max(0.0, sq[j] / count - mu * mu);
        s.shift[j] = mu;
        s.scale[j] = var > 1e-24 ? 1.0 / std::sqrt(var) : 1.0;
      } else {
        s.shift[j] = lo[j];
        s.scale[j] = hi[j] - lo[j] > 1e-12 ? 1.0 / (hi[j] - lo[j]) : 1.0;
      }
    }
    return s;
  }

  Dataset apply(Dataset ds) const {
    for (Graph& g : ds.graphs)
      for (std::size_t i = 0; i < g.features.rows(); ++i)
        for (std::size_t j = 0; j < shift.size(); ++j) {
          double& v = g.features(i, first_col + j);
          v = (v - shift[j]) * scale[j];
        }
    return ds;
  }
};

}  // namespace mvprune
