#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "mvprune/autodiff.hpp"
#include "mvprune/error.hpp"
#include "mvprune/graph.hpp"
#include "mvprune/init.hpp"

namespace mvprune {

/// Feature decoder X̃ = ReLU(Z·W + b), b shared across nodes (1×d).
struct ReconHead {
  Parameter weight;  // h_f × d
  Parameter bias;    // 1 × d

  static ReconHead create(std::size_t latent_width, std::size_t feature_dim, Rng& rng) {
    return {Parameter("recon.weight", glorot_uniform(latent_width, feature_dim, rng)),
            Parameter("recon.bias", Tensor(1, feature_dim))};
  }

  std::vector<Parameter*> parameters() { return {&weight, &bias}; }
};

struct Reconstruction {
  Var adjacency;  // sigmoid(Z Zᵀ), n×n
  Var features;   // n×d
};

inline Reconstruction reconstruct(Var z, ReconHead& head) {
  Tape& t = *z.tape();
  Var gram = ad::matmul(z, ad::transpose(z));
  Var xhat = ad::relu(ad::add_row(ad::matmul(z, t.parameter(head.weight)), t.parameter(head.bias)));
  return {ad::sigmoid(gram), xhat};
}

struct ReconLosses {
  Var adjacency;  // La
  Var features;   // Lx
  Var total;      // Lr = La + Lx
};

inline constexpr double kProbabilityClamp = 1e-7;

/// La: mean binary cross-entropy over all n² entries (diagonal included) with
/// Ã clamped to [ε, 1−ε]. Lx: squared Frobenius residual over n·d.
inline ReconLosses recon_losses(const Tensor& adjacency, const Tensor& features, Var a_hat, Var x_hat) {
  dense::require_same_shape(adjacency, a_hat.value(), "recon_losses(adjacency)");
  dense::require_same_shape(features, x_hat.value(), "recon_losses(features)");
  Tape& t = *a_hat.tape();
  const double n = static_cast<double>(adjacency.rows());
  const double d = static_cast<double>(features.cols());
  Var p = ad::clamp(a_hat, kProbabilityClamp, 1.0 - kProbabilityClamp);
  Tensor not_a(adjacency.rows(), adjacency.cols());
  for (std::size_t i = 0; i < not_a.size(); ++i) not_a[i] = 1.0 - adjacency[i];
  Var pos = ad::sum(ad::mul_const(ad::log(p), adjacency));
  Var neg = ad::sum(ad::mul_const(ad::log(ad::affine(p, -1.0, 1.0)), not_a));
  Var la = ad::scale(ad::add(pos, neg), -1.0 / (n * n));
  Var diff = ad::sub(t.constant(features), x_hat);
  Var lx = ad::scale(ad::sum(ad::mul(diff, diff)), 1.0 / (n * d));
  return {la, lx, ad::add(la, lx)};
}

/// s(vᵢ) = λ‖aᵢ − ãᵢ‖² + (1−λ)‖xᵢ − x̃ᵢ‖², evaluated off-tape.
inline std::vector<double> node_scores(const Tensor& adjacency, const Tensor& features, const Tensor& a_hat,
                                       const Tensor& x_hat, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda", "must lie in [0, 1]");
  dense::require_same_shape(adjacency, a_hat, "node_scores(adjacency)");
  dense::require_same_shape(features, x_hat, "node_scores(features)");
  const std::size_t n = adjacency.rows();
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    double ra = 0.0, rx = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double e = adjacency(i, j) - a_hat(i, j);
      ra += e * e;
    }
    for (std::size_t j = 0; j < features.cols(); ++j) {
      const double e = features(i, j) - x_hat(i, j);
      rx += e * e;
    }
    s[i] = lambda * ra + (1.0 - lambda) * rx;
  }
  return s;
}

struct Indicator {
  std::vector<double> keep;  // 1 = keep, 0 = drop
  double mu = 0.0;
  double sigma = 0.0;
  double threshold = 0.0;

  std::size_t dropped() const {
    std::size_t d = 0;
    for (double k : keep) d += k == 0.0 ? 1 : 0;
    return d;
  }
  std::size_t kept() const { return keep.size() - dropped(); }
};

/// Keeps node i iff sigmoid(−sᵢ + μ + c·σ) ≥ 0.5, i.e. sᵢ ≤ μ + c·σ, with μ and
/// σ the mean and population standard deviation of the graph's scores.
inline Indicator build_indicator(const std::vector<double>& scores, double c) {
  if (scores.empty()) throw ContractError("build_indicator: empty score vector");
  const double n = static_cast<double>(scores.size());
  double mu = 0.0;
  for (double s : scores) mu += s;
  mu /= n;
  double var = 0.0;
  for (double s : scores) var += (s - mu) * (s - mu);
  Indicator ind;
  ind.mu = mu;
  ind.sigma = std::sqrt(var / n);
  ind.threshold = mu + c * ind.sigma;
  ind.keep.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) ind.keep[i] = scores[i] <= ind.threshold ? 1.0 : 0.0;
  if (c > 0.0) {
    // Chebyshev: at most n / c² scores can exceed μ + cσ.
    const auto bound = static_cast<std::size_t>(std::floor(n / (c * c) + 1e-9));
    if (ind.dropped() > bound) {
      throw ContractError("build_indicator: " + std::to_string(ind.dropped()) + " nodes dropped, Chebyshev bound is " +
                          std::to_string(bound));
    }
  }
  return ind;
}

struct MaskedGraph {
  Tensor features;   // X′ = rows of dropped nodes zeroed
  Tensor adjacency;  // A′ = rows and columns of dropped nodes zeroed
};

inline MaskedGraph apply_mask(const Tensor& adjacency, const Tensor& features, const std::vector<double>& keep) {
  const std::size_t n = adjacency.rows();
  if (keep.size() != n || features.rows() != n) throw ShapeError("apply_mask: indicator length does not match node count");
  MaskedGraph m{features, adjacency};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < features.cols(); ++j) m.features(i, j) *= keep[i];
    for (std::size_t j = 0; j < n; ++j) m.adjacency(i, j) *= keep[i] * keep[j];
  }
  return m;
}

inline MaskedGraph apply_mask(const Graph& g, const std::vector<double>& keep) {
  return apply_mask(g.adjacency, g.features, keep);
}

struct PruneResult {
  std::vector<double> scores;
  Indicator indicator;
  MaskedGraph masked;
};

inline PruneResult prune_from_reconstruction(const Graph& g, const Tensor& a_hat, const Tensor& x_hat, double lambda, double c) {
  PruneResult r;
  r.scores = node_scores(g.adjacency, g.features, a_hat, x_hat, lambda);
  r.indicator = build_indicator(r.scores, c);
  r.masked = apply_mask(g, r.indicator.keep);
  return r;
}

}  // namespace mvprune
