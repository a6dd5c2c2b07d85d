#pragma once

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "mvprune/mvprune.hpp"

namespace mvtest {

using namespace mvprune;

inline Tensor random_tensor(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Tensor t(r, c);
  for (double& v : t.values()) v = n(rng);
  return t;
}

/// Random undirected graph on n nodes, connected through a random spanning path.
inline Graph random_graph(std::size_t n, std::size_t d, std::mt19937_64& rng, double p = 0.35) {
  Graph g;
  g.adjacency = Tensor(n, n);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t i = 1; i < n; ++i) g.adjacency(order[i - 1], order[i]) = g.adjacency(order[i], order[i - 1]) = 1.0;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (u(rng) < p) g.adjacency(i, j) = g.adjacency(j, i) = 1.0;
  g.features = random_tensor(n, d, rng);
  g.label = 0;
  return g;
}

/// Random graph without the connectivity path (may contain isolated nodes).
inline Graph random_sparse_graph(std::size_t n, std::size_t d, std::mt19937_64& rng, double p) {
  Graph g;
  g.adjacency = Tensor(n, n);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (u(rng) < p) g.adjacency(i, j) = g.adjacency(j, i) = 1.0;
  g.features = random_tensor(n, d, rng);
  return g;
}

inline Dataset random_dataset(std::size_t graphs, std::size_t classes, std::size_t d, std::mt19937_64& rng) {
  Dataset ds;
  ds.name = "RAND";
  ds.class_count = classes;
  ds.feature_dim = d;
  ds.attribute_count = d;
  std::uniform_int_distribution<std::size_t> size(4, 9);
  for (std::size_t i = 0; i < graphs; ++i) {
    Graph g = random_graph(size(rng), d, rng);
    g.label = i % classes;
    ds.graphs.push_back(std::move(g));
  }
  return ds;
}

struct GradCheck {
  double worst = 0.0;  // largest per-parameter relative error
  std::string where;
};

/// Central finite differences over every entry of `params`. `loss` must build a
/// fresh scalar on the given tape from the current parameter values.
inline GradCheck check_gradients(const std::vector<Parameter*>& params, const std::function<Var(Tape&)>& loss, double h = 1e-5) {
  for (Parameter* p : params) p->zero_grad();
  {
    Tape t;
    Var l = loss(t);
    t.backward(l);
  }
  GradCheck out;
  for (Parameter* p : params) {
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double keep = p->value[i];
      p->value[i] = keep + h;
      double up, down;
      {
        Tape t;
        up = loss(t).value().item();
      }
      p->value[i] = keep - h;
      {
        Tape t;
        down = loss(t).value().item();
      }
      p->value[i] = keep;
      const double num = (up - down) / (2.0 * h);
      const double ana = p->grad[i];
      diff += (num - ana) * (num - ana);
      na += ana * ana;
      nn += num * num;
    }
    const double denom = std::sqrt(na) + std::sqrt(nn);
    const double rel = denom < 1e-10 ? std::sqrt(diff) : std::sqrt(diff) / denom;
    if (rel > out.worst) {
      out.worst = rel;
      out.where = p->name;
    }
  }
  return out;
}

}  // namespace mvtest
