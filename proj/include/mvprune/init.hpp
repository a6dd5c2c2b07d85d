#pragma once

#include <cmath>
#include <random>

#include "mvprune/rng.hpp"
#include "mvprune/tensor.hpp"

namespace mvprune {

/// Uniform in ±sqrt(6 / (fan_in + fan_out)).
inline Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-limit, limit);
  Tensor t(fan_in, fan_out);
  for (double& v : t.values()) v = u(rng);
  return t;
}

}  // namespace mvprune
