#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "mvprune/autodiff.hpp"

namespace mvprune {

/// Adam with bias correction. Moment buffers are allocated lazily per parameter.
class Adam {
 public:
  Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  /// Applies one update to each parameter from its accumulated `grad`, scaled by `grad_scale`.
  void step(const std::vector<Parameter*>& params, double grad_scale = 1.0) {
    for (Parameter* p : params) {
      State& s = states_[p];
      if (s.m.empty()) {
        s.m = Tensor(p->value.rows(), p->value.cols());
        s.v = Tensor(p->value.rows(), p->value.cols());
      }
      ++s.t;
      const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(s.t));
      const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(s.t));
      for (std::size_t i = 0; i < p->value.size(); ++i) {
        const double g = p->grad[i] * grad_scale;
        s.m[i] = beta1_ * s.m[i] + (1.0 - beta1_) * g;
        s.v[i] = beta2_ * s.v[i] + (1.0 - beta2_) * g * g;
        p->value[i] -= lr_ * (s.m[i] / c1) / (std::sqrt(s.v[i] / c2) + eps_);
      }
    }
  }

  /// Forget moments (used when parameters are restored from a snapshot).
  void reset() { states_.clear(); }

 private:
  struct State {
    Tensor m, v;
    long t = 0;
  };
  double lr_, beta1_, beta2_, eps_;
  // Keyed by address: models are not moved while an optimizer is attached.
  std::map<const Parameter*, State> states_;
};

}  // namespace mvprune
