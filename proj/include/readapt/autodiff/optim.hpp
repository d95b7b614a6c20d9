#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "readapt/autodiff/graph.hpp"

namespace readapt {

/// acc' = rho*acc + (1-rho)*g^2 ; w' = w - lr*g/sqrt(acc'+eps), elementwise.
inline void rmsprop_update(Tensor& w, const Tensor& g, Tensor& acc, double rho, double eps,
                           double lr) {
  if (w.shape() != g.shape() || w.shape() != acc.shape())
    throw DimensionError("rmsprop: parameter " + shape_str(w.shape()) + ", gradient " +
                         shape_str(g.shape()) + ", accumulator " + shape_str(acc.shape()));
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc[i] = rho * acc[i] + (1.0 - rho) * g[i] * g[i];
    w[i] -= lr * g[i] / std::sqrt(acc[i] + eps);
  }
}

/// RMSProp with one accumulator per parameter, keyed by parameter name.
class RmsProp {
 public:
  explicit RmsProp(double rho = 0.9, double eps = 1e-8) : rho_(rho), eps_(eps) {
    require(rho > 0.0 && rho < 1.0, "rmsprop: rho must lie in (0,1)");
    require(eps > 0.0, "rmsprop: eps must be positive");
  }

  double rho() const { return rho_; }
  double eps() const { return eps_; }

  /// Updates every parameter that has an entry in grads.
  void step(const std::vector<Parameter*>& params,
            const std::unordered_map<const Parameter*, Tensor>& grads, double lr) {
    for (Parameter* p : params) {
      auto it = grads.find(p);
      if (it == grads.end()) continue;
      auto [acc, inserted] = acc_.try_emplace(p->name, p->value.shape(), 0.0);
      rmsprop_update(p->value, it->second, acc->second, rho_, eps_, lr);
    }
  }

  const std::map<std::string, Tensor>& accumulators() const { return acc_; }
  std::map<std::string, Tensor>& accumulators() { return acc_; }

 private:
  double rho_;
  double eps_;
  std::map<std::string, Tensor> acc_;
};

/// Saturates every entry into [-c, c].
inline void clip_parameters(Tensor& t, double c) {
  require(c > 0.0, "clip_parameters: bound must be positive");
  for (auto& v : t.data()) v = std::clamp(v, -c, c);
}

inline void clip_parameters(const std::vector<Parameter*>& params, double c) {
  require(c > 0.0, "clip_parameters: bound must be positive");
  for (Parameter* p : params) clip_parameters(p->value, c);
}

}  // namespace readapt
