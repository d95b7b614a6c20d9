#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "readapt/autodiff/graph.hpp"

namespace readapt {

struct GradCheckReport {
  std::vector<std::pair<std::string, double>> max_relative_error;  // per parameter
  double worst = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Builds the loss into a fresh graph and returns its scalar node.
using LossBuilder = std::function<NodeId(Graph&)>;

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

/// Compares backward() against central differences (f(w+h)-f(w-h))/2h for
/// every coordinate of every listed parameter.
inline GradCheckReport finite_difference_check(const LossBuilder& build,
                                               const std::vector<Parameter*>& params,
                                               double step, double tolerance) {
  require(step > 0.0, "finite_difference_check: step must be positive");
  std::unordered_map<const Parameter*, Tensor> analytic;
  {
    Graph g;
    NodeId loss = build(g);
    analytic = g.parameter_gradients(loss);
  }
  auto eval = [&build] {
    Graph g;
    return g.value(build(g)).item();
  };

  GradCheckReport rep;
  rep.tolerance = tolerance;
  for (Parameter* p : params) {
    const Tensor* a = nullptr;
    if (auto it = analytic.find(p); it != analytic.end()) a = &it->second;
    double worst = 0.0;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double w = p->value[i];
      p->value[i] = w + step;
      const double fp = eval();
      p->value[i] = w - step;
      const double fm = eval();
      p->value[i] = w;
      const double numeric = (fp - fm) / (2.0 * step);
      worst = std::max(worst, relative_error(a ? (*a)[i] : 0.0, numeric));
    }
    rep.max_relative_error.emplace_back(p->name, worst);
    rep.worst = std::max(rep.worst, worst);
  }
  rep.pass = rep.worst <= tolerance;
  return rep;
}

}  // namespace readapt
