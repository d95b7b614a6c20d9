#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "readapt/autodiff/graph.hpp"
#include "readapt/autodiff/init.hpp"
#include "readapt/autodiff/optim.hpp"

namespace readapt {

/// Linear map v -> W v (+ b). Used both for the adapter G and for the
/// reverse adapter G'.
struct LinearMap {
  Parameter weight;  // d×d, applied to column vectors
  Parameter bias;    // 1×d, only when has_bias
  bool has_bias = false;

  LinearMap() = default;
  /// Identity plus U(-noise, noise).
  LinearMap(const std::string& name, std::size_t dim, Rng& rng, bool with_bias = false,
            double noise = 0.01)
      : has_bias(with_bias) {
    require(dim > 0, "linear map: dimension must be positive");
    Tensor w = uniform(rng, {dim, dim}, -noise, noise);
    for (std::size_t i = 0; i < dim; ++i) w(i, i) += 1.0;
    weight = {name + ".w", std::move(w), true};
    if (with_bias) bias = {name + ".b", Tensor::matrix(1, dim), true};
  }

  std::size_t dim() const { return weight.value.rows(); }
  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out{&weight};
    if (has_bias) out.push_back(&bias);
    return out;
  }
};

using AdapterParams = LinearMap;
using ReverseAdapterParams = LinearMap;

/// Critic d -> hidden (tanh) -> 1, with a linear (unsquashed) output.
struct DiscriminatorParams {
  Parameter w1, b1, w2, b2;

  DiscriminatorParams() = default;
  DiscriminatorParams(std::size_t dim, std::size_t hidden, Rng& rng) {
    w1 = {"disc.w1", glorot_uniform(rng, dim, hidden), true};
    b1 = {"disc.b1", Tensor::matrix(1, hidden), true};
    w2 = {"disc.w2", glorot_uniform(rng, hidden, 1), true};
    b2 = {"disc.b2", Tensor::matrix(1, 1), true};
  }

  std::size_t dim() const { return w1.value.rows(); }
  std::vector<Parameter*> parameters() { return {&w1, &b1, &w2, &b2}; }
};

/// Applies G to each row of e (n×d). A dropout mask, when given, multiplies
/// the output (training only).
inline NodeId apply_adapter(Graph& g, LinearMap& G, NodeId e, const Tensor* dropout_mask = nullptr) {
  if (g.value(e).cols() != G.dim())
    throw DimensionError("apply_adapter: input " + shape_str(g.value(e).shape()) +
                         " for adapter of dim " + std::to_string(G.dim()));
  NodeId out = g.matmul_nt(e, g.parameter(G.weight));
  if (G.has_bias) out = g.add_row(out, g.parameter(G.bias));
  if (dropout_mask) out = g.dropout(out, *dropout_mask);
  return out;
}

/// Critic scores of each row of v (n×d), as an n×1 column.
inline NodeId discriminator_score(Graph& g, DiscriminatorParams& D, NodeId v) {
  if (g.value(v).cols() != D.dim())
    throw DimensionError("discriminator_score: input " + shape_str(g.value(v).shape()) +
                         " for critic of dim " + std::to_string(D.dim()));
  NodeId h = g.tanh(g.add_row(g.matmul(v, g.parameter(D.w1)), g.parameter(D.b1)));
  return g.add_row(g.matmul(h, g.parameter(D.w2)), g.parameter(D.b2));
}

/// Mean over rows of ||target - mapped||^2.
inline NodeId mse_rows(Graph& g, NodeId mapped, NodeId targets) {
  const double n = static_cast<double>(g.value(mapped).rows());
  return g.scale(g.sum(g.square(g.sub(targets, mapped))), 1.0 / n);
}

/// mean(D(fake)) - mean(D(real)).
inline NodeId wgan_d_loss(Graph& g, DiscriminatorParams& D, NodeId fake, NodeId real) {
  require(g.value(fake).rows() > 0 && g.value(real).rows() > 0, "wgan_d_loss: empty batch");
  return g.sub(g.mean(discriminator_score(g, D, fake)), g.mean(discriminator_score(g, D, real)));
}

/// -mean(D(fake)).
inline NodeId wgan_g_loss(Graph& g, DiscriminatorParams& D, NodeId fake) {
  return g.scale(g.mean(discriminator_score(g, D, fake)), -1.0);
}

/// Mean over rows of ||G'(G(e)) - e||^2.
inline NodeId reconstruction_loss(Graph& g, LinearMap& G, LinearMap& G_rev, NodeId e) {
  NodeId back = apply_adapter(g, G_rev, apply_adapter(g, G, e));
  return mse_rows(g, back, e);
}

/// Fine-tuned task-space vectors of the seen relations, keyed by relation id.
class PseudoTargetStore {
 public:
  PseudoTargetStore() = default;
  explicit PseudoTargetStore(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return targets_.size(); }
  bool empty() const { return targets_.empty(); }
  bool contains(std::size_t rel) const { return targets_.count(rel) != 0; }

  void set(std::size_t rel, std::vector<double> v) {
    if (v.size() != dim_)
      throw DimensionError("pseudo targets: vector of " + std::to_string(v.size()) + " for dim " +
                           std::to_string(dim_));
    targets_[rel] = std::move(v);
  }
  const std::vector<double>& get(std::size_t rel) const {
    auto it = targets_.find(rel);
    if (it == targets_.end())
      throw ContractError("pseudo targets: relation " + std::to_string(rel) + " is not seen");
    return it->second;
  }
  std::vector<std::size_t> keys() const {
    std::vector<std::size_t> out;
    for (const auto& [k, v] : targets_) out.push_back(k);
    return out;
  }

  /// Stacks the targets of `rels` into an n×d matrix.
  Tensor rows(const std::vector<std::size_t>& rels) const {
    Tensor t = Tensor::matrix(rels.size(), dim_);
    for (std::size_t i = 0; i < rels.size(); ++i) {
      const auto& v = get(rels[i]);
      std::copy(v.begin(), v.end(), t.row(i).begin());
    }
    return t;
  }

  friend bool operator==(const PseudoTargetStore&, const PseudoTargetStore&) = default;

 private:
  std::size_t dim_ = 0;
  std::map<std::size_t, std::vector<double>> targets_;
};

/// Stacks rows `ids` of an embedding matrix.
inline Tensor select_rows(const Tensor& table, const std::vector<std::size_t>& ids) {
  Tensor t = Tensor::matrix(ids.size(), table.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= table.rows()) throw DimensionError("select_rows: id out of range");
    auto src = table.row(ids[i]);
    std::copy(src.begin(), src.end(), t.row(i).begin());
  }
  return t;
}

/// Basic adapter objective over a batch of seen relations:
/// mean over the batch of ||e_hat - G(e_g)||^2.
inline NodeId mse_adapter_loss(Graph& g, const PseudoTargetStore& targets, LinearMap& G,
                               const Tensor& general, const std::vector<std::size_t>& batch,
                               const Tensor* dropout_mask = nullptr) {
  require(!batch.empty(), "mse_adapter_loss: empty batch");
  for (auto r : batch)
    require(targets.contains(r),
            "mse_adapter_loss: relation " + std::to_string(r) + " is not a seen relation");
  NodeId mapped = apply_adapter(g, G, g.constant(select_rows(general, batch)), dropout_mask);
  return mse_rows(g, mapped, g.constant(targets.rows(batch)));
}

/// Reconstruction objective over any relations (seen or unseen).
inline NodeId reconstruction_loss(Graph& g, LinearMap& G, LinearMap& G_rev, const Tensor& general,
                                  const std::vector<std::size_t>& batch) {
  require(!batch.empty(), "reconstruction_loss: empty batch");
  return reconstruction_loss(g, G, G_rev, g.constant(select_rows(general, batch)));
}

/// G, optional G' and optional D of one model variant.
struct AdapterBundle {
  std::optional<LinearMap> forward;
  std::optional<LinearMap> reverse;
  std::optional<DiscriminatorParams> critic;

  std::vector<Parameter*> generator_parameters() {
    std::vector<Parameter*> out;
    if (forward) for (auto* p : forward->parameters()) out.push_back(p);
    if (reverse) for (auto* p : reverse->parameters()) out.push_back(p);
    return out;
  }
  std::vector<Parameter*> critic_parameters() {
    return critic ? critic->parameters() : std::vector<Parameter*>{};
  }
};

}  // namespace readapt
