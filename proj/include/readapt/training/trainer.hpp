#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <optional>
#include <vector>

#include "readapt/adapter/adapter.hpp"
#include "readapt/autodiff/init.hpp"
#include "readapt/autodiff/optim.hpp"
#include "readapt/data/types.hpp"
#include "readapt/eval/metrics.hpp"
#include "readapt/eval/predict.hpp"
#include "readapt/training/config.hpp"
#include "readapt/training/model.hpp"
#include "readapt/training/sampling.hpp"

namespace readapt {

/// Inputs shared by every training run.
struct TrainingData {
  const DatasetSplit& split;
  const KnowledgeGraph& kg;
  const EmbeddingTable& words;
  const EmbeddingTable& relations;
};

/// Observers for tests and tooling.
struct TrainHooks {
  std::function<void(const TrainedModel&)> after_critic_update;
  std::function<void(const TrainedModel&, std::size_t epoch, std::size_t batch)> after_batch;
};

/// Relation inventory of a run: every relation of the split or the graph.
inline RelationVocabulary relation_inventory(const TrainingData& data) {
  return RelationVocabulary::from_split(data.split, data.kg.relation_names());
}

namespace detail {

inline std::vector<std::size_t> first_n_shuffled(std::vector<std::size_t> ids, std::size_t n, Rng& rng) {
  std::shuffle(ids.begin(), ids.end(), rng);
  if (ids.size() > n) ids.resize(n);
  std::sort(ids.begin(), ids.end());
  return ids;
}

// Optimizers and relation batches of one training step.
struct StepContext {
  RmsProp detector_opt;
  RmsProp critic_opt;
  std::vector<std::size_t> seen_batch;  // ⊆ S, for the MSE / adversarial terms
  std::vector<std::size_t> all_batch;   // ⊆ S ∪ U, for the reconstruction term
};

}  // namespace detail

/// n_critic critic updates, each minimizing mean D(G(e_g)) - mean D(ê) over
/// `seen_batch` and followed by clipping to [-c, c]. Returns the number of
/// updates made.
inline std::size_t critic_updates(TrainedModel& m, const std::vector<std::size_t>& seen_batch, RmsProp& opt,
                                  const TrainHooks& hooks = {}) {
  require(m.adapters.critic && m.adapters.forward, "critic_updates: model has no critic");
  const auto& cfg = m.config;
  const Tensor fake_in = select_rows(m.general, seen_batch);
  const Tensor real = m.targets.rows(seen_batch);
  auto params = m.adapters.critic_parameters();
  for (std::size_t s = 0; s < cfg.critic_steps; ++s) {
    Graph g;
    const NodeId fake = apply_adapter(g, *m.adapters.forward, g.constant(fake_in));
    const NodeId loss = wgan_d_loss(g, *m.adapters.critic, fake, g.constant(real));
    opt.step(params, g.parameter_gradients(loss), cfg.learning_rate);
    clip_parameters(params, cfg.clip);
    if (hooks.after_critic_update) hooks.after_critic_update(m);
  }
  return cfg.critic_steps;
}

/// λ_a·(MSE or generator loss) + λ_r·reconstruction, with the terms the
/// variant uses. Returns nullopt when the variant has none.
inline std::optional<NodeId> adapter_objective(Graph& g, TrainedModel& m, const std::vector<std::size_t>& seen_batch,
                                               const std::vector<std::size_t>& all_batch) {
  const auto& cfg = m.config;
  std::optional<NodeId> total;
  auto add = [&](NodeId term, double w) {
    const NodeId t = g.scale(term, w);
    total = total ? g.add(*total, t) : t;
  };
  if (uses_mse(m.variant)) add(mse_adapter_loss(g, m.targets, *m.adapters.forward, m.general, seen_batch), cfg.adapter_weight);
  if (uses_adversary(m.variant)) {
    const NodeId fake = apply_adapter(g, *m.adapters.forward, g.constant(select_rows(m.general, seen_batch)));
    add(wgan_g_loss(g, *m.adapters.critic, fake), cfg.adapter_weight);
  }
  if (uses_reconstruction(m.variant))
    add(reconstruction_loss(g, *m.adapters.forward, *m.adapters.reverse, m.general, all_batch),
        cfg.reconstruction_weight);
  return total;
}

/// One adversarial cycle: n_critic critic updates, then one generator update
/// of G (and G') on the adapter objective alone.
inline void wgan_alternation_step(TrainedModel& m, const std::vector<std::size_t>& seen_batch,
                                  const std::vector<std::size_t>& all_batch, RmsProp& critic_opt,
                                  RmsProp& generator_opt, const TrainHooks& hooks = {}) {
  require(uses_adversary(m.variant), "wgan_alternation_step: variant is not adversarial");
  critic_updates(m, seen_batch, critic_opt, hooks);
  Graph g;
  const NodeId loss = *adapter_objective(g, m, seen_batch, all_batch);
  generator_opt.step(m.adapters.generator_parameters(), g.parameter_gradients(loss), m.config.learning_rate);
}

/// Detector loss (hinge ranking over cosine scores) of one batch of samples,
/// plus the variant's adapter terms.
inline NodeId batch_loss(Graph& g, TrainedModel& m, const std::vector<const QASample*>& batch,
                         const std::vector<std::size_t>& train_relations, Rng& rng,
                         const std::vector<std::size_t>& seen_batch, const std::vector<std::size_t>& all_batch) {
  const auto& cfg = m.config;
  std::vector<std::vector<std::size_t>> questions;
  std::vector<std::size_t> gold;
  for (const auto* s : batch) {
    questions.push_back(m.words.ids(s->question));
    gold.push_back(m.relations.id(s->relation));
  }
  // Negatives per sample, then the union of relations to encode.
  std::vector<std::vector<std::size_t>> negs;
  std::vector<std::size_t> used = gold;
  for (std::size_t gid : gold) {
    std::vector<std::size_t> pool;
    for (std::size_t r : train_relations)
      if (r != gid) pool.push_back(r);
    negs.push_back(sample_negatives(gid, pool, cfg.negatives, rng));
    used.insert(used.end(), negs.back().begin(), negs.back().end());
  }
  std::sort(used.begin(), used.end());
  used.erase(std::unique(used.begin(), used.end()), used.end());
  auto col = [&](std::size_t rel) {
    return static_cast<std::size_t>(std::lower_bound(used.begin(), used.end(), rel) - used.begin());
  };
  std::vector<std::size_t> pos_col;
  for (auto& n : negs)
    for (auto& r : n) r = col(r);
  for (std::size_t gid : gold) pos_col.push_back(col(gid));

  std::optional<Tensor> mask;
  if (has_mapping(m.variant) && cfg.dropout > 0.0) mask = dropout_mask(rng, {used.size(), m.relation_dim()}, cfg.dropout);
  const NodeId rv = m.relation_vectors(g, used, mask ? &*mask : nullptr);
  const NodeId r = m.detector.encode_relations(g, m.names_of(used), rv);
  const NodeId q = m.detector.encode_questions(g, questions);
  const NodeId scores = g.matmul_nt(g.normalize_rows(q), g.normalize_rows(r));
  NodeId loss = hinge_ranking_loss(g, scores, pos_col, negs, cfg.margin);
  if (auto extra = adapter_objective(g, m, seen_batch, all_batch)) loss = g.add(loss, *extra);
  return loss;
}

/// Runs the epoch loop of any variant with early stopping on Dev-seen micro
/// accuracy; restores the best epoch's parameters.
inline void fit(TrainedModel& m, const TrainingData& data, const TrainHooks& hooks = {}) {
  const auto& cfg = m.config;
  const auto& train = data.split.train;
  require(!train.empty(), "training: empty training data");
  std::vector<std::size_t> all_relations(m.relations.size());
  std::iota(all_relations.begin(), all_relations.end(), std::size_t{0});
  const auto train_relations = cfg.negatives_from_all ? all_relations : m.relations.seen_ids();
  require(train_relations.size() >= 2, "training: need at least two relations for negative sampling");
  const CandidateIndex index(data.kg, m.relations);

  detail::StepContext ctx{RmsProp(cfg.rmsprop_rho, cfg.rmsprop_eps), RmsProp(cfg.rmsprop_rho, cfg.rmsprop_eps), {}, {}};
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double best = -1.0;
  std::size_t stale = 0;
  auto best_state = m.snapshot();
  auto params = m.trainable_parameters();

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const std::uint64_t epoch_seed = derive_seed(cfg.seed, 1000 + epoch);
    Rng shuffle_rng(epoch_seed);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochLog row;
    row.epoch = epoch;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size, ++batches) {
      Rng rng(derive_seed(epoch_seed, batches + 1));
      Rng critic_rng(derive_seed(epoch_seed ^ 0xC217C0FFEEULL, batches + 1));
      std::vector<const QASample*> batch;
      for (std::size_t i = begin; i < std::min(order.size(), begin + cfg.batch_size); ++i)
        batch.push_back(&train[order[i]]);
      if (needs_targets(m.variant)) ctx.seen_batch = detail::first_n_shuffled(m.targets.keys(), cfg.batch_size, critic_rng);
      if (uses_reconstruction(m.variant))
        ctx.all_batch = detail::first_n_shuffled(all_relations, cfg.batch_size, critic_rng);
      if (uses_adversary(m.variant)) row.critic_updates += critic_updates(m, ctx.seen_batch, ctx.critic_opt, hooks);

      Graph g;
      const NodeId loss = batch_loss(g, m, batch, train_relations, rng, ctx.seen_batch, ctx.all_batch);
      ctx.detector_opt.step(params, g.parameter_gradients(loss), cfg.learning_rate);
      if (uses_adversary(m.variant)) ++row.generator_updates;
      row.loss += g.value(loss).item();
      if (hooks.after_batch) hooks.after_batch(m, epoch, batches);
    }
    row.loss /= static_cast<double>(batches);
    if (!data.split.dev_seen.empty())
      row.dev_seen_accuracy = micro_accuracy(predict_samples(m, index, data.split.dev_seen));
    if (!data.split.dev_unseen.empty())
      row.dev_unseen_accuracy = micro_accuracy(predict_samples(m, index, data.split.dev_unseen));
    m.log.push_back(row);

    if (data.split.dev_seen.empty()) continue;
    if (row.dev_seen_accuracy >= best) {
      best = row.dev_seen_accuracy;
      best_state = m.snapshot();
      stale = 0;
    } else if (++stale >= cfg.patience && cfg.patience > 0) {
      break;
    }
  }
  if (best >= 0.0) m.restore(best_state);
}

/// Trains baseline-finetune and snapshots the fine-tuned relation-level
/// inputs of every seen relation as pseudo targets.
inline TrainedModel pretrain_baseline(const TrainingData& data, const TrainConfig& cfg, const TrainHooks& hooks = {}) {
  require(!data.split.train.empty(), "pretrain_baseline: empty training data");
  TrainedModel m = make_model(ModelVariant::kBaselineFinetune, cfg, relation_inventory(data), data.words, data.relations);
  fit(m, data, hooks);
  m.targets = PseudoTargetStore(m.relation_dim());
  for (std::size_t id : m.relations.seen_ids()) {
    auto row = m.relation_table->value.row(id);
    m.targets.set(id, {row.begin(), row.end()});
  }
  return m;
}

/// Trains any variant other than baseline-finetune; variants with adapter
/// losses take their pseudo targets from `targets`.
inline TrainedModel train_with_adapter(const TrainingData& data, const PseudoTargetStore* targets, ModelVariant variant,
                                       const TrainConfig& cfg, const TrainHooks& hooks = {}) {
  require(variant != ModelVariant::kBaselineFinetune,
          "train_with_adapter: baseline-finetune is trained by pretrain_baseline");
  TrainedModel m = make_model(variant, cfg, relation_inventory(data), data.words, data.relations);
  if (needs_targets(variant)) {
    if (!targets || targets->empty())
      throw ContractError(std::string("train_with_adapter: variant ") + variant_name(variant) +
                          " needs pseudo targets");
    if (targets->dim() != m.relation_dim())
      throw DimensionError("train_with_adapter: pseudo targets have dim " + std::to_string(targets->dim()) +
                           ", relation embeddings " + std::to_string(m.relation_dim()));
    for (std::size_t id : targets->keys())
      require(id < m.relations.size() && m.relations.is_seen(id),
              "train_with_adapter: pseudo target for relation " + std::to_string(id) + " which is not seen");
    m.targets = *targets;
  }
  fit(m, data, hooks);
  return m;
}

/// Trains `variant`, pretraining a baseline first when pseudo targets are
/// needed and not supplied.
inline TrainedModel train_variant(const TrainingData& data, ModelVariant variant, const TrainConfig& cfg,
                                  const PseudoTargetStore* targets = nullptr, const TrainHooks& hooks = {}) {
  if (variant == ModelVariant::kBaselineFinetune) return pretrain_baseline(data, cfg, hooks);
  std::optional<TrainedModel> base;
  if (needs_targets(variant) && !targets) {
    base.emplace(pretrain_baseline(data, cfg));
    targets = &base->targets;
  }
  return train_with_adapter(data, targets, variant, cfg, hooks);
}

}  // namespace readapt
