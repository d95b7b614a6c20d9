#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "readapt/adapter/adapter.hpp"
#include "readapt/data/types.hpp"
#include "readapt/text/encoders.hpp"
#include "readapt/text/vocabulary.hpp"
#include "readapt/training/config.hpp"

namespace readapt {

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;
  double dev_seen_accuracy = 0.0;
  double dev_unseen_accuracy = 0.0;
  std::size_t critic_updates = 0;
  std::size_t generator_updates = 0;

  friend bool operator==(const EpochLog&, const EpochLog&) = default;
};

/// Everything a trained detector needs at evaluation time, plus its training
/// history.
///
/// Relation-level inputs depend on the variant: a fine-tuned table
/// (baseline-finetune), the frozen general embeddings (baseline-frozen), or
/// the adapter applied to the frozen general embeddings (all others).
class TrainedModel {
 public:
  ModelVariant variant = ModelVariant::kBaselineFinetune;
  TrainConfig config;
  RelationVocabulary relations;
  Vocabulary words;
  Tensor general;  // e_g, one row per relation id; never modified by training
  std::vector<std::vector<std::size_t>> relation_tokens;
  RelationDetector detector;
  std::optional<Parameter> relation_table;
  AdapterBundle adapters;
  PseudoTargetStore targets;
  std::vector<EpochLog> log;

  TrainedModel() = default;
  TrainedModel(TrainedModel&&) = default;
  TrainedModel& operator=(TrainedModel&&) = default;

  std::size_t relation_dim() const { return general.cols(); }

  /// Relation-level inputs for `ids` (n × d). The mask, when given, drops
  /// adapter outputs during training.
  NodeId relation_vectors(Graph& g, const std::vector<std::size_t>& ids, const Tensor* mask = nullptr) {
    if (relation_table) return g.gather_rows(g.parameter(*relation_table), ids);
    NodeId eg = g.constant(select_rows(general, ids));
    if (!adapters.forward) return eg;
    return apply_adapter(g, *adapters.forward, eg, mask);
  }

  std::vector<std::vector<std::size_t>> names_of(const std::vector<std::size_t>& ids) const {
    std::vector<std::vector<std::size_t>> out;
    out.reserve(ids.size());
    for (auto id : ids) out.push_back(relation_tokens.at(id));
    return out;
  }

  /// r_f of every known relation (evaluation mode), one row per relation id.
  Tensor encode_all_relations() {
    std::vector<std::size_t> ids(relations.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    Graph g;
    return g.value(detector.encode_relations(g, names_of(ids), relation_vectors(g, ids)));
  }

  /// q_f of each question (token strings), one row per question.
  Tensor encode_questions(const std::vector<std::vector<std::string>>& questions) {
    std::vector<std::vector<std::size_t>> ids;
    ids.reserve(questions.size());
    for (const auto& q : questions) {
      require(!q.empty(), "encode_questions: empty question");
      ids.push_back(words.ids(q));
    }
    Graph g;
    return g.value(detector.encode_questions(g, ids));
  }

  /// Parameters updated by the detector objective (the critic excluded).
  std::vector<Parameter*> trainable_parameters() {
    std::vector<Parameter*> out;
    for (auto* p : detector.parameters())
      if (p->trainable) out.push_back(p);
    if (relation_table) out.push_back(&*relation_table);
    for (auto* p : adapters.generator_parameters()) out.push_back(p);
    return out;
  }

  /// Every parameter tensor, including frozen and critic ones.
  std::vector<Parameter*> all_parameters() {
    std::vector<Parameter*> out = detector.parameters();
    if (relation_table) out.push_back(&*relation_table);
    for (auto* p : adapters.generator_parameters()) out.push_back(p);
    for (auto* p : adapters.critic_parameters()) out.push_back(p);
    return out;
  }

  std::map<std::string, Tensor> snapshot() {
    std::map<std::string, Tensor> s;
    for (auto* p : all_parameters()) s.emplace(p->name, p->value);
    return s;
  }
  void restore(const std::map<std::string, Tensor>& s) {
    for (auto* p : all_parameters()) p->value = s.at(p->name);
  }
};

/// Builds a freshly initialised model of `variant` over the given relation
/// inventory and pretrained tables.
inline TrainedModel make_model(ModelVariant variant, const TrainConfig& cfg, const RelationVocabulary& rels,
                               const EmbeddingTable& words, const EmbeddingTable& relation_embeddings) {
  cfg.validate();
  require(rels.size() > 0, "make_model: empty relation inventory");
  TrainedModel m;
  m.variant = variant;
  m.config = cfg;
  m.relations = rels;
  auto [vocab, inputs] = word_inputs(words);
  m.words = std::move(vocab);
  const std::size_t d = relation_embeddings.dim();
  m.general = Tensor::matrix(rels.size(), d);
  for (std::size_t i = 0; i < rels.size(); ++i) {
    if (!relation_embeddings.contains(rels.name(i)))
      throw ContractError("make_model: no pretrained embedding for relation '" + rels.name(i) + "'");
    auto row = relation_embeddings.row(rels.name(i));
    std::copy(row.begin(), row.end(), m.general.row(i).begin());
    m.relation_tokens.push_back(m.words.ids(tokenize_relation(rels.name(i))));
  }
  Rng rng(derive_seed(cfg.seed, 0));
  m.detector = RelationDetector(std::move(inputs), d, cfg.hidden, rng,
                                variant == ModelVariant::kBaselineFinetune);
  if (variant == ModelVariant::kBaselineFinetune) m.relation_table = Parameter{"rel_table", m.general, true};
  if (has_mapping(variant)) m.adapters.forward = LinearMap("adapter", d, rng, cfg.adapter_bias);
  if (uses_reconstruction(variant)) m.adapters.reverse = LinearMap("adapter_rev", d, rng, cfg.adapter_bias);
  if (uses_adversary(variant)) {
    m.adapters.critic = DiscriminatorParams(d, cfg.critic_hidden, rng);
    clip_parameters(m.adapters.critic_parameters(), cfg.clip);
  }
  return m;
}

}  // namespace readapt
