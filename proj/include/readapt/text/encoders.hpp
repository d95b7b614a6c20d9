#pragma once

#include <map>
#include <numeric>
#include <vector>

#include "readapt/autodiff/graph.hpp"
#include "readapt/autodiff/init.hpp"
#include "readapt/text/bilstm.hpp"
#include "readapt/text/vocabulary.hpp"

namespace readapt {

/// Question and relation networks of the detector.
///
/// Question: word embeddings -> shared word-level BiLSTM -> upper BiLSTM;
/// the two layers' outputs are summed per step (residual) and max-pooled.
/// Relation: the name-word embeddings followed by one extra step carrying the
/// relation-level vector (projected to the word width when the widths
/// differ) run through the shared word-level BiLSTM, then max-pooled.
/// Both encodings have width 2h.
class RelationDetector {
 public:
  Parameter word_emb;
  Parameter rel_proj;  // relation_dim × word_dim, only used when the widths differ
  BiLstmParams word_lstm;
  BiLstmParams upper_lstm;

  RelationDetector() = default;
  RelationDetector(Tensor word_inputs, std::size_t relation_dim, std::size_t hidden, Rng& rng,
                   bool train_words)
      : relation_dim_(relation_dim) {
    require(hidden > 0 && relation_dim > 0, "detector: dimensions must be positive");
    const std::size_t dw = word_inputs.cols();
    word_emb = {"word_emb", std::move(word_inputs), train_words};
    if (relation_dim != dw) rel_proj = {"rel_proj", glorot_uniform(rng, relation_dim, dw), true};
    word_lstm = BiLstmParams("lstm1", dw, hidden, rng);
    upper_lstm = BiLstmParams("lstm2", 2 * hidden, hidden, rng);
  }

  RelationDetector(const RelationDetector&) = delete;
  RelationDetector& operator=(const RelationDetector&) = delete;
  RelationDetector(RelationDetector&&) = default;
  RelationDetector& operator=(RelationDetector&&) = default;

  std::size_t word_dim() const { return word_emb.value.cols(); }
  std::size_t relation_dim() const { return relation_dim_; }
  std::size_t hidden_dim() const { return word_lstm.hidden_dim(); }
  std::size_t output_dim() const { return 2 * hidden_dim(); }
  bool projects_relations() const { return relation_dim_ != word_dim(); }

  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out{&word_emb};
    if (projects_relations()) out.push_back(&rel_proj);
    for (auto* p : word_lstm.parameters()) out.push_back(p);
    for (auto* p : upper_lstm.parameters()) out.push_back(p);
    return out;
  }

  /// Encodes a batch of token-id sequences; row i of the result is q_f of
  /// questions[i].
  NodeId encode_questions(Graph& g, const std::vector<std::vector<std::size_t>>& questions) {
    const NodeId emb = g.parameter(word_emb);
    return batched(g, questions, [&](const std::vector<std::size_t>& members, std::size_t len) {
      std::vector<NodeId> xs(len);
      for (std::size_t t = 0; t < len; ++t) xs[t] = g.gather_rows(emb, column(questions, members, t));
      auto lower = bilstm_encode(g, word_lstm, xs);
      auto upper = bilstm_encode(g, upper_lstm, lower);
      std::vector<NodeId> summed(len);
      for (std::size_t t = 0; t < len; ++t) summed[t] = g.add(lower[t], upper[t]);
      return g.max_over_time(summed);
    });
  }

  /// Encodes relations: row i pairs the name tokens names[i] with row i of
  /// relation_vectors (n × relation_dim).
  NodeId encode_relations(Graph& g, const std::vector<std::vector<std::size_t>>& names,
                          NodeId relation_vectors) {
    const Tensor& rv = g.value(relation_vectors);
    if (rv.rows() != names.size() || rv.cols() != relation_dim_)
      throw DimensionError("encode_relations: relation vectors " + shape_str(rv.shape()) + " for " +
                           std::to_string(names.size()) + " relations of dim " +
                           std::to_string(relation_dim_));
    const NodeId emb = g.parameter(word_emb);
    const NodeId level =
        projects_relations() ? g.matmul(relation_vectors, g.parameter(rel_proj)) : relation_vectors;
    return batched(g, names, [&](const std::vector<std::size_t>& members, std::size_t len) {
      std::vector<NodeId> xs(len + 1);
      for (std::size_t t = 0; t < len; ++t) xs[t] = g.gather_rows(emb, column(names, members, t));
      xs[len] = g.gather_rows(level, members);
      return g.max_over_time(bilstm_encode(g, word_lstm, xs));
    });
  }

  NodeId encode_question(Graph& g, const std::vector<std::size_t>& tokens) {
    require(!tokens.empty(), "encode_question: empty question");
    return encode_questions(g, {tokens});
  }

  NodeId encode_relation(Graph& g, const std::vector<std::size_t>& name_tokens, NodeId relation_vector) {
    return encode_relations(g, {name_tokens}, relation_vector);
  }

 private:
  static std::vector<std::size_t> column(const std::vector<std::vector<std::size_t>>& seqs,
                                         const std::vector<std::size_t>& members, std::size_t t) {
    std::vector<std::size_t> ids;
    ids.reserve(members.size());
    for (std::size_t m : members) ids.push_back(seqs[m][t]);
    return ids;
  }

  // Groups sequences by length, encodes each group with `encode` (returning a
  // group×2h node) and reassembles rows in input order.
  template <typename F>
  static NodeId batched(Graph& g, const std::vector<std::vector<std::size_t>>& seqs, F&& encode) {
    require(!seqs.empty(), "encoder: empty batch");
    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      require(!seqs[i].empty(), "encoder: empty sequence at position " + std::to_string(i));
      groups[seqs[i].size()].push_back(i);
    }
    std::vector<NodeId> parts;
    std::vector<std::size_t> row_of(seqs.size());
    std::size_t row = 0;
    for (const auto& [len, members] : groups) {
      parts.push_back(encode(members, len));
      for (std::size_t m : members) row_of[m] = row++;
    }
    const NodeId stacked = parts.size() == 1 ? parts[0] : g.concat_rows(parts);
    std::vector<std::size_t> identity(seqs.size());
    std::iota(identity.begin(), identity.end(), std::size_t{0});
    return row_of == identity ? stacked : g.gather_rows(stacked, row_of);
  }

  std::size_t relation_dim_ = 0;
};

/// Cosine score between a question encoding and a relation encoding.
inline double score(std::span<const double> q, std::span<const double> r) { return cosine(q, r); }

}  // namespace readapt
