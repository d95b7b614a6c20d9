#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "readapt/data/types.hpp"
#include "readapt/eval/metrics.hpp"
#include "readapt/training/model.hpp"

namespace readapt {

/// Subject entity -> ids of its outgoing relations in the knowledge graph.
class CandidateIndex {
 public:
  CandidateIndex() = default;
  CandidateIndex(const KnowledgeGraph& kg, const RelationVocabulary& rels) {
    for (const auto& t : kg.triples)
      if (rels.contains(t.relation)) by_subject_[t.subject].insert(rels.id(t.relation));
  }

  /// Relations of `subject`, plus `gold` (gold entity linking guarantees the
  /// gold relation is reachable even when the graph misses the triple).
  std::vector<std::size_t> candidates(const std::string& subject, std::size_t gold) const {
    std::set<std::size_t> s;
    if (auto it = by_subject_.find(subject); it != by_subject_.end()) s = it->second;
    s.insert(gold);
    return {s.begin(), s.end()};
  }

 private:
  std::map<std::string, std::set<std::size_t>> by_subject_;
};

/// Argmax over candidates of cosine(q, relation_encodings[c]); ties go to
/// the smallest id.
inline std::size_t predict_relation(std::span<const double> q, const Tensor& relation_encodings,
                                    const std::vector<std::size_t>& candidates) {
  require(!candidates.empty(), "predict_relation: empty candidate set");
  std::vector<std::size_t> sorted = candidates;
  std::sort(sorted.begin(), sorted.end());
  std::size_t best = sorted.front();
  double best_score = score(q, relation_encodings.row(best));
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const double s = score(q, relation_encodings.row(sorted[i]));
    if (s > best_score) {
      best_score = s;
      best = sorted[i];
    }
  }
  return best;
}

/// Encodes questions in chunks to bound graph size.
inline Tensor encode_questions_chunked(TrainedModel& model, const std::vector<QASample>& samples,
                                       std::size_t chunk = 256) {
  Tensor out = Tensor::matrix(samples.size(), model.detector.output_dim());
  for (std::size_t begin = 0; begin < samples.size(); begin += chunk) {
    const std::size_t end = std::min(samples.size(), begin + chunk);
    std::vector<std::vector<std::string>> qs;
    for (std::size_t i = begin; i < end; ++i) qs.push_back(samples[i].question);
    Tensor part = model.encode_questions(qs);
    for (std::size_t i = begin; i < end; ++i) {
      auto src = part.row(i - begin);
      std::copy(src.begin(), src.end(), out.row(i).begin());
    }
  }
  return out;
}

/// Relation detection with gold subjects over a list of samples.
inline std::vector<PredictionRecord> predict_samples(TrainedModel& model, const CandidateIndex& index,
                                                     const std::vector<QASample>& samples) {
  std::vector<PredictionRecord> out;
  if (samples.empty()) return out;
  const Tensor rel = model.encode_all_relations();
  const Tensor qs = encode_questions_chunked(model, samples);
  out.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    PredictionRecord r;
    r.sample = i;
    r.gold = model.relations.id(samples[i].relation);
    r.candidates = index.candidates(samples[i].subject, r.gold);
    r.predicted = predict_relation(qs.row(i), rel, r.candidates);
    r.gold_seen = model.relations.is_seen(r.gold);
    r.predicted_seen = model.relations.is_seen(r.predicted);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace readapt
