#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "readapt/data/io.hpp"
#include "readapt/data/types.hpp"
#include "readapt/eval/predict.hpp"
#include "readapt/training/model.hpp"

namespace readapt {

/// Subject -> (relation, object) facts, and lowercased alias token
/// sequences -> entities.
class TripleIndex {
 public:
  TripleIndex() = default;
  explicit TripleIndex(const KnowledgeGraph& kg) {
    for (const auto& t : kg.triples) facts_[t.subject].insert({t.relation, t.object});
    for (const auto& a : kg.aliases) {
      if (a.tokens.empty()) continue;
      std::vector<std::string> key;
      for (const auto& tok : a.tokens) key.push_back(lower(tok));
      longest_ = std::max(longest_, key.size());
      aliases_[std::move(key)].insert(a.entity);
    }
  }

  const std::set<std::pair<std::string, std::string>>& facts(const std::string& subject) const {
    static const std::set<std::pair<std::string, std::string>> none;
    auto it = facts_.find(subject);
    return it == facts_.end() ? none : it->second;
  }
  const std::set<std::string>* entities(const std::vector<std::string>& tokens) const {
    auto it = aliases_.find(tokens);
    return it == aliases_.end() ? nullptr : &it->second;
  }
  std::size_t longest_alias() const { return longest_; }

  static std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  }

 private:
  std::map<std::string, std::set<std::pair<std::string, std::string>>> facts_;
  std::map<std::vector<std::string>, std::set<std::string>> aliases_;
  std::size_t longest_ = 0;
};

struct LinkedEntity {
  std::string entity;
  std::size_t overlap = 0;  // tokens in the longest span that linked it

  friend bool operator==(const LinkedEntity&, const LinkedEntity&) = default;
};

/// Exact-match linking: every contiguous span equal to an alias is a match;
/// a match overlapping a longer match is dropped. Sorted by entity id.
inline std::vector<LinkedEntity> link_entities(const std::vector<std::string>& question, const TripleIndex& index) {
  std::vector<std::string> toks;
  for (const auto& t : question) toks.push_back(TripleIndex::lower(t));
  struct Span {
    std::size_t begin, end;
    const std::set<std::string>* ents;
  };
  std::vector<Span> matches;
  for (std::size_t i = 0; i < toks.size(); ++i)
    for (std::size_t len = 1; len <= index.longest_alias() && i + len <= toks.size(); ++len) {
      std::vector<std::string> span(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                    toks.begin() + static_cast<std::ptrdiff_t>(i + len));
      if (auto* e = index.entities(span)) matches.push_back({i, i + len, e});
    }
  std::stable_sort(matches.begin(), matches.end(),
                   [](const Span& a, const Span& b) { return a.end - a.begin > b.end - b.begin; });
  std::vector<Span> kept;
  for (const auto& m : matches) {
    bool dominated = false;
    for (const auto& k : kept)
      if (k.end - k.begin > m.end - m.begin && m.begin < k.end && k.begin < m.end) dominated = true;
    if (!dominated) kept.push_back(m);
  }
  std::map<std::string, std::size_t> best;
  for (const auto& k : kept)
    for (const auto& e : *k.ents) best[e] = std::max(best[e], k.end - k.begin);
  std::vector<LinkedEntity> out;
  for (const auto& [e, n] : best) out.push_back({e, n});
  return out;
}

struct KbqaAnswer {
  std::optional<Triple> fact;  // empty = unanswerable
  double score = 0.0;
};

/// End-to-end answering: link entities, score each candidate subject's
/// outgoing relations, take the global best (subject, relation).
///
/// Ordering: higher relation score, then longer linking span, then smaller
/// entity id, then smaller relation id. Within one subject this matches
/// predict_relation, so a correct answer implies a correct gold-subject
/// relation prediction.
class KbqaSystem {
 public:
  KbqaSystem(TrainedModel& model, const TripleIndex& index)
      : model_(model), index_(index), relation_encodings_(model.encode_all_relations()) {}

  KbqaAnswer answer(const std::vector<std::string>& question) {
    require(!question.empty(), "kbqa answer: empty question");
    const Tensor q = model_.encode_questions({question});
    return answer_encoded(question, q.row(0));
  }

  std::vector<KbqaAnswer> answer_all(const std::vector<QASample>& samples) {
    std::vector<KbqaAnswer> out;
    if (samples.empty()) return out;
    const Tensor qs = encode_questions_chunked(model_, samples);
    for (std::size_t i = 0; i < samples.size(); ++i) out.push_back(answer_encoded(samples[i].question, qs.row(i)));
    return out;
  }

 private:
  KbqaAnswer answer_encoded(const std::vector<std::string>& question, std::span<const double> q) {
    KbqaAnswer best;
    std::size_t best_overlap = 0, best_rel = 0;
    for (const auto& link : link_entities(question, index_)) {
      // Entities come sorted by id, so a later entity must strictly win.
      std::map<std::size_t, std::string> rels;  // relation id -> smallest object
      for (const auto& [rel, obj] : index_.facts(link.entity))
        if (model_.relations.contains(rel)) rels.emplace(model_.relations.id(rel), obj);
      for (const auto& [rid, obj] : rels) {
        const double s = score(q, relation_encodings_.row(rid));
        bool better = !best.fact;
        if (!better) {
          if (s != best.score) better = s > best.score;
          else if (link.overlap != best_overlap) better = link.overlap > best_overlap;
          else if (link.entity != best.fact->subject) better = false;
          else better = rid < best_rel;
        }
        if (better) {
          best.fact = Triple{link.entity, model_.relations.name(rid), obj};
          best.score = s;
          best_overlap = link.overlap;
          best_rel = rid;
        }
      }
    }
    return best;
  }

  TrainedModel& model_;
  const TripleIndex& index_;
  Tensor relation_encodings_;
};

/// Share of questions whose predicted subject and relation both match the
/// gold sample; unanswerable counts as wrong.
inline double kbqa_accuracy(const std::vector<KbqaAnswer>& predictions, const std::vector<QASample>& golds) {
  require(predictions.size() == golds.size(), "kbqa_accuracy: " + std::to_string(predictions.size()) +
                                                  " predictions for " + std::to_string(golds.size()) + " questions");
  require(!golds.empty(), "kbqa_accuracy: no questions");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < golds.size(); ++i)
    hit += predictions[i].fact && predictions[i].fact->subject == golds[i].subject &&
           predictions[i].fact->relation == golds[i].relation;
  return static_cast<double>(hit) / static_cast<double>(golds.size());
}

inline constexpr const char* kUnanswerable = "UNANSWERABLE";

/// question-id \t subject \t relation \t object; unanswerable questions
/// carry UNANSWERABLE in all three answer columns.
inline void write_answers_tsv(const std::vector<KbqaAnswer>& answers, const fs::path& path) {
  auto out = open_out(path);
  for (std::size_t i = 0; i < answers.size(); ++i) {
    out << i;
    if (answers[i].fact)
      out << '\t' << answers[i].fact->subject << '\t' << answers[i].fact->relation << '\t' << answers[i].fact->object;
    else
      out << '\t' << kUnanswerable << '\t' << kUnanswerable << '\t' << kUnanswerable;
    out << '\n';
  }
  close_checked(out, path);
}

}  // namespace readapt
