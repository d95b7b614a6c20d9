#pragma once

#include <algorithm>
#include <array>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "readapt/errors.hpp"

namespace readapt {

struct QASample {
  std::vector<std::string> question;
  std::string subject;
  std::string relation;
  std::string object;

  friend bool operator==(const QASample&, const QASample&) = default;
};

enum class SplitPart { kTrain, kDevSeen, kDevUnseen, kTestSeen, kTestUnseen };

inline constexpr std::array<SplitPart, 5> kSplitParts = {SplitPart::kTrain, SplitPart::kDevSeen,
                                                         SplitPart::kDevUnseen, SplitPart::kTestSeen,
                                                         SplitPart::kTestUnseen};

inline const char* split_name(SplitPart p) {
  switch (p) {
    case SplitPart::kTrain: return "train";
    case SplitPart::kDevSeen: return "dev_seen";
    case SplitPart::kDevUnseen: return "dev_unseen";
    case SplitPart::kTestSeen: return "test_seen";
    case SplitPart::kTestUnseen: return "test_unseen";
  }
  return "?";
}

/// The five-way Train / Dev-seen / Dev-unseen / Test-seen / Test-unseen bundle.
struct DatasetSplit {
  std::vector<QASample> train, dev_seen, dev_unseen, test_seen, test_unseen;

  std::vector<QASample>& part(SplitPart p) {
    switch (p) {
      case SplitPart::kTrain: return train;
      case SplitPart::kDevSeen: return dev_seen;
      case SplitPart::kDevUnseen: return dev_unseen;
      case SplitPart::kTestSeen: return test_seen;
      case SplitPart::kTestUnseen: return test_unseen;
    }
    return train;
  }
  const std::vector<QASample>& part(SplitPart p) const {
    return const_cast<DatasetSplit*>(this)->part(p);
  }
  std::size_t total() const {
    std::size_t n = 0;
    for (auto p : kSplitParts) n += part(p).size();
    return n;
  }

  friend bool operator==(const DatasetSplit&, const DatasetSplit&) = default;
};

inline std::set<std::string> relations_of(const std::vector<QASample>& samples) {
  std::set<std::string> out;
  for (const auto& s : samples) out.insert(s.relation);
  return out;
}

/// Checks every relation-level and sample-level invariant of a split;
/// returns an empty string when all hold, else a description of the first
/// violation.
inline std::string check_split_invariants(const DatasetSplit& split) {
  const auto train = relations_of(split.train);
  auto disjoint = [&](const std::vector<QASample>& part) {
    for (const auto& s : part)
      if (train.count(s.relation)) return false;
    return true;
  };
  auto subset = [&](const std::vector<QASample>& part) {
    for (const auto& s : part)
      if (!train.count(s.relation)) return false;
    return true;
  };
  if (!disjoint(split.dev_unseen)) return "dev_unseen shares a relation with train";
  if (!disjoint(split.test_unseen)) return "test_unseen shares a relation with train";
  if (!subset(split.dev_seen)) return "dev_seen has a relation missing from train";
  if (!subset(split.test_seen)) return "test_seen has a relation missing from train";
  return {};
}

/// Relation inventory with its seen (S) / unseen (U) partition. Seen means
/// "occurs in Train"; every other known relation is unseen.
class RelationVocabulary {
 public:
  RelationVocabulary() = default;

  /// Relations of the split (plus any extra names, e.g. from the knowledge
  /// graph), ids assigned in sorted name order.
  static RelationVocabulary from_split(const DatasetSplit& split,
                                       const std::vector<std::string>& extra = {}) {
    std::set<std::string> all;
    for (auto p : kSplitParts)
      for (const auto& s : split.part(p)) all.insert(s.relation);
    all.insert(extra.begin(), extra.end());
    const auto seen = relations_of(split.train);
    RelationVocabulary v;
    for (const auto& name : all) v.add(name, seen.count(name) != 0);
    return v;
  }

  std::size_t add(const std::string& name, bool seen) {
    require(!name.empty(), "relation vocabulary: empty name");
    auto [it, inserted] = index_.try_emplace(name, names_.size());
    if (!inserted) throw ContractError("relation vocabulary: duplicate relation '" + name + "'");
    names_.push_back(name);
    seen_.push_back(seen);
    return it->second;
  }

  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t id) const { return names_.at(id); }
  const std::vector<std::string>& names() const { return names_; }
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  std::size_t id(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ContractError("relation vocabulary: unknown relation '" + name + "'");
    return it->second;
  }
  bool is_seen(std::size_t id) const { return seen_.at(id); }
  void set_seen(std::size_t id, bool seen) { seen_.at(id) = seen; }

  std::vector<std::size_t> seen_ids() const { return filter(true); }
  std::vector<std::size_t> unseen_ids() const { return filter(false); }

 private:
  std::vector<std::size_t> filter(bool want) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (seen_[i] == want) out.push_back(i);
    return out;
  }

  std::vector<std::string> names_;
  std::vector<bool> seen_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct Triple {
  std::string subject, relation, object;
  friend bool operator==(const Triple&, const Triple&) = default;
};

struct Alias {
  std::string entity;
  std::vector<std::string> tokens;
  friend bool operator==(const Alias&, const Alias&) = default;
};

struct KnowledgeGraph {
  std::vector<Triple> triples;
  std::vector<Alias> aliases;

  std::vector<std::string> relation_names() const {
    std::set<std::string> s;
    for (const auto& t : triples) s.insert(t.relation);
    return {s.begin(), s.end()};
  }

  friend bool operator==(const KnowledgeGraph&, const KnowledgeGraph&) = default;
};

}  // namespace readapt
