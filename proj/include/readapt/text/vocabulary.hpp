#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "readapt/autodiff/tensor.hpp"
#include "readapt/errors.hpp"

namespace readapt {

/// Token <-> dense id bijection with reserved pad (0) and unk (1) ids.
class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary() {
    add(std::string(kPadToken));
    add(std::string(kUnkToken));
  }

  /// Returns the id of token, inserting it if new.
  std::size_t add(const std::string& token) {
    auto [it, inserted] = index_.try_emplace(token, tokens_.size());
    if (inserted) tokens_.push_back(token);
    return it->second;
  }

  std::size_t id(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
  }

  bool contains(const std::string& token) const { return index_.count(token) != 0; }
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  std::size_t size() const { return tokens_.size(); }

  std::vector<std::size_t> ids(const std::vector<std::string>& tokens) const {
    std::vector<std::size_t> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(id(t));
    return out;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Named d-dimensional vectors (word or relation embeddings), one row each.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {
    require(dim > 0, "embedding table: dimension must be positive");
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(std::size_t i) const { return names_.at(i); }

  void add(const std::string& name, std::vector<double> vec) {
    if (vec.size() != dim_)
      throw DimensionError("embedding table: '" + name + "' has " + std::to_string(vec.size()) +
                           " values, expected " + std::to_string(dim_));
    if (!index_.try_emplace(name, names_.size()).second)
      throw ContractError("embedding table: duplicate entry '" + name + "'");
    names_.push_back(name);
    data_.insert(data_.end(), vec.begin(), vec.end());
  }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  std::size_t index(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ContractError("embedding table: no entry '" + name + "'");
    return it->second;
  }

  std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  std::span<const double> row(const std::string& name) const { return row(index(name)); }

  /// All rows as an n×d matrix.
  Tensor as_matrix() const { return Tensor::matrix(size(), dim_, data_); }

  friend bool operator==(const EmbeddingTable& a, const EmbeddingTable& b) {
    return a.dim_ == b.dim_ && a.names_ == b.names_ && a.data_ == b.data_;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> names_;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Builds the vocabulary of a word table plus the matching input matrix:
/// row 0 (pad) is zero, row 1 (unk) is the mean of all known vectors.
inline std::pair<Vocabulary, Tensor> word_inputs(const EmbeddingTable& words) {
  require(words.size() > 0, "word inputs: empty word table");
  Vocabulary vocab;
  for (const auto& n : words.names()) vocab.add(n);
  const std::size_t d = words.dim();
  Tensor m = Tensor::matrix(vocab.size(), d);
  for (std::size_t i = 0; i < words.size(); ++i) {
    const std::size_t id = vocab.id(words.name(i));
    auto r = words.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      m(id, j) = r[j];
      m(Vocabulary::kUnk, j) += r[j] / static_cast<double>(words.size());
    }
  }
  return {std::move(vocab), std::move(m)};
}

/// Splits a dotted relation path on '.' and '_' and lowercases the pieces:
/// "people.person.place_of_birth" -> people person place of birth.
inline std::vector<std::string> tokenize_relation(std::string_view name) {
  require(!name.empty(), "tokenize_relation: empty relation name");
  std::vector<std::string> out;
  std::string cur;
  for (char ch : name) {
    if (ch == '.' || ch == '_') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  require(!out.empty(), "tokenize_relation: no tokens in '" + std::string(name) + "'");
  return out;
}

/// Whitespace tokenization with lowercasing.
inline std::vector<std::string> tokenize_text(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace readapt
