#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "readapt/data/types.hpp"
#include "readapt/text/vocabulary.hpp"

namespace readapt {

namespace fs = std::filesystem;

/// Shortest decimal text that parses back to exactly v.
inline std::string format_real(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

inline bool parse_real(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline bool parse_size(std::string_view s, std::size_t& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

inline std::vector<std::string_view> split_on(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

inline std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

inline void close_checked(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Embeddings: header "count dim", then "token v1 ... vdim" per line.

inline EmbeddingTable load_embeddings(const fs::path& path) {
  auto in = open_in(path);
  const std::string p = path.string();
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw FormatError(p, 1, "missing header line");
  ++lineno;
  auto head = split_ws(line);
  std::size_t count = 0, dim = 0;
  if (head.size() != 2 || !parse_size(head[0], count) || !parse_size(head[1], dim) || dim == 0)
    throw ParseError(p, lineno, "header must be 'count dim'");
  EmbeddingTable table(dim);
  std::vector<double> vec;
  while (std::getline(in, line)) {
    ++lineno;
    auto f = split_ws(line);
    if (f.empty()) continue;
    if (f.size() != dim + 1)
      throw FormatError(p, lineno, "expected " + std::to_string(dim) + " values, found " +
                                       std::to_string(f.size() - 1));
    vec.assign(dim, 0.0);
    for (std::size_t j = 0; j < dim; ++j)
      if (!parse_real(f[j + 1], vec[j]))
        throw ParseError(p, lineno, "malformed number '" + std::string(f[j + 1]) + "'");
    if (table.contains(std::string(f[0])))
      throw FormatError(p, lineno, "duplicate token '" + std::string(f[0]) + "'");
    table.add(std::string(f[0]), vec);
  }
  if (table.size() != count)
    throw FormatError(p, lineno, "header announces " + std::to_string(count) + " rows, found " +
                                     std::to_string(table.size()));
  return table;
}

inline void save_embeddings(const EmbeddingTable& table, const fs::path& path) {
  auto out = open_out(path);
  out << table.size() << ' ' << table.dim() << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.name(i);
    for (double v : table.row(i)) out << ' ' << format_real(v);
    out << '\n';
  }
  close_checked(out, path);
}

// ---------------------------------------------------------------------------
// Samples: question \t subject \t relation \t object. Questions are stored as
// space-joined lowercase tokens; no quoting or escaping.

inline std::string join(const std::vector<std::string>& toks, char sep = ' ') {
  std::string s;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) s.push_back(sep);
    s += toks[i];
  }
  return s;
}

inline std::vector<QASample> load_dataset(const fs::path& path) {
  auto in = open_in(path);
  const std::string p = path.string();
  std::vector<QASample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split_on(line, '\t');
    if (f.size() != 4)
      throw ParseError(p, lineno, "expected 4 tab-separated columns, found " + std::to_string(f.size()));
    QASample s{tokenize_text(f[0]), std::string(f[1]), std::string(f[2]), std::string(f[3])};
    if (s.question.empty()) throw ParseError(p, lineno, "empty question");
    if (s.relation.empty()) throw ParseError(p, lineno, "empty relation");
    out.push_back(std::move(s));
  }
  return out;
}

inline void save_samples(const std::vector<QASample>& samples, const fs::path& path) {
  auto out = open_out(path);
  for (const auto& s : samples)
    out << join(s.question) << '\t' << s.subject << '\t' << s.relation << '\t' << s.object << '\n';
  close_checked(out, path);
}

/// Writes train.tsv, dev_seen.tsv, dev_unseen.tsv, test_seen.tsv, test_unseen.tsv.
inline void save_dataset(const DatasetSplit& split, const fs::path& dir) {
  fs::create_directories(dir);
  for (auto p : kSplitParts) save_samples(split.part(p), dir / (std::string(split_name(p)) + ".tsv"));
}

inline DatasetSplit load_split(const fs::path& dir) {
  DatasetSplit split;
  for (auto p : kSplitParts) split.part(p) = load_dataset(dir / (std::string(split_name(p)) + ".tsv"));
  return split;
}

// ---------------------------------------------------------------------------
// Knowledge graph: subject \t relation \t object ; aliases: entity \t surface form.

inline std::vector<Triple> load_triples(const fs::path& path) {
  auto in = open_in(path);
  std::vector<Triple> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split_on(line, '\t');
    if (f.size() != 3)
      throw ParseError(path.string(), lineno,
                       "expected 3 tab-separated columns, found " + std::to_string(f.size()));
    out.push_back({std::string(f[0]), std::string(f[1]), std::string(f[2])});
  }
  return out;
}

inline std::vector<Alias> load_aliases(const fs::path& path) {
  auto in = open_in(path);
  std::vector<Alias> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split_on(line, '\t');
    if (f.size() != 2)
      throw ParseError(path.string(), lineno,
                       "expected 2 tab-separated columns, found " + std::to_string(f.size()));
    Alias a{std::string(f[0]), tokenize_text(f[1])};
    if (a.tokens.empty()) throw ParseError(path.string(), lineno, "empty surface form");
    out.push_back(std::move(a));
  }
  return out;
}

inline void save_triples(const std::vector<Triple>& triples, const fs::path& path) {
  auto out = open_out(path);
  for (const auto& t : triples) out << t.subject << '\t' << t.relation << '\t' << t.object << '\n';
  close_checked(out, path);
}

inline void save_aliases(const std::vector<Alias>& aliases, const fs::path& path) {
  auto out = open_out(path);
  for (const auto& a : aliases) out << a.entity << '\t' << join(a.tokens) << '\n';
  close_checked(out, path);
}

inline KnowledgeGraph load_kg(const fs::path& triples, const fs::path& aliases) {
  return {load_triples(triples), load_aliases(aliases)};
}

}  // namespace readapt
