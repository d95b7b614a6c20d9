#pragma once

#include <vector>

#include "readapt/data/io.hpp"
#include "readapt/data/types.hpp"
#include "readapt/text/vocabulary.hpp"

namespace readapt {

/// A QA corpus with its knowledge graph and pretrained tables.
struct Corpus {
  KnowledgeGraph kg;
  std::vector<QASample> samples;
  EmbeddingTable words;
  EmbeddingTable relations;
};

// File names inside a corpus directory.
inline constexpr const char* kTriplesFile = "kg.tsv";
inline constexpr const char* kAliasesFile = "aliases.tsv";
inline constexpr const char* kSamplesFile = "samples.tsv";
inline constexpr const char* kWordsFile = "words.vec";
inline constexpr const char* kRelationsFile = "relations.vec";

inline void save_corpus(const Corpus& c, const fs::path& dir) {
  fs::create_directories(dir);
  save_triples(c.kg.triples, dir / kTriplesFile);
  save_aliases(c.kg.aliases, dir / kAliasesFile);
  save_samples(c.samples, dir / kSamplesFile);
  save_embeddings(c.words, dir / kWordsFile);
  save_embeddings(c.relations, dir / kRelationsFile);
}

inline Corpus load_corpus(const fs::path& dir) {
  Corpus c;
  c.kg = load_kg(dir / kTriplesFile, dir / kAliasesFile);
  c.samples = load_dataset(dir / kSamplesFile);
  c.words = load_embeddings(dir / kWordsFile);
  c.relations = load_embeddings(dir / kRelationsFile);
  return c;
}

}  // namespace readapt
