#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "readapt/autodiff/init.hpp"
#include "readapt/data/corpus.hpp"
#include "readapt/data/types.hpp"
#include "readapt/text/vocabulary.hpp"

namespace readapt {

struct SyntheticConfig {
  std::size_t relations = 50;
  std::size_t entities = 400;
  std::size_t samples = 2000;
  std::size_t dim = 32;           // word embedding width
  std::size_t relation_dim = 16;  // relation embedding width; 0 = same as dim
  std::size_t properties_per_type = 10;
  std::size_t property_vocabulary = 25;  // distinct property words; 0 = one per relation
  bool shared_cues = false;              // question cue words shared by relations with one property
  double question_noise = 0.2;           // chance a question borrows a sibling relation's cue
  double relation_noise = 0.3;  // spread of e_g around its name-word composition
  double name_noise = 1.0;      // spread of a name word around its latent
  double cue_noise = 0.5;       // spread of a question cue word around its latent
  double ambiguous_alias_rate = 0.1;
};

using SyntheticCorpus = Corpus;

namespace detail {

inline const std::vector<std::string>& domain_pool() {
  static const std::vector<std::string> v = {
      "music", "film", "people", "location", "sports", "book", "food", "tv", "education",
      "business", "government", "medicine", "religion", "military", "aviation", "computer",
      "architecture", "law", "biology", "astronomy"};
  return v;
}

inline const std::vector<std::string>& type_pool() {
  static const std::vector<std::string> v = {
      "recording", "album", "actor", "director", "person", "city", "team", "author", "dish",
      "series", "university", "company", "politician", "disease", "deity", "battle", "aircraft",
      "software", "building", "court", "organism", "star", "artist", "studio", "country",
      "athlete", "publisher", "restaurant", "episode", "school", "product", "office", "drug",
      "temple", "unit", "airport", "language", "bridge", "judge", "gene"};
  return v;
}

inline const std::vector<std::string>& property_pool() {
  static const std::vector<std::string> v = {
      "producer", "genre", "release", "label", "length", "composer", "award", "spouse", "birth",
      "death", "profession", "nationality", "gender", "religion", "ethnicity", "height", "parent",
      "sibling", "child", "education", "employer", "founder", "headquarters", "revenue", "capital",
      "population", "area", "currency", "climate", "mayor", "coach", "stadium", "league", "captain",
      "sponsor", "mascot", "editor", "language", "subject", "illustrator", "translator", "sequel",
      "cuisine", "ingredient", "origin", "calories", "chef", "network", "creator", "season",
      "episodes", "narrator", "campus", "motto", "endowment", "colors", "president", "ceo",
      "product", "industry", "party", "constituency", "tenure", "predecessor", "successor",
      "symptom", "treatment", "cause", "risk", "specialist", "worshipper", "symbol", "festival",
      "commander", "casualties", "location", "date", "manufacturer", "engine", "range", "crew",
      "developer", "license", "platform", "version", "architect", "style", "floors", "owner",
      "jurisdiction", "judges", "docket", "habitat", "diet", "lifespan", "predator", "galaxy",
      "magnitude", "constellation", "discoverer", "instrument", "influence", "record", "members",
      "distributor", "budget", "cinematographer", "editor2", "runtime", "rating", "host",
      "sponsor2", "venue", "winner", "prize", "judge", "organizer", "theme", "founding"};
  return v;
}

inline const std::vector<std::string>& wh_words() {
  static const std::vector<std::string> v = {"what", "which", "who", "where", "when", "how"};
  return v;
}

inline const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> v = {"is", "was", "does", "did", "the", "of", "for", "by", "in", "a"};
  return v;
}

// Distinct pronounceable pseudo-words.
class PseudoWords {
 public:
  explicit PseudoWords(Rng& rng) : rng_(rng) {}
  std::string next(std::size_t syllables) {
    static const std::array<const char*, 16> cons = {"b", "d", "f", "g", "k", "l", "m", "n",
                                                     "p", "r", "s", "t", "v", "z", "sh", "th"};
    static const std::array<const char*, 6> vow = {"a", "e", "i", "o", "u", "ai"};
    std::uniform_int_distribution<std::size_t> c(0, cons.size() - 1), v(0, vow.size() - 1);
    for (;;) {
      std::string w;
      for (std::size_t s = 0; s < syllables; ++s) {
        w += cons[c(rng_)];
        w += vow[v(rng_)];
      }
      if (used_.insert(w).second) return w;
    }
  }
  void reserve(const std::string& w) { used_.insert(w); }

 private:
  Rng& rng_;
  std::set<std::string> used_;
};

inline std::vector<double> gaussian(Rng& rng, std::size_t d, double scale) {
  std::normal_distribution<double> n(0.0, scale / std::sqrt(static_cast<double>(d)));
  std::vector<double> v(d);
  for (auto& x : v) x = n(rng);
  return v;
}

inline std::vector<double> plus(std::vector<double> a, const std::vector<double>& b, double w = 1.0) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += w * b[i];
  return a;
}

}  // namespace detail

/// Desk-scale stand-in for a KBQA corpus with knowledge-graph embeddings.
///
/// Relations are named domain.type.property. Every name word has a latent
/// vector; a relation's general embedding is a weighted sum of its name
/// words' latents plus noise, so relations sharing name words lie close
/// together. Questions mention the subject's alias plus cue words whose
/// embeddings scatter around the latents of the relation's type and
/// property. Subjects carry every relation of their type, so candidate sets
/// mix seen and unseen siblings once the corpus is re-split.
inline SyntheticCorpus generate_synthetic_corpus(const SyntheticConfig& cfg, std::uint64_t seed) {
  require(cfg.relations >= 2 && cfg.entities > 0 && cfg.samples > 0 && cfg.dim > 0 &&
              cfg.properties_per_type > 0,
          "synthetic corpus: counts must be positive (at least 2 relations)");
  using detail::gaussian;
  using detail::plus;
  Rng rng(seed);
  const std::size_t d = cfg.dim;
  const std::size_t n_types = (cfg.relations + cfg.properties_per_type - 1) / cfg.properties_per_type;
  require(cfg.entities >= n_types, "synthetic corpus: need at least one entity per relation type");

  auto pick_names = [](const std::vector<std::string>& pool, std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
      std::string w = pool[i % pool.size()];
      if (i >= pool.size()) w += std::to_string(i / pool.size() + 1);
      out.push_back(w);
    }
    return out;
  };
  const auto types = pick_names(detail::type_pool(), n_types);
  const auto domains = pick_names(detail::domain_pool(), (n_types + 1) / 2);
  auto props_pool = detail::property_pool();
  std::shuffle(props_pool.begin(), props_pool.end(), rng);
  const std::size_t n_props = cfg.property_vocabulary == 0 ? cfg.relations : cfg.property_vocabulary;
  require(n_props >= std::min(cfg.properties_per_type, cfg.relations),
          "synthetic corpus: property vocabulary smaller than properties per type");
  const auto prop_names = pick_names(props_pool, n_props);
  // Property of each relation: distinct within a type, reused across types.
  std::vector<std::size_t> prop_of(cfg.relations);
  for (std::size_t t = 0; t * cfg.properties_per_type < cfg.relations; ++t) {
    std::vector<std::size_t> choice(n_props);
    for (std::size_t i = 0; i < n_props; ++i) choice[i] = i;
    if (cfg.property_vocabulary != 0) std::shuffle(choice.begin(), choice.end(), rng);
    for (std::size_t k = 0; k < cfg.properties_per_type && t * cfg.properties_per_type + k < cfg.relations; ++k)
      prop_of[t * cfg.properties_per_type + k] = cfg.property_vocabulary == 0 ? t * cfg.properties_per_type + k : choice[k];
  }

  detail::PseudoWords pseudo(rng);
  std::map<std::string, std::vector<double>> latent;
  EmbeddingTable words(d);
  auto add_word = [&](const std::string& w, std::vector<double> v) {
    pseudo.reserve(w);
    if (!words.contains(w)) words.add(w, std::move(v));
  };
  auto name_word = [&](const std::string& w) {
    if (!latent.count(w)) {
      latent[w] = gaussian(rng, d, 1.0);
      add_word(w, plus(latent[w], gaussian(rng, d, cfg.name_noise)));
    }
    return latent[w];
  };
  for (const auto& w : detail::wh_words()) add_word(w, gaussian(rng, d, 1.0));
  for (const auto& w : detail::filler_words()) add_word(w, gaussian(rng, d, 1.0));

  struct Rel {
    std::string name;
    std::size_t type;
    std::vector<std::string> prop_cues;
  };
  std::vector<Rel> rels;
  std::vector<std::vector<std::string>> type_cues(n_types);
  const std::size_t dr = cfg.relation_dim == 0 ? d : cfg.relation_dim;
  EmbeddingTable relations(dr);
  std::vector<double> projection;  // dr × d, row-major; empty when the widths agree
  if (dr != d) {
    std::normal_distribution<double> n(0.0, 1.0 / std::sqrt(static_cast<double>(dr)));
    projection.resize(dr * d);
    for (auto& x : projection) x = n(rng);
  }
  for (std::size_t t = 0; t < n_types; ++t) {
    name_word(types[t]);
    for (int k = 0; k < 2; ++k) {
      type_cues[t].push_back(pseudo.next(2));
      add_word(type_cues[t].back(), plus(latent[types[t]], gaussian(rng, d, cfg.cue_noise)));
    }
  }
  std::map<std::size_t, std::vector<std::string>> prop_cues;  // shared by every relation with that property
  for (std::size_t r = 0; r < cfg.relations; ++r) {
    const std::size_t t = r / cfg.properties_per_type;
    const std::string& dom = domains[t / 2];
    const std::string& prop = prop_names[prop_of[r]];
    Rel rel{dom + "." + types[t] + "." + prop, t, {}};
    for (const auto& w : tokenize_relation(rel.name)) name_word(w);
    std::vector<std::string> own;
    auto& cues = cfg.shared_cues ? prop_cues[prop_of[r]] : own;
    for (std::size_t k = cues.size(); k < 2; ++k) {
      cues.push_back(pseudo.next(3));
      add_word(cues.back(), plus(latent[tokenize_relation(prop).front()], gaussian(rng, d, cfg.cue_noise)));
    }
    rel.prop_cues = cues;
    // General embedding: weighted composition of the name words, projected
    // to the relation width, plus noise.
    std::vector<double> e(d, 0.0);
    const auto toks = tokenize_relation(rel.name);
    e = plus(e, latent[toks[0]], 0.5);
    e = plus(e, latent[toks[1]], 0.7);
    for (std::size_t i = 2; i < toks.size(); ++i) e = plus(e, latent[toks[i]], 1.0);
    std::vector<double> pe = projection.empty() ? e : std::vector<double>(dr, 0.0);
    for (std::size_t i = 0; i < projection.size(); ++i) pe[i / d] += projection[i] * e[i % d];
    relations.add(rel.name, plus(pe, gaussian(rng, dr, cfg.relation_noise)));
    rels.push_back(std::move(rel));
  }

  // Entities, typed round-robin; a few share an alias with another entity.
  SyntheticCorpus out;
  std::vector<std::vector<std::size_t>> entities_of(n_types);
  std::vector<std::string> ent_ids(cfg.entities);
  std::vector<std::vector<std::string>> ent_alias(cfg.entities);
  std::bernoulli_distribution ambiguous(cfg.ambiguous_alias_rate);
  for (std::size_t e = 0; e < cfg.entities; ++e) {
    ent_ids[e] = "m.e" + std::to_string(e);
    entities_of[e % n_types].push_back(e);
    if (e > 0 && ambiguous(rng)) {
      std::uniform_int_distribution<std::size_t> prev(0, e - 1);
      ent_alias[e] = ent_alias[prev(rng)];
    } else {
      ent_alias[e] = {pseudo.next(2), pseudo.next(2)};
    }
    out.kg.aliases.push_back({ent_ids[e], ent_alias[e]});
  }
  std::uniform_int_distribution<std::size_t> any_entity(0, cfg.entities - 1);
  std::map<std::pair<std::size_t, std::size_t>, std::string> object_of;
  for (std::size_t e = 0; e < cfg.entities; ++e)
    for (std::size_t r = 0; r < rels.size(); ++r)
      if (rels[r].type == e % n_types) {
        const std::string obj = ent_ids[any_entity(rng)];
        object_of[{e, r}] = obj;
        out.kg.triples.push_back({ent_ids[e], rels[r].name, obj});
      }

  // Questions.
  const auto& wh = detail::wh_words();
  const auto& fill = detail::filler_words();
  auto choose = [&rng](const std::vector<std::string>& v) -> const std::string& {
    std::uniform_int_distribution<std::size_t> u(0, v.size() - 1);
    return v[u(rng)];
  };
  std::uniform_int_distribution<int> tmpl(0, 3);
  std::bernoulli_distribution borrow(cfg.question_noise);
  for (std::size_t r = 0; r < rels.size(); ++r) {
    const std::size_t quota = cfg.samples / rels.size() + (r < cfg.samples % rels.size() ? 1 : 0);
    const auto& pool = entities_of[rels[r].type];
    std::uniform_int_distribution<std::size_t> subj(0, pool.size() - 1);
    for (std::size_t k = 0; k < quota; ++k) {
      const std::size_t e = pool[subj(rng)];
      std::size_t cue_rel = r;
      if (borrow(rng)) {
        std::uniform_int_distribution<std::size_t> sib(0, cfg.properties_per_type - 1);
        cue_rel = std::min(rels.size() - 1, rels[r].type * cfg.properties_per_type + sib(rng));
      }
      const std::string& pc = choose(rels[cue_rel].prop_cues);
      const std::string& tc = choose(type_cues[rels[r].type]);
      std::vector<std::string> q{choose(wh)};
      const auto& alias = ent_alias[e];
      switch (tmpl(rng)) {
        case 0:
          q.insert(q.end(), {choose(fill), "the", pc, "of"});
          q.insert(q.end(), alias.begin(), alias.end());
          break;
        case 1:
          q.insert(q.end(), {pc, tc});
          q.insert(q.end(), alias.begin(), alias.end());
          break;
        case 2:
          q.push_back(choose(fill));
          q.insert(q.end(), alias.begin(), alias.end());
          q.push_back(pc);
          break;
        default:
          q.push_back(tc);
          q.insert(q.end(), alias.begin(), alias.end());
          q.push_back(pc);
          break;
      }
      out.samples.push_back({std::move(q), ent_ids[e], rels[r].name, object_of.at({e, r})});
    }
  }
  out.words = std::move(words);
  out.relations = std::move(relations);
  return out;
}

}  // namespace readapt
