#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <random>
#include <tuple>

#include "readapt/kbqa/kbqa.hpp"

using namespace readapt;
namespace fs = std::filesystem;

namespace {

using Tokens = std::vector<std::string>;

KnowledgeGraph toy_kg() {
  KnowledgeGraph kg;
  kg.triples = {{"m.01", "music.recording.producer", "m.50"},
                {"m.01", "music.recording.artist", "m.51"},
                {"m.01", "music.recording.producer", "m.49"},
                {"m.02", "location.city.country", "m.60"},
                {"m.03", "location.city.country", "m.61"},
                {"m.03", "people.person.place_of_birth", "m.62"},
                {"m.04", "people.person.place_of_birth", "m.63"},
                {"m.05", "music.recording.artist", "m.64"}};
  kg.aliases = {{"m.01", {"twenty", "one"}},
                {"m.02", {"New", "York"}},
                {"m.03", {"york"}},
                {"m.04", {"adele"}},
                {"m.05", {"adele"}},
                {"m.06", {"one"}}};
  return kg;
}

struct Toy {
  KnowledgeGraph kg = toy_kg();
  TripleIndex index{kg};
  TrainedModel model;
  Toy() {
    Rng rng(17);
    std::uniform_real_distribution<double> u(-1, 1);
    EmbeddingTable words(4), rels(5);
    for (const char* w : {"who", "produced", "recording", "twenty", "one", "music", "producer", "artist", "location",
                          "city", "country", "people", "person", "place", "of", "birth", "where", "born", "sang"})
      words.add(w, {u(rng), u(rng), u(rng), u(rng)});
    RelationVocabulary vocab;
    for (const auto& name : kg.relation_names()) {
      vocab.add(name, true);
      std::vector<double> v(5);
      for (auto& x : v) x = u(rng);
      rels.add(name, v);
    }
    TrainConfig cfg;
    cfg.hidden = 3;
    cfg.seed = 4;
    model = make_model(ModelVariant::kBaselineFinetune, cfg, vocab, words, rels);
  }
};

Toy& toy() {
  static Toy t;
  return t;
}

// Exhaustive reference: every fact of every linked subject, ranked by
// (score desc, overlap desc, subject asc, relation id asc, object asc).
std::optional<Triple> oracle_answer(Toy& t, const Tokens& q) {
  const Tensor rel_enc = t.model.encode_all_relations();
  const Tensor qe = t.model.encode_questions({q});
  using Key = std::tuple<double, long, std::string, long, std::string>;  // smaller is better
  std::optional<Key> best;
  std::optional<Triple> out;
  for (const auto& link : link_entities(q, t.index))
    for (const auto& tr : t.kg.triples) {
      if (tr.subject != link.entity) continue;
      const auto rid = t.model.relations.id(tr.relation);
      const double s = cosine(qe.row(0), rel_enc.row(rid));
      Key k{-s, -static_cast<long>(link.overlap), tr.subject, static_cast<long>(rid), tr.object};
      if (!best || k < *best) {
        best = k;
        out = tr;
      }
    }
  return out;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Linking, FindsAliasSpanCaseInsensitively) {
  const auto& t = toy();
  EXPECT_EQ(link_entities({"Who", "produced", "recording", "Twenty", "One"}, t.index),
            (std::vector<LinkedEntity>{{"m.01", 2}}));
  EXPECT_TRUE(link_entities({"who", "produced", "it"}, t.index).empty());
}

TEST(Linking, LongerSpanSuppressesOverlappingShorterOne) {
  const auto& t = toy();
  EXPECT_EQ(link_entities({"where", "is", "new", "york"}, t.index), (std::vector<LinkedEntity>{{"m.02", 2}}));
  EXPECT_EQ(link_entities({"where", "is", "york"}, t.index), (std::vector<LinkedEntity>{{"m.03", 1}}));
  // Non-overlapping matches of different lengths are both kept.
  EXPECT_EQ(link_entities({"twenty", "one", "adele"}, t.index),
            (std::vector<LinkedEntity>{{"m.01", 2}, {"m.04", 1}, {"m.05", 1}}));
}

TEST(Answering, MatchesExhaustiveOracle) {
  auto& t = toy();
  KbqaSystem sys(t.model, t.index);
  const std::vector<Tokens> qs = {{"who", "produced", "recording", "twenty", "one"},
                                  {"where", "is", "new", "york"},
                                  {"where", "was", "adele", "born"},
                                  {"who", "sang", "adele"},
                                  {"twenty", "one", "york", "country"},
                                  {"one", "artist"}};
  for (const auto& q : qs) {
    const auto got = sys.answer(q);
    const auto want = oracle_answer(t, q);
    ASSERT_EQ(got.fact.has_value(), want.has_value());
    if (want) EXPECT_EQ(*got.fact, *want) << q.back();
  }
}

TEST(Answering, SmallestObjectForTheChosenPair) {
  auto& t = toy();
  KnowledgeGraph kg;
  kg.triples = {{"m.01", "music.recording.producer", "m.50"}, {"m.01", "music.recording.producer", "m.49"}};
  kg.aliases = {{"m.01", {"twenty", "one"}}};
  TripleIndex idx(kg);
  KbqaSystem sys(t.model, idx);
  const auto a = sys.answer({"twenty", "one"});
  ASSERT_TRUE(a.fact);
  EXPECT_EQ(*a.fact, (Triple{"m.01", "music.recording.producer", "m.49"}));
}

TEST(Answering, TiesGoToLongerSpanThenSmallerEntity) {
  auto& t = toy();
  // m.04 and m.05 share an alias and a relation, so their scores are equal
  // and the smaller id wins.
  KnowledgeGraph kg;
  kg.triples = {{"m.05", "location.city.country", "x"}, {"m.04", "location.city.country", "y"},
                {"m.06", "location.city.country", "z"}};
  kg.aliases = {{"m.05", {"adele"}}, {"m.04", {"adele"}}, {"m.06", {"twenty", "one"}}};
  TripleIndex idx(kg);
  KbqaSystem tied(t.model, idx);
  auto a = tied.answer({"who", "is", "adele"});
  ASSERT_TRUE(a.fact);
  EXPECT_EQ(a.fact->subject, "m.04");
  // Equal scores across a two-token and a one-token link: the longer wins
  // even though its id is larger.
  a = tied.answer({"twenty", "one", "adele"});
  ASSERT_TRUE(a.fact);
  EXPECT_EQ(a.fact->subject, "m.06");
}

TEST(Answering, UnlinkedQuestionIsUnanswerable) {
  auto& t = toy();
  KbqaSystem sys(t.model, t.index);
  EXPECT_FALSE(sys.answer({"who", "sang", "it"}).fact);
  EXPECT_THROW(sys.answer({}), ContractError);
}

TEST(Answering, BatchEqualsOneByOne) {
  auto& t = toy();
  KbqaSystem sys(t.model, t.index);
  std::vector<QASample> qs = {{{"twenty", "one", "producer"}, "m.01", "music.recording.producer", "m.49"},
                              {{"who", "sang", "it"}, "m.01", "music.recording.artist", "m.51"},
                              {{"where", "was", "adele", "born"}, "m.04", "people.person.place_of_birth", "m.63"}};
  const auto all = sys.answer_all(qs);
  ASSERT_EQ(all.size(), 3u);
  for (std::size_t i = 0; i < qs.size(); ++i) {
    const auto one = sys.answer(qs[i].question);
    EXPECT_EQ(all[i].fact, one.fact);
    if (one.fact) EXPECT_NEAR(all[i].score, one.score, 1e-12);
  }
}

TEST(Accuracy, SubjectAndRelationMustBothMatch) {
  const std::vector<QASample> gold = {{{"q"}, "m.1", "a.b.c", "m.9"},
                                      {{"q"}, "m.2", "a.b.c", "m.9"},
                                      {{"q"}, "m.3", "a.b.d", "m.9"}};
  std::vector<KbqaAnswer> pred(3);
  pred[0].fact = Triple{"m.1", "a.b.c", "other"};  // object is not compared
  pred[1].fact = Triple{"m.7", "a.b.c", "m.9"};    // right relation, wrong subject
  pred[2].fact = Triple{"m.3", "a.b.d", "m.9"};
  EXPECT_NEAR(kbqa_accuracy(pred, gold), 2.0 / 3.0, 1e-15);
  pred[2].fact.reset();
  EXPECT_NEAR(kbqa_accuracy(pred, gold), 1.0 / 3.0, 1e-15);
  EXPECT_THROW(kbqa_accuracy({}, gold), ContractError);
  EXPECT_THROW(kbqa_accuracy({}, {}), ContractError);
}

TEST(Answers, TsvMarksUnanswerable) {
  const fs::path dir = fs::temp_directory_path() / "readapt_test_kbqa";
  fs::create_directories(dir);
  std::vector<KbqaAnswer> a(2);
  a[0].fact = Triple{"m.1", "a.b.c", "m.2"};
  write_answers_tsv(a, dir / "answers.tsv");
  EXPECT_EQ(read_file(dir / "answers.tsv"), "0\tm.1\ta.b.c\tm.2\n1\tUNANSWERABLE\tUNANSWERABLE\tUNANSWERABLE\n");
}
