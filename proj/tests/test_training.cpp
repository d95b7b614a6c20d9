#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "readapt/autodiff/gradcheck.hpp"
#include "readapt/data/resplit.hpp"
#include "readapt/data/synthetic.hpp"
#include "readapt/training/checkpoint.hpp"
#include "readapt/training/trainer.hpp"

using namespace readapt;
namespace fs = std::filesystem;

namespace {

struct Fixture {
  Corpus corpus;
  DatasetSplit split;
  TrainConfig cfg;

  Fixture() {
    SyntheticConfig sc;
    sc.relations = 12;
    sc.entities = 40;
    sc.samples = 300;
    sc.dim = 8;
    sc.relation_dim = 6;
    sc.properties_per_type = 4;
    sc.property_vocabulary = 6;
    corpus = generate_synthetic_corpus(sc, 3);
    ResplitOptions opt;
    opt.targets = SplitTargets::with_seen_fraction(0.6);
    opt.tolerance = 0.05;
    split = balanced_resplit(corpus.samples, 3, opt);
    cfg.hidden = 4;
    cfg.critic_hidden = 4;
    cfg.batch_size = 32;
    cfg.negatives = 4;
    cfg.learning_rate = 0.01;
    cfg.epochs = 2;
  }
  TrainingData data() const { return {split, corpus.kg, corpus.words, corpus.relations}; }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(TrainConfig, DefaultsAndTextRoundTrip) {
  TrainConfig c;
  EXPECT_EQ(c.learning_rate, 1e-4);
  EXPECT_EQ(c.batch_size, 256u);
  EXPECT_EQ(c.negatives, 256u);
  EXPECT_EQ(c.margin, 0.1);
  EXPECT_EQ(c.clip, 0.1);
  EXPECT_EQ(c.critic_steps, 5u);
  c.learning_rate = 0.0037;
  c.negatives_from_all = true;
  c.seed = 99;
  TrainConfig back;
  for (const auto& [k, v] : c.to_map()) ASSERT_TRUE(back.set(k, v)) << k;
  EXPECT_EQ(back, c);
  EXPECT_FALSE(back.set("nope", "1"));
  EXPECT_THROW(back.set("epochs", "-1"), ContractError);
  EXPECT_THROW(back.set("negative_pool", "some"), ContractError);
  c.dropout = 1.0;
  EXPECT_THROW(c.validate(), ContractError);
}

TEST(Variants, NamesAndComponents) {
  for (auto v : kAllVariants) EXPECT_EQ(parse_variant(variant_name(v)), v);
  EXPECT_EQ(parse_variant("final"), ModelVariant::kAdversarialAdapterRecon);
  EXPECT_THROW(parse_variant("adapter"), ContractError);
  EXPECT_FALSE(has_mapping(ModelVariant::kBaselineFrozen));
  EXPECT_TRUE(has_mapping(ModelVariant::kFrozenPlusMapping));
  EXPECT_FALSE(needs_targets(ModelVariant::kFrozenPlusMapping));
  EXPECT_TRUE(uses_mse(ModelVariant::kBasicAdapterRecon));
  EXPECT_FALSE(uses_mse(ModelVariant::kAdversarialAdapter));
  EXPECT_TRUE(uses_adversary(ModelVariant::kAdversarialAdapterRecon));
  EXPECT_TRUE(uses_reconstruction(ModelVariant::kAdversarialAdapterRecon));
}

TEST(Sampling, NegativesExcludeGoldAndAreDeterministic) {
  Rng a(4), b(4);
  const std::vector<std::size_t> pool = {0, 2, 3, 5, 8};
  auto x = sample_negatives(1, pool, 3, a);
  EXPECT_EQ(x, sample_negatives(1, pool, 3, b));
  EXPECT_EQ(std::set<std::size_t>(x.begin(), x.end()).size(), 3u);
  auto y = sample_negatives(1, pool, 12, a);  // more than the pool: with replacement
  EXPECT_EQ(y.size(), 12u);
  for (auto id : y) EXPECT_NE(std::find(pool.begin(), pool.end(), id), pool.end());
  EXPECT_THROW(sample_negatives(2, pool, 3, a), ContractError);
  EXPECT_THROW(sample_negatives(1, {}, 3, a), ContractError);
}

TEST(Hinge, BatchedFormMatchesDirectFormula) {
  Rng rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + trial % 4, m = 3 + trial % 3;
    const Tensor s = uniform(rng, {n, m}, -1, 1);
    std::vector<std::size_t> pos;
    std::vector<std::vector<std::size_t>> negs;
    double want = 0;
    for (std::size_t i = 0; i < n; ++i) {
      pos.push_back(i % m);
      negs.push_back({(i + 1) % m, (i + 2) % m, (i + 1) % m});
      for (auto c : negs.back()) want += std::max(0.0, 0.1 - s(i, pos[i]) + s(i, c));
    }
    Graph g;
    EXPECT_NEAR(g.value(hinge_ranking_loss(g, g.constant(s), pos, negs, 0.1)).item(), want / n, 1e-12);
  }
}

TEST(Hinge, ZeroWhenPositiveLeadsByMargin) {
  Graph g;
  const NodeId s = g.constant(Tensor::matrix({{0.9, 0.5, 0.79}}));
  const std::vector<std::size_t> pos = {0};
  const std::vector<std::vector<std::size_t>> negs = {{1, 2}};
  EXPECT_EQ(g.value(hinge_ranking_loss(g, s, pos, negs, 0.1)).item(), 0.0);
  EXPECT_THROW(hinge_ranking_loss(g, s, pos, negs, 0.0), ContractError);
}

TEST(Model, VariantParameterSets) {
  const auto& f = fixture();
  auto data = f.data();
  const auto rels = relation_inventory(data);
  auto names = [&](ModelVariant v) {
    auto m = make_model(v, f.cfg, rels, f.corpus.words, f.corpus.relations);
    std::set<std::string> s;
    for (auto* p : m.all_parameters()) s.insert(p->name);
    return s;
  };
  auto base = names(ModelVariant::kBaselineFinetune);
  EXPECT_TRUE(base.count("rel_table"));
  EXPECT_FALSE(base.count("adapter.w"));
  auto fin = names(ModelVariant::kAdversarialAdapterRecon);
  EXPECT_FALSE(fin.count("rel_table"));
  for (const char* n : {"adapter.w", "adapter_rev.w", "disc.w1", "disc.b2"}) EXPECT_TRUE(fin.count(n)) << n;
  EXPECT_FALSE(names(ModelVariant::kBasicAdapter).count("disc.w1"));
  EXPECT_FALSE(names(ModelVariant::kBaselineFrozen).count("adapter.w"));
}

TEST(Model, WordsTrainOnlyInFinetuneAndCriticNeverInDetectorStep) {
  const auto& f = fixture();
  const auto rels = relation_inventory(f.data());
  auto fin = make_model(ModelVariant::kAdversarialAdapterRecon, f.cfg, rels, f.corpus.words, f.corpus.relations);
  for (auto* p : fin.trainable_parameters()) {
    EXPECT_NE(p->name, "word_emb");
    EXPECT_NE(p->name.rfind("disc.", 0), 0u) << p->name;
  }
  auto base = make_model(ModelVariant::kBaselineFinetune, f.cfg, rels, f.corpus.words, f.corpus.relations);
  bool words = false;
  for (auto* p : base.trainable_parameters()) words |= p->name == "word_emb";
  EXPECT_TRUE(words);
}

TEST(Model, MissingRelationEmbeddingIsContractError) {
  const auto& f = fixture();
  RelationVocabulary rels;
  rels.add("no.such.relation", true);
  EXPECT_THROW(make_model(ModelVariant::kBaselineFrozen, f.cfg, rels, f.corpus.words, f.corpus.relations),
               ContractError);
}

TEST(Objective, CompositeLossGradientMatchesFiniteDifferences) {
  const auto& f = fixture();
  TrainConfig cfg = f.cfg;
  cfg.dropout = 0.0;
  auto base = pretrain_baseline(f.data(), cfg);
  auto m = make_model(ModelVariant::kAdversarialAdapterRecon, cfg, base.relations, f.corpus.words, f.corpus.relations);
  m.targets = base.targets;
  std::vector<const QASample*> batch;
  for (std::size_t i = 0; i < 3; ++i) batch.push_back(&f.split.train[i]);
  const auto seen = m.relations.seen_ids();
  const std::vector<std::size_t> seen_batch(seen.begin(), seen.begin() + 3);
  const std::vector<std::size_t> all_batch = {0, 5, 9};
  LossBuilder build = [&](Graph& g) {
    Rng rng(1);
    return batch_loss(g, m, batch, seen, rng, seen_batch, all_batch);
  };
  std::vector<Parameter*> ps;
  for (auto* p : m.trainable_parameters())
    if (p->name.rfind("lstm2", 0) != 0) ps.push_back(p);  // keep the check quick
  EXPECT_TRUE(finite_difference_check(build, ps, 1e-5, 1e-4).pass);
}

TEST(Fit, DeterministicForAFixedSeed) {
  const auto& f = fixture();
  auto a = train_variant(f.data(), ModelVariant::kAdversarialAdapterRecon, f.cfg);
  auto b = train_variant(f.data(), ModelVariant::kAdversarialAdapterRecon, f.cfg);
  EXPECT_EQ(a.log, b.log);
  EXPECT_EQ(a.snapshot().at("adapter.w"), b.snapshot().at("adapter.w"));
  TrainConfig other = f.cfg;
  other.seed = 2;
  EXPECT_NE(train_variant(f.data(), ModelVariant::kAdversarialAdapterRecon, other).log, a.log);
}

TEST(Fit, CriticClippedAfterEveryUpdateAndScheduleCounts) {
  const auto& f = fixture();
  auto base = pretrain_baseline(f.data(), f.cfg);
  std::size_t updates = 0, violations = 0;
  TrainHooks hooks;
  hooks.after_critic_update = [&](const TrainedModel& m) {
    ++updates;
    const auto& D = *m.adapters.critic;
    for (const Parameter* p : {&D.w1, &D.b1, &D.w2, &D.b2})
      for (std::size_t i = 0; i < p->value.size(); ++i) violations += std::abs(p->value[i]) > f.cfg.clip;
  };
  auto m = train_with_adapter(f.data(), &base.targets, ModelVariant::kAdversarialAdapter, f.cfg, hooks);
  std::size_t logged = 0, gen = 0;
  for (const auto& r : m.log) logged += r.critic_updates, gen += r.generator_updates;
  EXPECT_EQ(violations, 0u);
  EXPECT_EQ(updates, logged);
  EXPECT_EQ(logged, gen * f.cfg.critic_steps);
  EXPECT_GT(gen, 0u);
}

TEST(Fit, PseudoTargetsAreTheFinetunedSeenRows) {
  const auto& f = fixture();
  auto base = pretrain_baseline(f.data(), f.cfg);
  EXPECT_EQ(base.targets.keys(), base.relations.seen_ids());
  for (auto id : base.targets.keys()) {
    auto row = base.relation_table->value.row(id);
    EXPECT_EQ(base.targets.get(id), std::vector<double>(row.begin(), row.end()));
  }
  // e_g itself never moves.
  for (std::size_t i = 0; i < base.relations.size(); ++i) {
    std::span<const double> g = base.general.row(i), src = f.corpus.relations.row(base.relations.name(i));
    EXPECT_TRUE(std::equal(g.begin(), g.end(), src.begin()));
  }
}

TEST(Fit, AdapterTrainingPreconditions) {
  const auto& f = fixture();
  EXPECT_THROW(train_with_adapter(f.data(), nullptr, ModelVariant::kBasicAdapter, f.cfg), ContractError);
  EXPECT_THROW(train_with_adapter(f.data(), nullptr, ModelVariant::kBaselineFinetune, f.cfg), ContractError);
  PseudoTargetStore wrong(3);
  wrong.set(0, {1, 2, 3});
  EXPECT_THROW(train_with_adapter(f.data(), &wrong, ModelVariant::kBasicAdapter, f.cfg), DimensionError);
  const auto rels = relation_inventory(f.data());
  PseudoTargetStore unseen(f.corpus.relations.dim());
  unseen.set(rels.unseen_ids().front(), std::vector<double>(f.corpus.relations.dim(), 0.0));
  EXPECT_THROW(train_with_adapter(f.data(), &unseen, ModelVariant::kBasicAdapter, f.cfg), ContractError);
  EXPECT_NO_THROW(train_with_adapter(f.data(), nullptr, ModelVariant::kFrozenPlusMapping, f.cfg));
}

TEST(Fit, EarlyStoppingKeepsTheBestDevEpoch) {
  const auto& f = fixture();
  TrainConfig cfg = f.cfg;
  cfg.epochs = 6;
  cfg.patience = 2;
  auto m = train_variant(f.data(), ModelVariant::kBaselineFrozen, cfg);
  ASSERT_FALSE(m.log.empty());
  EXPECT_LE(m.log.size(), 6u);
  double best = 0;
  for (const auto& r : m.log) best = std::max(best, r.dev_seen_accuracy);
  const CandidateIndex idx(f.corpus.kg, m.relations);
  EXPECT_EQ(micro_accuracy(predict_samples(m, idx, f.split.dev_seen)), best);
}

TEST(Checkpoint, RoundTripIsExactForEveryVariant) {
  const auto& f = fixture();
  const fs::path dir = fs::temp_directory_path() / "readapt_test_ckpt";
  fs::remove_all(dir);
  auto base = pretrain_baseline(f.data(), f.cfg);
  for (auto v : kAllVariants) {
    TrainedModel m = v == ModelVariant::kBaselineFinetune ? pretrain_baseline(f.data(), f.cfg)
                                                          : train_with_adapter(f.data(), &base.targets, v, f.cfg);
    const fs::path p = dir / (std::string(variant_name(v)) + ".ckpt");
    save_checkpoint(m, p);
    TrainedModel back = load_checkpoint(p);
    EXPECT_EQ(back.variant, v);
    EXPECT_EQ(back.config, m.config);
    EXPECT_EQ(back.log, m.log);
    EXPECT_EQ(back.targets, m.targets);
    EXPECT_EQ(back.snapshot(), m.snapshot());
    EXPECT_EQ(back.encode_all_relations(), m.encode_all_relations());
    save_checkpoint(back, dir / "again.ckpt");
    EXPECT_EQ(read_file(p), read_file(dir / "again.ckpt"));
  }
}

TEST(Checkpoint, MalformedFilesReportTheLine) {
  const auto& f = fixture();
  const fs::path dir = fs::temp_directory_path() / "readapt_test_ckpt_bad";
  fs::remove_all(dir);
  auto m = train_variant(f.data(), ModelVariant::kFrozenPlusMapping, f.cfg);
  save_checkpoint(m, dir / "ok.ckpt");
  const std::string text = read_file(dir / "ok.ckpt");
  auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream(dir / name, std::ios::binary) << body;
    return dir / name;
  };
  EXPECT_THROW(load_checkpoint(write("magic.ckpt", "nope\n" + text.substr(text.find('\n') + 1))), FormatError);
  EXPECT_THROW(load_checkpoint(write("trunc.ckpt", text.substr(0, text.size() / 2))), FormatError);
  std::string renamed = text;
  renamed.replace(renamed.find("tensor adapter.w"), 16, "tensor adapter.q");
  EXPECT_THROW(load_checkpoint(write("name.ckpt", renamed)), FormatError);
  std::string variant = text;
  variant.replace(variant.find("frozen-plus-mapping"), 19, "baseline-frozen");
  EXPECT_THROW(load_checkpoint(write("variant.ckpt", variant)), FormatError);
  EXPECT_THROW(load_checkpoint(dir / "missing.ckpt"), IoError);
}

TEST(TrainingLog, CsvHasOneRowPerEpoch) {
  const auto& f = fixture();
  auto m = train_variant(f.data(), ModelVariant::kBaselineFrozen, f.cfg);
  const fs::path p = fs::temp_directory_path() / "readapt_test_log.csv";
  save_training_log(m.log, p);
  std::istringstream in(read_file(p));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "epoch,loss,dev_seen_acc,dev_unseen_acc,critic_updates,generator_updates");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, m.log.size());
}
