#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "readapt/data/synthetic.hpp"
#include "readapt/eval/experiments.hpp"

using namespace readapt;
namespace fs = std::filesystem;

namespace {

PredictionRecord rec(std::size_t gold, std::size_t pred, bool gold_seen = false, bool pred_seen = false) {
  PredictionRecord r;
  r.gold = gold;
  r.predicted = pred;
  r.candidates = {std::min(gold, pred), std::max(gold, pred)};
  r.gold_seen = gold_seen;
  r.predicted_seen = pred_seen;
  return r;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Dense symmetric eigendecomposition of the sample covariance.
Eigen::MatrixXd oracle_projection(const Tensor& x, std::size_t k) {
  Eigen::MatrixXd m(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) m(i, j) = x(i, j);
  const Eigen::MatrixXd c = m.rowwise() - m.colwise().mean();
  const Eigen::MatrixXd cov = c.transpose() * c / static_cast<double>(x.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  Eigen::MatrixXd top(x.cols(), k);
  for (std::size_t j = 0; j < k; ++j) top.col(j) = es.eigenvectors().col(x.cols() - 1 - j);
  return c * top;
}

struct Small {
  Corpus corpus;
  DatasetSplit split;
  TrainConfig cfg;
  Small() {
    SyntheticConfig sc;
    sc.relations = 12;
    sc.entities = 40;
    sc.samples = 300;
    sc.dim = 8;
    sc.relation_dim = 6;
    sc.properties_per_type = 4;
    sc.property_vocabulary = 6;
    corpus = generate_synthetic_corpus(sc, 9);
    ResplitOptions opt;
    opt.targets = SplitTargets::with_seen_fraction(0.6);
    opt.tolerance = 0.05;
    split = balanced_resplit(corpus.samples, 9, opt);
    cfg.hidden = 4;
    cfg.critic_hidden = 4;
    cfg.batch_size = 32;
    cfg.negatives = 4;
    cfg.learning_rate = 0.01;
    cfg.epochs = 1;
  }
};

const Small& small() {
  static const Small s;
  return s;
}

}  // namespace

TEST(Metrics, HandEnumeratedExamples) {
  const std::vector<PredictionRecord> r = {rec(1, 1), rec(1, 1), rec(2, 1)};
  EXPECT_DOUBLE_EQ(micro_accuracy(r), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(macro_accuracy(r), 0.5);
  const auto rep = metric_report(r);
  EXPECT_EQ(rep.count, 3u);
  EXPECT_EQ(rep.per_relation.at(1), 1.0);
  EXPECT_EQ(rep.per_relation.at(2), 0.0);
  EXPECT_EQ(micro_accuracy({rec(3, 3)}), 1.0);
  EXPECT_THROW(micro_accuracy({}), ContractError);
  EXPECT_THROW(macro_accuracy({}), ContractError);
}

TEST(Metrics, DuplicationAndPermutationInvariance) {
  std::vector<PredictionRecord> r = {rec(1, 1), rec(2, 1), rec(2, 2), rec(3, 1)};
  auto d = r;
  d.insert(d.end(), r.begin(), r.end());
  EXPECT_EQ(micro_accuracy(d), micro_accuracy(r));
  EXPECT_EQ(macro_accuracy(d), macro_accuracy(r));
  std::reverse(d.begin(), d.end());
  EXPECT_EQ(micro_accuracy(d), micro_accuracy(r));
}

TEST(Metrics, SeenRate) {
  EXPECT_DOUBLE_EQ(seen_rate({rec(5, 1, false, true), rec(5, 5), rec(6, 6)}), 0.25);
  EXPECT_EQ(seen_rate({rec(5, 5), rec(6, 7)}), 0.0);
  EXPECT_THROW(seen_rate({rec(1, 1, true, true)}), ContractError);
}

TEST(Metrics, MeanStdAndFormatting) {
  const auto a = mean_std({0.6, 0.8});
  EXPECT_DOUBLE_EQ(a.mean, 0.7);
  EXPECT_NEAR(a.std, 0.1414213562373095, 1e-15);
  EXPECT_EQ(mean_std({0.4, 0.4, 0.4}).std, 0.0);
  EXPECT_EQ(mean_std({0.3}).std, 0.0);
  EXPECT_EQ(format_percent({0.773, 0.076}), "77.3\xC2\xB1" "7.6");
}

TEST(Predict, SingleCandidateTiesAndBruteForce) {
  const Tensor enc = Tensor::matrix({{1, 0}, {0, 1}, {1, 0}, {1, 1}});
  const std::vector<double> q = {1, 0.2};
  EXPECT_EQ(predict_relation(q, enc, {3}), 3u);
  EXPECT_EQ(predict_relation(q, enc, {2, 0}), 0u);  // equal scores: smaller id
  EXPECT_THROW(predict_relation(q, enc, {}), ContractError);
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const Tensor e = uniform(rng, {6, 3}, -1, 1);
    const Tensor qq = uniform(rng, {1, 3}, -1, 1);
    std::vector<std::size_t> cands = {5, 1, 3};
    std::size_t best = 1;
    for (auto c : {1, 3, 5})
      if (score(qq.row(0), e.row(c)) > score(qq.row(0), e.row(best))) best = c;
    EXPECT_EQ(predict_relation(qq.row(0), e, cands), best);
  }
}

TEST(Predict, CandidatesComeFromTheGoldSubjectPlusGold) {
  KnowledgeGraph kg{{{"s", "a.a.x", "o"}, {"s", "a.a.y", "o"}, {"t", "a.a.z", "o"}}, {}};
  RelationVocabulary rels;
  for (auto n : {"a.a.x", "a.a.y", "a.a.z", "a.a.w"}) rels.add(n, true);
  const CandidateIndex idx(kg, rels);
  EXPECT_EQ(idx.candidates("s", 0), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(idx.candidates("s", 3), (std::vector<std::size_t>{0, 1, 3}));
  EXPECT_EQ(idx.candidates("nobody", 2), (std::vector<std::size_t>{2}));
}

TEST(Pca, MatchesDenseEigensolverUpToSign) {
  Rng rng(17);
  for (int t = 0; t < 10; ++t) {
    const std::size_t n = 5 + 4 * t, d = 2 + t % 6;
    Tensor x = uniform(rng, {n, d}, -1, 1);
    for (std::size_t i = 0; i < n; ++i) x(i, 0) *= 3.0;  // separate the spectrum
    const auto r = pca_project(x);
    const auto want = oracle_projection(x, 2);
    for (std::size_t k = 0; k < 2; ++k) {
      const double sign = (want(0, k) * r.projections(0, k) < 0) ? -1.0 : 1.0;
      for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(r.projections(i, k), sign * want(i, k), 1e-8);
    }
  }
}

TEST(Pca, GeometryAndSignConvention) {
  const Tensor line = Tensor::matrix({{-1, 0, 0}, {0, 0, 0}, {2, 0, 0}});
  const auto r = pca_project(line);
  EXPECT_NEAR(r.explained[0], 1.0, 1e-12);
  EXPECT_NEAR(r.explained[1], 0.0, 1e-12);
  EXPECT_NEAR(r.components(0, 0), 1.0, 1e-12);
  const Tensor pair = Tensor::matrix({{0, 0}, {0, 0}, {-3, -4}});
  const auto p = pca_project(pair);
  EXPECT_NEAR(p.components(0, 0), 0.6, 1e-9);
  EXPECT_NEAR(p.components(0, 1), 0.8, 1e-9);
  EXPECT_THROW(pca_project(Tensor::matrix({{1, 1}, {1, 1}, {1, 1}})), DegeneracyError);
  EXPECT_THROW(pca_project(Tensor::matrix({{1, 1}, {2, 1}})), ContractError);
}

TEST(Pca, PreservesInnerProductsInTheTopSubspace) {
  Rng rng(5);
  Tensor x = uniform(rng, {12, 2}, -1, 1);
  const auto r = pca_project(x);
  std::vector<double> mean(2, 0.0);
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = 0; j < 2; ++j) mean[j] += x(i, j) / 12.0;
  for (std::size_t a = 0; a < 12; ++a)
    for (std::size_t b = 0; b < 12; ++b) {
      double orig = 0, proj = 0;
      for (std::size_t j = 0; j < 2; ++j) {
        orig += (x(a, j) - mean[j]) * (x(b, j) - mean[j]);
        proj += r.projections(a, j) * r.projections(b, j);
      }
      EXPECT_NEAR(proj, orig, 1e-9);
    }
}

TEST(Evaluation, AllMicroIsTheCountWeightedCombination) {
  const auto& s = small();
  auto m = train_variant({s.split, s.corpus.kg, s.corpus.words, s.corpus.relations}, ModelVariant::kBaselineFrozen,
                         s.cfg);
  const auto e = evaluate_split(m, CandidateIndex(s.corpus.kg, m.relations), s.split);
  ASSERT_TRUE(e.seen && e.unseen && e.all && e.seen_rate);
  const double ns = static_cast<double>(e.seen->count), nu = static_cast<double>(e.unseen->count);
  EXPECT_NEAR(e.all->micro, (e.seen->micro * ns + e.unseen->micro * nu) / (ns + nu), 1e-12);
  for (const auto& r : e.test_unseen) {
    EXPECT_NE(std::find(r.candidates.begin(), r.candidates.end(), r.predicted), r.candidates.end());
    EXPECT_FALSE(r.gold_seen);
  }
  MetricTable t;
  t.add(e);
  const fs::path p = fs::temp_directory_path() / "readapt_test_metrics.csv";
  write_metric_csv(t, p);
  const std::string text = read_file(p);
  EXPECT_EQ(text.substr(0, text.find('\n')), "split,metric,mean,std");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 8);
  EXPECT_NE(text.find("test-unseen,seen-rate,"), std::string::npos);
}

TEST(CrossValidation, FoldsAndSummaries) {
  const auto& s = small();
  PipelineConfig pc;
  pc.train = s.cfg;
  pc.resplit.targets = SplitTargets::with_seen_fraction(0.6);
  pc.resplit.tolerance = 0.05;
  pc.variants = {ModelVariant::kBaselineFinetune, ModelVariant::kBaselineFrozen};
  const auto r = cross_validate(s.corpus, 2, pc, 4);
  ASSERT_EQ(r.fold_seeds.size(), 2u);
  EXPECT_NE(r.fold_seeds[0], r.fold_seeds[1]);
  for (auto v : pc.variants) {
    ASSERT_EQ(r.folds.at(v).size(), 2u);
    const auto ms = r.tables.at(v).summary("test-unseen", "micro");
    EXPECT_DOUBLE_EQ(ms.mean, mean_std({r.folds.at(v)[0].unseen->micro, r.folds.at(v)[1].unseen->micro}).mean);
  }
  EXPECT_THROW(cross_validate(s.corpus, 1, pc, 4), ContractError);
  Corpus tiny = s.corpus;
  tiny.samples.resize(9);
  EXPECT_THROW(cross_validate(tiny, 2, pc, 4), ContractError);
}

TEST(Ablation, FullCountIsTheUnchangedSplitAndBadCountsFail) {
  const auto& s = small();
  const std::size_t all = relations_of(s.split.train).size();
  EXPECT_EQ(restrict_training_relations(s.split, all, 0, 1), s.split);
  EXPECT_EQ(restrict_training_relations(s.split, all, s.split.train.size(), 1), s.split);
  const auto sub = restrict_training_relations(s.split, 3, 20, 1);
  EXPECT_EQ(relations_of(sub.train).size(), 3u);
  EXPECT_LE(sub.train.size(), 20u);
  EXPECT_EQ(sub.test_unseen, s.split.test_unseen);
  EXPECT_EQ(check_split_invariants(sub), "");
  EXPECT_THROW(restrict_training_relations(s.split, all + 1, 0, 1), ContractError);
  EXPECT_THROW(relation_count_ablation(s.corpus, s.split, {0}, 0, s.cfg, 1), ContractError);
}

TEST(Ablation, OneRowPerModelAndCount) {
  const auto& s = small();
  const auto rows = relation_count_ablation(s.corpus, s.split, {3, 5}, 0, s.cfg, 2);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].variant, ModelVariant::kBaselineFinetune);
  EXPECT_EQ(rows[3].variant, ModelVariant::kAdversarialAdapterRecon);
  const fs::path p = fs::temp_directory_path() / "readapt_test_ablation.csv";
  write_ablation_csv(rows, p);
  const std::string text = read_file(p);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
}

TEST(PcaExport, OneRowPerRelation) {
  const auto& s = small();
  auto m = train_variant({s.split, s.corpus.kg, s.corpus.words, s.corpus.relations},
                         ModelVariant::kFrozenPlusMapping, s.cfg);
  const auto pts = relation_pca(m);
  EXPECT_EQ(pts.size(), m.relations.size());
  const fs::path p = fs::temp_directory_path() / "readapt_test_pca.csv";
  write_pca_csv(pts, p);
  const std::string text = read_file(p);
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), m.relations.size() + 1);
}
