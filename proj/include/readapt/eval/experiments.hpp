#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "readapt/data/corpus.hpp"
#include "readapt/data/resplit.hpp"
#include "readapt/eval/metrics.hpp"
#include "readapt/eval/pca.hpp"
#include "readapt/eval/predict.hpp"
#include "readapt/training/trainer.hpp"

namespace readapt {

/// Relation detection results of one model on the test parts of a split.
struct SplitEvaluation {
  std::vector<PredictionRecord> test_seen, test_unseen;
  std::optional<MetricReport> seen, unseen, all;
  std::optional<double> seen_rate;
};

inline SplitEvaluation evaluate_split(TrainedModel& model, const CandidateIndex& index, const DatasetSplit& split) {
  SplitEvaluation e;
  e.test_seen = predict_samples(model, index, split.test_seen);
  e.test_unseen = predict_samples(model, index, split.test_unseen);
  if (!e.test_seen.empty()) e.seen = metric_report(e.test_seen);
  if (!e.test_unseen.empty()) {
    e.unseen = metric_report(e.test_unseen);
    e.seen_rate = readapt::seen_rate(e.test_unseen);
  }
  std::vector<PredictionRecord> all = e.test_seen;
  all.insert(all.end(), e.test_unseen.begin(), e.test_unseen.end());
  if (!all.empty()) e.all = metric_report(all);
  return e;
}

// ---------------------------------------------------------------------------
// Metric tables: rows of (split, metric) with one value per run.

struct MetricRow {
  std::string split;   // test-seen | test-unseen | all
  std::string metric;  // micro | macro | seen-rate
  std::vector<double> values;
};

class MetricTable {
 public:
  void add(const SplitEvaluation& e) {
    if (e.seen) push("test-seen", "micro", e.seen->micro), push("test-seen", "macro", e.seen->macro);
    if (e.unseen) push("test-unseen", "micro", e.unseen->micro), push("test-unseen", "macro", e.unseen->macro);
    if (e.all) push("all", "micro", e.all->micro), push("all", "macro", e.all->macro);
    if (e.seen_rate) push("test-unseen", "seen-rate", *e.seen_rate);
  }
  void push(const std::string& split, const std::string& metric, double v) {
    for (auto& r : rows_)
      if (r.split == split && r.metric == metric) {
        r.values.push_back(v);
        return;
      }
    rows_.push_back({split, metric, {v}});
  }
  const std::vector<MetricRow>& rows() const { return rows_; }
  MeanStd summary(const std::string& split, const std::string& metric) const {
    for (const auto& r : rows_)
      if (r.split == split && r.metric == metric) return mean_std(r.values);
    throw ContractError("metric table: no values for " + split + "/" + metric);
  }

 private:
  std::vector<MetricRow> rows_;
};

/// CSV with header split,metric,mean,std.
inline void write_metric_csv(const MetricTable& t, const fs::path& path) {
  auto out = open_out(path);
  out << "split,metric,mean,std\n";
  for (const auto& r : t.rows()) {
    const auto ms = mean_std(r.values);
    out << r.split << ',' << r.metric << ',' << format_real(ms.mean) << ',' << format_real(ms.std) << '\n';
  }
  close_checked(out, path);
}

// ---------------------------------------------------------------------------
// Resplit + train + evaluate.

struct PipelineConfig {
  TrainConfig train;
  ResplitOptions resplit;
  std::vector<ModelVariant> variants = {ModelVariant::kBaselineFinetune, ModelVariant::kAdversarialAdapterRecon};
};

/// Trains every requested variant on `split`. One baseline-finetune model
/// is trained per call and reused as the pseudo-target source.
inline std::map<ModelVariant, SplitEvaluation> train_and_evaluate(const Corpus& corpus, const DatasetSplit& split,
                                                                  const std::vector<ModelVariant>& variants,
                                                                  const TrainConfig& cfg) {
  require(!variants.empty(), "train_and_evaluate: no variants");
  const TrainingData data{split, corpus.kg, corpus.words, corpus.relations};
  std::optional<TrainedModel> base;
  auto baseline = [&]() -> TrainedModel& {
    if (!base) base.emplace(pretrain_baseline(data, cfg));
    return *base;
  };
  std::map<ModelVariant, SplitEvaluation> out;
  for (auto v : variants) {
    if (v == ModelVariant::kBaselineFinetune) {
      TrainedModel& m = baseline();
      out[v] = evaluate_split(m, CandidateIndex(corpus.kg, m.relations), split);
      continue;
    }
    const PseudoTargetStore* targets = needs_targets(v) ? &baseline().targets : nullptr;
    TrainedModel m = train_with_adapter(data, targets, v, cfg);
    out[v] = evaluate_split(m, CandidateIndex(corpus.kg, m.relations), split);
  }
  return out;
}

struct CrossValResult {
  std::vector<std::uint64_t> fold_seeds;
  std::map<ModelVariant, std::vector<SplitEvaluation>> folds;
  std::map<ModelVariant, MetricTable> tables;
};

/// k independent seeded resplits, each trained and evaluated from scratch.
inline CrossValResult cross_validate(const Corpus& corpus, std::size_t k, const PipelineConfig& pc, std::uint64_t seed) {
  require(k >= 2, "cross_validate: need at least 2 folds");
  const std::size_t relations = relations_of(corpus.samples).size();
  if (relations < 2 || corpus.samples.size() < 5 * k)
    throw ContractError("cross_validate: corpus too small for " + std::to_string(k) + " folds (" +
                        std::to_string(corpus.samples.size()) + " samples, " + std::to_string(relations) +
                        " relations)");
  CrossValResult r;
  for (std::size_t f = 0; f < k; ++f) {
    const std::uint64_t fold_seed = derive_seed(seed, f + 1);
    r.fold_seeds.push_back(fold_seed);
    const DatasetSplit split = balanced_resplit(corpus.samples, fold_seed, pc.resplit);
    TrainConfig cfg = pc.train;
    cfg.seed = fold_seed;
    for (auto& [v, e] : train_and_evaluate(corpus, split, pc.variants, cfg)) {
      r.tables[v].add(e);
      r.folds[v].push_back(std::move(e));
    }
  }
  return r;
}

/// CSV with header variant,split,metric,mean,std,formatted.
inline void write_crossval_csv(const CrossValResult& r, const fs::path& path) {
  auto out = open_out(path);
  out << "variant,split,metric,mean,std,formatted\n";
  for (const auto& [v, table] : r.tables)
    for (const auto& row : table.rows()) {
      const auto ms = mean_std(row.values);
      out << variant_name(v) << ',' << row.split << ',' << row.metric << ',' << format_real(ms.mean) << ','
          << format_real(ms.std) << ',' << format_percent(ms) << '\n';
    }
  close_checked(out, path);
}

// ---------------------------------------------------------------------------
// Relation-count ablation.

struct AblationRow {
  ModelVariant variant;
  std::size_t count = 0;
  std::size_t train_samples = 0;
  double unseen_macro = 0.0;
};

/// Keeps `count` of the split's training relations (a seeded random subset)
/// and at most `budget` of their training samples (0 = no cap). Dev-seen and
/// Test-seen are filtered to the kept relations; the unseen parts are
/// untouched. Keeping every relation with no effective cap returns the split
/// unchanged.
inline DatasetSplit restrict_training_relations(const DatasetSplit& split, std::size_t count, std::size_t budget,
                                                std::uint64_t seed) {
  const auto seen = relations_of(split.train);
  if (count == 0 || count > seen.size())
    throw ContractError("relation_count_ablation: count " + std::to_string(count) + " not in [1, " +
                        std::to_string(seen.size()) + "]");
  std::vector<std::string> order(seen.begin(), seen.end());
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::set<std::string> keep(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
  auto filter = [&](const std::vector<QASample>& in) {
    std::vector<QASample> out;
    for (const auto& s : in)
      if (keep.count(s.relation)) out.push_back(s);
    return out;
  };
  DatasetSplit out = split;
  out.train = filter(split.train);
  out.dev_seen = filter(split.dev_seen);
  out.test_seen = filter(split.test_seen);
  if (budget != 0 && out.train.size() > budget) {
    std::vector<std::size_t> idx(out.train.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(budget);
    std::sort(idx.begin(), idx.end());
    std::vector<QASample> sub;
    for (auto i : idx) sub.push_back(out.train[i]);
    out.train = std::move(sub);
  }
  return out;
}

/// For each count, retrains baseline-finetune and the final variant on a
/// relation subset and reports macro accuracy on Test-unseen.
inline std::vector<AblationRow> relation_count_ablation(const Corpus& corpus, const DatasetSplit& split,
                                                        const std::vector<std::size_t>& counts, std::size_t budget,
                                                        const TrainConfig& cfg, std::uint64_t seed) {
  require(!counts.empty(), "relation_count_ablation: no counts");
  require(!split.test_unseen.empty(), "relation_count_ablation: empty Test-unseen");
  const std::size_t available = relations_of(split.train).size();
  for (auto c : counts)
    if (c == 0 || c > available)
      throw ContractError("relation_count_ablation: count " + std::to_string(c) + " exceeds the " +
                          std::to_string(available) + " seen relations");
  const std::vector<ModelVariant> variants = {ModelVariant::kBaselineFinetune, ModelVariant::kAdversarialAdapterRecon};
  std::vector<AblationRow> rows;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const DatasetSplit sub = restrict_training_relations(split, counts[i], budget, derive_seed(seed, i + 1));
    for (auto& [v, e] : train_and_evaluate(corpus, sub, variants, cfg))
      rows.push_back({v, counts[i], sub.train.size(), e.unseen->macro});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const AblationRow& a, const AblationRow& b) {
    return a.variant < b.variant;
  });
  return rows;
}

/// CSV with header model,count,train_samples,unseen_macro.
inline void write_ablation_csv(const std::vector<AblationRow>& rows, const fs::path& path) {
  auto out = open_out(path);
  out << "model,count,train_samples,unseen_macro\n";
  for (const auto& r : rows)
    out << variant_name(r.variant) << ',' << r.count << ',' << r.train_samples << ',' << format_real(r.unseen_macro)
        << '\n';
  close_checked(out, path);
}

// ---------------------------------------------------------------------------
// PCA export of the relation-level inputs the detector sees.

struct PcaPoint {
  std::string relation;
  bool seen = false;
  double x = 0.0, y = 0.0;
};

/// Projects every relation's detector input (fine-tuned table, e_g, or
/// adapter output, by variant) onto its top two principal components.
inline std::vector<PcaPoint> relation_pca(TrainedModel& model, PcaResult* details = nullptr) {
  std::vector<std::size_t> ids(model.relations.size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  Graph g;
  const Tensor vectors = g.value(model.relation_vectors(g, ids));
  PcaResult r = pca_project(vectors);
  std::vector<PcaPoint> out;
  for (auto id : ids)
    out.push_back({model.relations.name(id), model.relations.is_seen(id), r.projections(id, 0), r.projections(id, 1)});
  if (details) *details = std::move(r);
  return out;
}

/// CSV with header relation,seen,x,y.
inline void write_pca_csv(const std::vector<PcaPoint>& points, const fs::path& path) {
  auto out = open_out(path);
  out << "relation,seen,x,y\n";
  for (const auto& p : points)
    out << p.relation << ',' << (p.seen ? 1 : 0) << ',' << format_real(p.x) << ',' << format_real(p.y) << '\n';
  close_checked(out, path);
}

}  // namespace readapt
