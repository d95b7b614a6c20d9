#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "readapt/cli/run_config.hpp"
#include "readapt/data/corpus.hpp"
#include "readapt/data/resplit.hpp"
#include "readapt/data/synthetic.hpp"
#include "readapt/eval/experiments.hpp"
#include "readapt/kbqa/kbqa.hpp"
#include "readapt/training/checkpoint.hpp"
#include "readapt/training/trainer.hpp"

namespace readapt {

// Each command reads what it needs from the resolved config, writes into
// `out` (already created, config echoed) and returns a one-line summary.

namespace detail {

inline const std::string& need_path(const std::string& value, const char* key) {
  if (value.empty()) throw ContractError(std::string("config: '") + key + "' is required for this command");
  return value;
}

inline Corpus corpus_of(const RunConfig& cfg) { return load_corpus(need_path(cfg.corpus, "corpus")); }
inline DatasetSplit split_of(const RunConfig& cfg) { return load_split(need_path(cfg.split, "split")); }

inline TrainedModel checkpoint_of(const RunConfig& cfg) {
  const fs::path p = need_path(cfg.checkpoint, "checkpoint");
  if (!fs::exists(p)) throw IoError("checkpoint '" + p.string() + "' does not exist");
  return load_checkpoint(p);
}

inline std::vector<QASample> kbqa_samples(const RunConfig& cfg, const DatasetSplit& split) {
  if (cfg.kbqa_part == "test_seen") return split.test_seen;
  if (cfg.kbqa_part == "test_unseen") return split.test_unseen;
  if (cfg.kbqa_part == "all") {
    auto s = split.test_seen;
    s.insert(s.end(), split.test_unseen.begin(), split.test_unseen.end());
    return s;
  }
  throw ContractError("config: 'kbqa_part' expects test_seen, test_unseen or all");
}

inline std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * v);
  return buf;
}

}  // namespace detail

inline std::string cmd_gen_synth(const RunConfig& cfg, const fs::path& out) {
  const Corpus c = generate_synthetic_corpus(cfg.synth, cfg.seed());
  save_corpus(c, out);
  return "corpus with " + std::to_string(c.samples.size()) + " samples, " + std::to_string(c.relations.size()) +
         " relations, " + std::to_string(c.kg.triples.size()) + " triples";
}

/// Writes the five split files and report.csv (split, samples, relations,
/// seen_relations, unseen_relations; seen = occurs in train).
inline std::string cmd_resplit(const RunConfig& cfg, const fs::path& out) {
  const auto samples = load_dataset(fs::path(detail::need_path(cfg.corpus, "corpus")) / kSamplesFile);
  const DatasetSplit split = balanced_resplit(samples, cfg.seed(), cfg.resplit_options());
  save_dataset(split, out);
  const auto seen = relations_of(split.train);
  auto report = open_out(out / "report.csv");
  report << "split,samples,relations,seen_relations,unseen_relations\n";
  for (auto p : kSplitParts) {
    const auto rels = relations_of(split.part(p));
    std::size_t s = 0;
    for (const auto& r : rels) s += seen.count(r);
    report << split_name(p) << ',' << split.part(p).size() << ',' << rels.size() << ',' << s << ','
           << rels.size() - s << '\n';
  }
  close_checked(report, out / "report.csv");
  return "split " + std::to_string(split.total()) + " samples: train " + std::to_string(split.train.size()) +
         ", test-unseen " + std::to_string(split.test_unseen.size());
}

/// Trains `variant`; writes model.ckpt and train_log.csv (plus baseline.ckpt
/// when a baseline had to be pretrained for pseudo targets).
inline std::string cmd_train(const RunConfig& cfg, const fs::path& out) {
  const ModelVariant variant = parse_variant(cfg.variant);
  const Corpus corpus = detail::corpus_of(cfg);
  const DatasetSplit split = detail::split_of(cfg);
  const TrainingData data{split, corpus.kg, corpus.words, corpus.relations};
  std::optional<TrainedModel> base;
  if (needs_targets(variant) || variant == ModelVariant::kBaselineFinetune) {
    if (!cfg.baseline.empty() && variant != ModelVariant::kBaselineFinetune) {
      if (!fs::exists(cfg.baseline)) throw IoError("baseline checkpoint '" + cfg.baseline + "' does not exist");
      base.emplace(load_checkpoint(cfg.baseline));
      const auto inventory = relation_inventory(data);
      bool same = inventory.size() == base->relations.size();
      for (std::size_t i = 0; same && i < inventory.size(); ++i)
        same = inventory.name(i) == base->relations.name(i) && inventory.is_seen(i) == base->relations.is_seen(i);
      if (!same) throw ContractError("baseline checkpoint was trained on a different relation inventory");
      if (base->targets.empty()) throw ContractError("baseline checkpoint carries no pseudo targets");
    } else {
      base.emplace(pretrain_baseline(data, cfg.train));
      if (variant != ModelVariant::kBaselineFinetune) save_checkpoint(*base, out / "baseline.ckpt");
    }
  }
  TrainedModel m = variant == ModelVariant::kBaselineFinetune
                       ? std::move(*base)
                       : train_with_adapter(data, base ? &base->targets : nullptr, variant, cfg.train);
  save_checkpoint(m, out / "model.ckpt");
  save_training_log(m.log, out / "train_log.csv");
  const auto& last = m.log.back();
  return std::string(variant_name(variant)) + " trained " + std::to_string(m.log.size()) +
         " epochs, last dev-seen " + detail::percent(last.dev_seen_accuracy) + ", dev-unseen " +
         detail::percent(last.dev_unseen_accuracy);
}

/// Writes metrics.csv (split, metric, mean, std) for a checkpoint.
inline std::string cmd_eval(const RunConfig& cfg, const fs::path& out) {
  TrainedModel m = detail::checkpoint_of(cfg);
  const Corpus corpus = detail::corpus_of(cfg);
  const DatasetSplit split = detail::split_of(cfg);
  const SplitEvaluation e = evaluate_split(m, CandidateIndex(corpus.kg, m.relations), split);
  MetricTable t;
  t.add(e);
  write_metric_csv(t, out / "metrics.csv");
  std::string s = std::string(variant_name(m.variant));
  if (e.seen) s += " test-seen micro " + detail::percent(e.seen->micro);
  if (e.unseen) s += " test-unseen micro " + detail::percent(e.unseen->micro);
  if (e.seen_rate) s += " seen-rate " + detail::percent(*e.seen_rate);
  return s;
}

/// Writes answers.tsv and kbqa.csv (metric, value): end-to-end accuracy,
/// gold-subject relation detection accuracy, share of answered questions.
inline std::string cmd_kbqa(const RunConfig& cfg, const fs::path& out) {
  TrainedModel m = detail::checkpoint_of(cfg);
  const Corpus corpus = detail::corpus_of(cfg);
  const auto samples = detail::kbqa_samples(cfg, detail::split_of(cfg));
  require(!samples.empty(), "kbqa: no questions in '" + cfg.kbqa_part + "'");
  const TripleIndex index(corpus.kg);
  KbqaSystem sys(m, index);
  const auto answers = sys.answer_all(samples);
  write_answers_tsv(answers, out / "answers.tsv");
  const double acc = kbqa_accuracy(answers, samples);
  const double rd = micro_accuracy(predict_samples(m, CandidateIndex(corpus.kg, m.relations), samples));
  std::size_t answered = 0;
  for (const auto& a : answers) answered += a.fact.has_value();
  auto csv = open_out(out / "kbqa.csv");
  csv << "metric,value\n"
      << "kbqa_accuracy," << format_real(acc) << '\n'
      << "relation_detection_micro," << format_real(rd) << '\n'
      << "answered," << format_real(static_cast<double>(answered) / static_cast<double>(samples.size())) << '\n';
  close_checked(csv, out / "kbqa.csv");
  return "kbqa accuracy " + detail::percent(acc) + " (gold-subject relation detection " + detail::percent(rd) + ")";
}

/// Writes ablation.csv (model, count, train_samples, unseen_macro).
inline std::string cmd_ablate(const RunConfig& cfg, const fs::path& out) {
  const Corpus corpus = detail::corpus_of(cfg);
  const DatasetSplit split = detail::split_of(cfg);
  auto counts = cfg.count_list();
  if (counts.empty()) {
    const std::size_t n = relations_of(split.train).size();
    for (std::size_t q = 1; q <= 4; ++q) counts.push_back(std::max<std::size_t>(2, n * q / 4));
    counts.erase(std::unique(counts.begin(), counts.end()), counts.end());
  }
  const auto rows = relation_count_ablation(corpus, split, counts, cfg.budget, cfg.train, cfg.seed());
  write_ablation_csv(rows, out / "ablation.csv");
  return "ablation over " + std::to_string(counts.size()) + " relation counts";
}

/// Writes pca.csv (relation, seen, x, y) and pca_variance.csv.
inline std::string cmd_pca(const RunConfig& cfg, const fs::path& out) {
  TrainedModel m = detail::checkpoint_of(cfg);
  PcaResult details;
  const auto points = relation_pca(m, &details);
  write_pca_csv(points, out / "pca.csv");
  auto csv = open_out(out / "pca_variance.csv");
  csv << "component,eigenvalue,explained\n";
  for (std::size_t k = 0; k < details.eigenvalues.size(); ++k)
    csv << k + 1 << ',' << format_real(details.eigenvalues[k]) << ',' << format_real(details.explained[k]) << '\n';
  close_checked(csv, out / "pca_variance.csv");
  return "pca of " + std::to_string(points.size()) + " relations, explained " + detail::percent(details.explained[0]) +
         "% + " + detail::percent(details.explained[1]) + "%";
}

/// Writes crossval.csv (variant, split, metric, mean, std, formatted) and
/// summary.txt, one line per variant in percent as mean±std.
inline std::string cmd_crossval(const RunConfig& cfg, const fs::path& out) {
  const Corpus corpus = detail::corpus_of(cfg);
  PipelineConfig pc;
  pc.train = cfg.train;
  pc.resplit = cfg.resplit_options();
  pc.variants = cfg.variant_list();
  const auto r = cross_validate(corpus, cfg.folds, pc, cfg.seed());
  write_crossval_csv(r, out / "crossval.csv");
  auto txt = open_out(out / "summary.txt");
  txt << "variant\tseen-micro\tseen-macro\tunseen-micro\tunseen-macro\tall-micro\tall-macro\tseen-rate\n";
  for (const auto& [v, t] : r.tables) {
    txt << variant_name(v);
    const std::pair<const char*, const char*> cols[] = {
        {"test-seen", "micro"}, {"test-seen", "macro"}, {"test-unseen", "micro"}, {"test-unseen", "macro"},
        {"all", "micro"},       {"all", "macro"},       {"test-unseen", "seen-rate"}};
    for (const auto& [split, metric] : cols) txt << '\t' << format_percent(t.summary(split, metric));
    txt << '\n';
  }
  close_checked(txt, out / "summary.txt");
  return std::to_string(cfg.folds) + "-fold cross-validation of " + std::to_string(pc.variants.size()) + " variants";
}

}  // namespace readapt
