#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "readapt/data/io.hpp"
#include "readapt/errors.hpp"

namespace readapt {

struct PredictionRecord {
  std::size_t sample = 0;
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::vector<std::size_t> candidates;
  bool gold_seen = false;
  bool predicted_seen = false;

  bool correct() const { return gold == predicted; }
};

struct MetricReport {
  double micro = 0.0;
  double macro = 0.0;
  std::map<std::size_t, double> per_relation;
  std::size_t count = 0;
};

inline double micro_accuracy(const std::vector<PredictionRecord>& records) {
  require(!records.empty(), "micro_accuracy: no records");
  std::size_t hit = 0;
  for (const auto& r : records) hit += r.correct();
  return static_cast<double>(hit) / static_cast<double>(records.size());
}

/// Accuracy of each gold relation present in the records.
inline std::map<std::size_t, double> per_relation_accuracy(const std::vector<PredictionRecord>& records) {
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> tally;  // hits, total
  for (const auto& r : records) {
    auto& [hit, total] = tally[r.gold];
    hit += r.correct();
    ++total;
  }
  std::map<std::size_t, double> out;
  for (const auto& [rel, t] : tally) out[rel] = static_cast<double>(t.first) / static_cast<double>(t.second);
  return out;
}

inline double macro_accuracy(const std::vector<PredictionRecord>& records) {
  require(!records.empty(), "macro_accuracy: no records");
  const auto per = per_relation_accuracy(records);
  double s = 0.0;
  for (const auto& [rel, acc] : per) s += acc;
  return s / static_cast<double>(per.size());
}

inline MetricReport metric_report(const std::vector<PredictionRecord>& records) {
  MetricReport m;
  m.micro = micro_accuracy(records);
  m.macro = macro_accuracy(records);
  m.per_relation = per_relation_accuracy(records);
  m.count = records.size();
  return m;
}

/// Per gold relation, the share of its records predicted as a seen relation,
/// macro-averaged over gold relations. Every gold must be unseen.
inline double seen_rate(const std::vector<PredictionRecord>& records) {
  require(!records.empty(), "seen_rate: no records");
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> tally;
  for (const auto& r : records) {
    if (r.gold_seen)
      throw ContractError("seen_rate: record " + std::to_string(r.sample) + " has a seen gold relation");
    auto& [seen, total] = tally[r.gold];
    seen += r.predicted_seen;
    ++total;
  }
  double s = 0.0;
  for (const auto& [rel, t] : tally) s += static_cast<double>(t.first) / static_cast<double>(t.second);
  return s / static_cast<double>(tally.size());
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1); 0 for a single value
};

inline MeanStd mean_std(const std::vector<double>& xs) {
  require(!xs.empty(), "mean_std: no values");
  // Shifted by the first value, so equal inputs give that value and std 0 exactly.
  const double k = xs.front(), n = static_cast<double>(xs.size());
  double s = 0.0, ss = 0.0;
  for (double x : xs) {
    s += x - k;
    ss += (x - k) * (x - k);
  }
  MeanStd r;
  r.mean = k + s / n;
  if (xs.size() > 1) r.std = std::sqrt(std::max(0.0, (ss - s * s / n) / (n - 1.0)));
  return r;
}

/// "77.3±7.6": percentages with one decimal.
inline std::string format_percent(const MeanStd& m) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f\xC2\xB1%.1f", 100.0 * m.mean, 100.0 * m.std);
  return buf;
}

}  // namespace readapt
