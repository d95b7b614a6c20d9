#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "readapt/autodiff/init.hpp"
#include "readapt/data/types.hpp"

namespace readapt {

/// Target share of all samples for each of the five splits (sums to 1).
struct SplitTargets {
  double train = 0, dev_seen = 0, dev_unseen = 0, test_seen = 0, test_unseen = 0;

  double at(SplitPart p) const {
    switch (p) {
      case SplitPart::kTrain: return train;
      case SplitPart::kDevSeen: return dev_seen;
      case SplitPart::kDevUnseen: return dev_unseen;
      case SplitPart::kTestSeen: return test_seen;
      case SplitPart::kTestUnseen: return test_unseen;
    }
    return 0;
  }
  double unseen() const { return dev_unseen + test_unseen; }

  /// Shares of the reference balanced corpus: 75,819 / 5,383 / 5,758 /
  /// 10,766 / 10,717 samples.
  static SplitTargets reference() {
    const double n = 75819 + 5383 + 5758 + 10766 + 10717;
    return {75819 / n, 5383 / n, 5758 / n, 10766 / n, 10717 / n};
  }

  /// Seen share f divided 9:1:2 over Train/Dev-seen/Test-seen and the unseen
  /// share 1:2 over Dev-unseen/Test-unseen.
  static SplitTargets with_seen_fraction(double f) {
    require(f > 0.0 && f < 1.0, "split targets: seen fraction must lie in (0,1)");
    return {f * 0.75, f / 12.0, (1 - f) / 3.0, f / 6.0, 2 * (1 - f) / 3.0};
  }

  void validate() const {
    double s = 0;
    for (auto p : kSplitParts) {
      require(at(p) >= 0.0, "split targets: negative share");
      s += at(p);
    }
    require(std::abs(s - 1.0) < 1e-9, "split targets: shares must sum to 1");
    require(train > 0.0, "split targets: train share must be positive");
    require(unseen() > 0.0, "split targets: unseen share must be positive");
  }
};

struct ResplitOptions {
  SplitTargets targets = SplitTargets::reference();
  double tolerance = 0.02;  // max |share - target| per split
  std::size_t max_retries = 1000;
};

namespace detail {

inline double max_deviation(const DatasetSplit& s, const SplitTargets& t) {
  const double n = static_cast<double>(s.total());
  double worst = 0.0;
  for (auto p : kSplitParts)
    worst = std::max(worst, std::abs(static_cast<double>(s.part(p).size()) / n - t.at(p)));
  return worst;
}

}  // namespace detail

/// Re-splits samples so that unseen relations are balanced against seen ones.
///
/// Each attempt shuffles the relations and moves them into an unseen group
/// until the group holds the target unseen share of samples. Unseen-group
/// samples fill Dev-unseen/Test-unseen; the seen group gives one sample per
/// relation to Train and shuffles the rest over Train/Dev-seen/Test-seen.
/// Attempts repeat with fresh shuffles until every split share lies within
/// the tolerance of its target.
inline DatasetSplit balanced_resplit(const std::vector<QASample>& samples, std::uint64_t seed,
                                     const ResplitOptions& opt = {}) {
  opt.targets.validate();
  require(opt.tolerance >= 0.0, "balanced_resplit: tolerance must be non-negative");
  std::map<std::string, std::vector<std::size_t>> by_rel;
  for (std::size_t i = 0; i < samples.size(); ++i) by_rel[samples[i].relation].push_back(i);
  require(by_rel.size() >= 2, "balanced_resplit: need at least 2 distinct relations");
  std::vector<std::string> rels;
  for (const auto& [r, v] : by_rel) rels.push_back(r);

  const double n = static_cast<double>(samples.size());
  const auto& t = opt.targets;
  Rng rng(seed);
  DatasetSplit best;
  double best_dev = std::numeric_limits<double>::infinity();
  const std::size_t attempts = std::max<std::size_t>(opt.max_retries, 1);

  for (std::size_t attempt = 0; attempt < attempts; ++attempt) {
    std::shuffle(rels.begin(), rels.end(), rng);
    std::vector<std::string> unseen_rels, seen_rels;
    std::size_t unseen_count = 0;
    for (const auto& r : rels) {
      const bool room = unseen_rels.size() + 1 < rels.size() &&
                        static_cast<double>(unseen_count) < t.unseen() * n;
      if (room) {
        unseen_rels.push_back(r);
        unseen_count += by_rel[r].size();
      } else {
        seen_rels.push_back(r);
      }
    }

    DatasetSplit split;
    // Unseen group.
    std::vector<std::size_t> pool;
    for (const auto& r : unseen_rels) pool.insert(pool.end(), by_rel[r].begin(), by_rel[r].end());
    std::shuffle(pool.begin(), pool.end(), rng);
    const double dev_share = t.dev_unseen / t.unseen();
    const auto n_dev_unseen = static_cast<std::size_t>(std::llround(dev_share * pool.size()));
    for (std::size_t i = 0; i < pool.size(); ++i)
      (i < n_dev_unseen ? split.dev_unseen : split.test_unseen).push_back(samples[pool[i]]);

    // Seen group: one anchor sample per relation stays in Train.
    pool.clear();
    for (const auto& r : seen_rels) {
      auto idx = by_rel[r];
      std::uniform_int_distribution<std::size_t> pick(0, idx.size() - 1);
      const std::size_t a = pick(rng);
      split.train.push_back(samples[idx[a]]);
      idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(a));
      pool.insert(pool.end(), idx.begin(), idx.end());
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    auto n_dev_seen = static_cast<std::size_t>(std::llround(t.dev_seen * n));
    auto n_test_seen = static_cast<std::size_t>(std::llround(t.test_seen * n));
    n_dev_seen = std::min(n_dev_seen, pool.size());
    n_test_seen = std::min(n_test_seen, pool.size() - n_dev_seen);
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (i < n_dev_seen) split.dev_seen.push_back(samples[pool[i]]);
      else if (i < n_dev_seen + n_test_seen) split.test_seen.push_back(samples[pool[i]]);
      else split.train.push_back(samples[pool[i]]);
    }

    const double dev = detail::max_deviation(split, t);
    if (dev < best_dev) {
      best_dev = dev;
      best = std::move(split);
    }
    if (best_dev <= opt.tolerance) return best;
  }
  std::ostringstream os;
  os << "balanced_resplit: no split within tolerance " << opt.tolerance << " after " << attempts
     << " attempts; best attempt deviates by " << best_dev << " (sizes";
  for (auto p : kSplitParts) os << ' ' << split_name(p) << '=' << best.part(p).size();
  os << ')';
  throw InfeasibleError(os.str());
}

}  // namespace readapt
