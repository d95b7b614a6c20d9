#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include "readapt/autodiff/graph.hpp"
#include "readapt/autodiff/init.hpp"

namespace readapt {

/// Draws K negatives for `gold` from `pool`: without replacement when the
/// pool holds at least K ids, otherwise with replacement.
inline std::vector<std::size_t> sample_negatives(std::size_t gold, const std::vector<std::size_t>& pool,
                                                 std::size_t k, Rng& rng) {
  require(!pool.empty(), "sample_negatives: empty pool");
  require(std::find(pool.begin(), pool.end(), gold) == pool.end(),
          "sample_negatives: pool contains the gold relation");
  std::vector<std::size_t> out;
  out.reserve(k);
  if (pool.size() >= k) {
    std::sample(pool.begin(), pool.end(), std::back_inserter(out), static_cast<std::ptrdiff_t>(k), rng);
  } else {
    std::uniform_int_distribution<std::size_t> u(0, pool.size() - 1);
    for (std::size_t i = 0; i < k; ++i) out.push_back(pool[u(rng)]);
  }
  return out;
}

/// Sum over negatives of max(0, margin - s(q, r+) + s(q, r-)).
inline NodeId hinge_ranking_loss(Graph& g, NodeId q, NodeId positive, const std::vector<NodeId>& negatives,
                                 double margin) {
  require(margin > 0.0, "hinge_ranking_loss: margin must be positive");
  require(!negatives.empty(), "hinge_ranking_loss: no negatives");
  const NodeId pos = g.cosine(q, positive);
  std::vector<NodeId> terms;
  terms.reserve(negatives.size());
  for (NodeId n : negatives) terms.push_back(g.sub(g.cosine(q, n), pos));
  return g.sum(g.relu(g.add_scalar(g.concat_rows(terms), margin)));
}

/// Batched form over a score matrix (questions × relations): for each row i,
/// the sum over its negative columns of the hinge, averaged over rows.
inline NodeId hinge_ranking_loss(Graph& g, NodeId scores, const std::vector<std::size_t>& positive_col,
                                 const std::vector<std::vector<std::size_t>>& negative_cols, double margin) {
  require(margin > 0.0, "hinge_ranking_loss: margin must be positive");
  require(positive_col.size() == negative_cols.size() && !positive_col.empty(),
          "hinge_ranking_loss: one positive and a negative list per row required");
  std::vector<std::pair<std::size_t, std::size_t>> pos, neg;
  for (std::size_t i = 0; i < positive_col.size(); ++i) {
    require(!negative_cols[i].empty(), "hinge_ranking_loss: no negatives");
    for (std::size_t c : negative_cols[i]) {
      pos.emplace_back(i, positive_col[i]);
      neg.emplace_back(i, c);
    }
  }
  NodeId diff = g.sub(g.pick(scores, std::move(neg)), g.pick(scores, std::move(pos)));
  const double rows = static_cast<double>(positive_col.size());
  return g.scale(g.sum(g.relu(g.add_scalar(diff, margin))), 1.0 / rows);
}

}  // namespace readapt
