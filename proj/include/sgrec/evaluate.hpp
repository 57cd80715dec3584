// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <optional>
#include <unordered_set>
#include <vector>

#include "sgrec/decoder.hpp"
#include "sgrec/encoder.hpp"
#include "sgrec/graph.hpp"

namespace sgrec {

/// Top-k recommendation for one user: items sorted by blended score
/// alpha*F_1 + (1-alpha)*F_2 (descending, item index breaks ties), train
/// first-order items excluded. Per-order scores are kept for the CLI output
/// and for exploration-weighted re-ranking.
struct RankedList {
  int user = 0;
  std::vector<std::int32_t> items;
  Vec scores;
  Vec scores_order1;
  Vec scores_order2;  // zero when the model has a single order
};

/// z is the deterministic encoder mean (no sampling, no dropout). Returns
/// nullopt for users with an empty train row; callers count those as skipped.
std::optional<RankedList> recommend(const DecoderParams& dec, const EncoderParams& enc,
                                    const UserSubgraph& a_train, int k_cut, double alpha);

/// Truncated NDCG with binary relevance, base-2 discounts, ideal DCG over
/// min(K, |held_out|) slots. held_out must be non-empty; K <= list size.
double ndcg_at_k(const std::vector<std::int32_t>& ranked,
                 const std::unordered_set<std::int32_t>& held_out, int k);

/// Hits in the top K over min(K, |held_out|).
double recall_at_k(const std::vector<std::int32_t>& ranked,
                   const std::unordered_set<std::int32_t>& held_out, int k);

/// Mean pairwise dissimilarity 1 - Jaccard over the list's unordered pairs;
/// `item_users` is the transposed train incidence. List length must be >= 2.
double pild(const std::vector<std::int32_t>& ranked, const SparseBinary& item_users);

struct UserMetrics {
  int user = 0;
  double ndcg = 0.0;
  double recall = 0.0;
  double pild = 0.0;  // NaN when undefined (list shorter than 2)
  int held_out = 0;
};

struct MetricsReport {
  int k_cut = 0;
  double alpha = 1.0;
  std::vector<UserMetrics> rows;
  double mean_ndcg = 0.0;
  double mean_recall = 0.0;
  double mean_pild = 0.0;
  int evaluated_users = 0;
  int skipped_no_train = 0;    // empty train row: no ranking possible
  int skipped_no_holdout = 0;  // nothing held out: metrics undefined

  /// Recomputes the means from the per-user rows; used as a consistency check.
  void finalize();
};

/// Ranks every user with held-out items and aggregates the three metrics.
/// Pass item_users = nullptr to skip PILD (validation-time use).
MetricsReport evaluate_ranking(const DecoderParams& dec, const EncoderParams& enc,
                               const std::vector<UserSubgraph>& subgraphs,
                               const std::vector<std::vector<std::int32_t>>& held_out_by_user,
                               const SparseBinary* item_users, int k_cut, double alpha,
                               int threads);

}  // namespace sgrec
