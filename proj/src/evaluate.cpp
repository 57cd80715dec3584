// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#include "sgrec/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sgrec/errors.hpp"
#include "sgrec/parallel.hpp"

namespace sgrec {

std::optional<RankedList> recommend(const DecoderParams& dec, const EncoderParams& enc,
                                    const UserSubgraph& a_train, int k_cut, double alpha) {
  if (a_train.ones.empty() || a_train.ones[0].empty()) return std::nullopt;
  if (k_cut < 1) throw ConfigError("recommend: k_cut must be >= 1");

  const EncoderForward efwd = encode(enc, a_train, false, nullptr);
  const DecoderForward dfwd = decoder_forward(dec, efwd.post.mu);

  const int items = dec.items();
  const bool has_second = dec.orders() >= 2;
  Vec f1(static_cast<std::size_t>(items)), f2(static_cast<std::size_t>(items), 0.0);
  for (int v = 0; v < items; ++v) {
    f1[v] = sigmoid(dec.gamma(0, v) + dfwd.psi(0, v));
    if (has_second) f2[v] = sigmoid(dec.gamma(1, v) + dfwd.psi(1, v));
  }

  std::vector<std::pair<double, std::int32_t>> order;  // (-score, item)
  order.reserve(static_cast<std::size_t>(items));
  const auto& train_row = a_train.ones[0];
  std::size_t next = 0;
  for (std::int32_t v = 0; v < items; ++v) {
    if (next < train_row.size() && train_row[next] == v) {
      ++next;  // seen in training: never recommended
      continue;
    }
    order.emplace_back(-(alpha * f1[v] + (1.0 - alpha) * f2[v]), v);
  }
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(k_cut), order.size());
  std::partial_sort(order.begin(), order.begin() + k, order.end());

  RankedList out;
  out.user = a_train.user;
  out.items.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto v = order[i].second;
    out.items.push_back(v);
    out.scores.push_back(-order[i].first);
    out.scores_order1.push_back(f1[v]);
    out.scores_order2.push_back(f2[v]);
  }
  return out;
}

double ndcg_at_k(const std::vector<std::int32_t>& ranked,
                 const std::unordered_set<std::int32_t>& held_out, int k) {
  if (held_out.empty()) throw ConfigError("ndcg_at_k: empty held-out set is undefined");
  if (k > static_cast<int>(ranked.size())) {
    throw ConfigError("ndcg_at_k: K exceeds the ranked list length");
  }
  double dcg = 0.0;
  for (int i = 0; i < k; ++i) {
    if (held_out.count(ranked[i])) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  const int ideal_slots = std::min<int>(k, static_cast<int>(held_out.size()));
  double idcg = 0.0;
  for (int i = 0; i < ideal_slots; ++i) idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  return dcg / idcg;
}

double recall_at_k(const std::vector<std::int32_t>& ranked,
                   const std::unordered_set<std::int32_t>& held_out, int k) {
  if (held_out.empty()) throw ConfigError("recall_at_k: empty held-out set is undefined");
  if (k > static_cast<int>(ranked.size())) {
    throw ConfigError("recall_at_k: K exceeds the ranked list length");
  }
  int hits = 0;
  for (int i = 0; i < k; ++i) hits += held_out.count(ranked[i]) ? 1 : 0;
  return static_cast<double>(hits) /
         static_cast<double>(std::min<int>(k, static_cast<int>(held_out.size())));
}

double pild(const std::vector<std::int32_t>& ranked, const SparseBinary& item_users) {
  if (ranked.size() < 2) throw ConfigError("pild: list must hold at least two items");
  double acc = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    for (std::size_t j = i + 1; j < ranked.size(); ++j) {
      acc += 1.0 - jaccard_similarity(item_users, ranked[i], ranked[j]);
      ++pairs;
    }
  }
  return acc / static_cast<double>(pairs);
}

void MetricsReport::finalize() {
  mean_ndcg = mean_recall = mean_pild = 0.0;
  evaluated_users = static_cast<int>(rows.size());
  int pild_users = 0;
  for (const auto& r : rows) {
    mean_ndcg += r.ndcg;
    mean_recall += r.recall;
    if (!std::isnan(r.pild)) {
      mean_pild += r.pild;
      ++pild_users;
    }
  }
  if (!rows.empty()) {
    mean_ndcg /= rows.size();
    mean_recall /= rows.size();
  }
  mean_pild = pild_users > 0 ? mean_pild / pild_users : 0.0;
}

MetricsReport evaluate_ranking(const DecoderParams& dec, const EncoderParams& enc,
                               const std::vector<UserSubgraph>& subgraphs,
                               const std::vector<std::vector<std::int32_t>>& held_out_by_user,
                               const SparseBinary* item_users, int k_cut, double alpha,
                               int threads) {
  const std::size_t users = subgraphs.size();
  if (held_out_by_user.size() != users) {
    throw ShapeError("evaluate_ranking: held-out table does not match the user count");
  }

  MetricsReport report;
  report.k_cut = k_cut;
  report.alpha = alpha;
  std::vector<std::optional<UserMetrics>> slots(users);
  std::vector<char> no_train(users, 0), no_holdout(users, 0);

  parallel_for(users, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t u = begin; u < end; ++u) {
      if (held_out_by_user[u].empty()) {
        no_holdout[u] = 1;
        continue;
      }
      const auto list = recommend(dec, enc, subgraphs[u], k_cut, alpha);
      if (!list.has_value()) {
        no_train[u] = 1;
        continue;
      }
      const std::unordered_set<std::int32_t> held(held_out_by_user[u].begin(),
                                                  held_out_by_user[u].end());
      UserMetrics m;
      m.user = static_cast<int>(u);
      m.held_out = static_cast<int>(held.size());
      const int k = std::min<int>(k_cut, static_cast<int>(list->items.size()));
      m.ndcg = ndcg_at_k(list->items, held, k);
      m.recall = recall_at_k(list->items, held, k);
      m.pild = (item_users != nullptr && list->items.size() >= 2)
                   ? pild(list->items, *item_users)
                   : std::numeric_limits<double>::quiet_NaN();
      slots[u] = m;
    }
  });

  for (std::size_t u = 0; u < users; ++u) {
    if (slots[u].has_value()) report.rows.push_back(*slots[u]);
    report.skipped_no_train += no_train[u];
    report.skipped_no_holdout += no_holdout[u];
  }
  report.finalize();
  return report;
}

}  // namespace sgrec
