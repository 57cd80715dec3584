// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sgrec {

/// Sparse binary matrix in CSR form; stored entries are implicitly 1.
/// For the incidence matrix, rows are users, columns are items, and the
/// matrix is built from the train split only.
struct SparseBinary {
  int rows = 0, cols = 0;
  std::vector<std::int64_t> row_ptr;  // size rows+1
  std::vector<std::int32_t> col;      // sorted within each row

  std::int64_t nnz() const { return static_cast<std::int64_t>(col.size()); }
  std::int64_t degree(int r) const { return row_ptr[r + 1] - row_ptr[r]; }
  const std::int32_t* row_begin(int r) const { return col.data() + row_ptr[r]; }
  const std::int32_t* row_end(int r) const { return col.data() + row_ptr[r + 1]; }
  bool has(int r, int c) const;
};

/// Sparse non-negative integer matrix in CSR form; entry values are bipartite
/// walk counts.
struct SparseCounts {
  int rows = 0, cols = 0;
  std::vector<std::int64_t> row_ptr;
  std::vector<std::int32_t> col;
  std::vector<std::int64_t> val;

  std::int64_t nnz() const { return static_cast<std::int64_t>(col.size()); }
};

SparseBinary incidence_from_pairs(const std::vector<std::pair<int, int>>& pairs, int rows,
                                  int cols);
SparseBinary transpose(const SparseBinary& m);

/// Walk counts of order k: the alternating product E E' E ... with 2(k-1)+1
/// factors, so entry (u,v) counts the bipartite walks of that many edges from
/// user u to item v. k=1 returns E itself (as counts). `budget_mb` bounds the
/// memory of any intermediate or final product.
SparseCounts proximity(const SparseBinary& incidence, int k, int budget_mb);

/// All orders 1..k_ord, sharing intermediates.
std::vector<SparseCounts> proximity_stack(const SparseBinary& incidence, int k_ord,
                                          int budget_mb);

/// One user's observation: per proximity order, the sorted item indices whose
/// walk count clears that order's threshold.
struct UserSubgraph {
  int user = 0;
  int num_items = 0;
  std::vector<std::vector<std::int32_t>> ones;  // [order] -> sorted items

  int orders() const { return static_cast<int>(ones.size()); }
  bool is_one(int order, std::int32_t item) const;
  std::size_t total_ones() const;
};

/// Thresholds compare against raw walk counts (c_1 must be exactly 1, making
/// row 1 the user's train row). With normalize == "row", counts of orders
/// >= 2 are divided by their row sum before the comparison; order 1 always
/// compares raw. A positive `max_second_order` caps each order >= 2 row to the
/// top entries by walk count (item index breaks ties).
UserSubgraph build_subgraph(const std::vector<SparseCounts>& orders, int user,
                            const std::vector<double>& thresholds,
                            const std::string& normalize = "none", int max_second_order = 0);

std::vector<UserSubgraph> build_all_subgraphs(const std::vector<SparseCounts>& orders,
                                              const std::vector<double>& thresholds,
                                              const std::string& normalize, int max_second_order,
                                              int threads);

/// Shortest bipartite path lengths from every user to every item; finite
/// entries are odd. Unreachable items carry kUnreachable.
struct PathLengths {
  static constexpr std::int32_t kUnreachable = -1;
  int users = 0, items = 0;
  std::vector<std::vector<std::int32_t>> dist;  // [user][item]

  bool reachable(int u, int v) const { return dist[u][v] != kUnreachable; }
};

PathLengths shortest_paths(const SparseBinary& incidence, int threads = 1);

/// Jaccard similarity between the training user sets of two items.
/// `item_users` is the transposed incidence matrix (items x users).
double jaccard_similarity(const SparseBinary& item_users, int a, int b);

/// For every item, the knn_size most similar items by Jaccard over training
/// user sets (descending similarity, item index breaks ties; the item itself
/// is excluded). Lists always have min(knn_size, items-1) entries, padding
/// with zero-similarity items in index order.
struct KnnIndex {
  int knn_size = 0;
  std::vector<std::vector<std::int32_t>> neighbors;
  std::vector<std::vector<double>> similarities;

  int num_items() const { return static_cast<int>(neighbors.size()); }
};

KnnIndex knn_index(const SparseBinary& incidence, int knn_size, int threads = 1);

/// Partition of each subgraph row's zero entries by shortest-path distance.
/// Stratum t holds {v : A_kv = 0, boundaries[t-1] < Q_uv <= boundaries[t]}
/// with an implicit lower bound of 0 for the first stratum; the last boundary
/// is +infinity, so unreachable items land in the final stratum.
struct UserStrata {
  // [order][stratum] -> sorted item indices
  std::vector<std::vector<std::vector<std::int32_t>>> by_order;

  std::size_t count(int order, int stratum) const {
    return by_order[order][stratum].size();
  }
};

struct StrataIndex {
  std::vector<double> boundaries;  // last is +infinity
  std::vector<UserStrata> users;

  int num_strata() const { return static_cast<int>(boundaries.size()); }
};

UserStrata build_strata(const UserSubgraph& subgraph, const PathLengths& q,
                        const std::vector<double>& boundaries);

StrataIndex build_all_strata(const std::vector<UserSubgraph>& subgraphs, const PathLengths& q,
                             const std::vector<double>& boundaries, int threads);

}  // namespace sgrec
