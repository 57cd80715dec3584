// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#include "sgrec/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sgrec/errors.hpp"
#include "sgrec/parallel.hpp"

namespace sgrec {

namespace {

// Rough bytes per stored entry of a SparseCounts (col + val).
constexpr std::int64_t kBytesPerEntry = 12;

std::int64_t budget_entries(int budget_mb) {
  return static_cast<std::int64_t>(budget_mb) * 1024 * 1024 / kBytesPerEntry;
}

// Gustavson row-by-row product of counts (m x n) with a binary matrix
// (n x p). Throws ResourceError once the output exceeds max_entries.
SparseCounts multiply(const SparseCounts& a, const SparseBinary& b, std::int64_t max_entries,
                      int budget_mb) {
  if (a.cols != b.rows) throw ShapeError("sparse product: inner dimensions differ");
  SparseCounts out;
  out.rows = a.rows;
  out.cols = b.cols;
  out.row_ptr.assign(static_cast<std::size_t>(a.rows) + 1, 0);

  std::vector<std::int64_t> acc(static_cast<std::size_t>(b.cols), 0);
  std::vector<std::int32_t> touched;
  for (int i = 0; i < a.rows; ++i) {
    touched.clear();
    for (std::int64_t e = a.row_ptr[i]; e < a.row_ptr[i + 1]; ++e) {
      const std::int32_t j = a.col[e];
      const std::int64_t c = a.val[e];
      for (const std::int32_t* l = b.row_begin(j); l != b.row_end(j); ++l) {
        if (acc[*l] == 0) touched.push_back(*l);
        acc[*l] += c;
      }
    }
    std::sort(touched.begin(), touched.end());
    if (out.nnz() + static_cast<std::int64_t>(touched.size()) > max_entries) {
      throw ResourceError(
          "walk-count matrix exceeds proximity_budget_mb=" + std::to_string(budget_mb) +
          " (raise the budget or lower k_ord/max_second_order)");
    }
    for (const std::int32_t l : touched) {
      out.col.push_back(l);
      out.val.push_back(acc[l]);
      acc[l] = 0;
    }
    out.row_ptr[i + 1] = out.nnz();
  }
  return out;
}

SparseCounts as_counts(const SparseBinary& m) {
  SparseCounts out;
  out.rows = m.rows;
  out.cols = m.cols;
  out.row_ptr = m.row_ptr;
  out.col = m.col;
  out.val.assign(m.col.size(), 1);
  return out;
}

}  // namespace

bool SparseBinary::has(int r, int c) const {
  return std::binary_search(row_begin(r), row_end(r), static_cast<std::int32_t>(c));
}

SparseBinary incidence_from_pairs(const std::vector<std::pair<int, int>>& pairs, int rows,
                                  int cols) {
  SparseBinary m;
  m.rows = rows;
  m.cols = cols;
  m.row_ptr.assign(static_cast<std::size_t>(rows) + 1, 0);
  for (const auto& [r, c] : pairs) {
    if (r < 0 || r >= rows || c < 0 || c >= cols) {
      throw ShapeError("interaction index out of range for incidence matrix");
    }
    ++m.row_ptr[r + 1];
  }
  std::partial_sum(m.row_ptr.begin(), m.row_ptr.end(), m.row_ptr.begin());
  m.col.resize(pairs.size());
  std::vector<std::int64_t> cursor(m.row_ptr.begin(), m.row_ptr.end() - 1);
  for (const auto& [r, c] : pairs) m.col[cursor[r]++] = c;
  for (int r = 0; r < rows; ++r) {
    std::sort(m.col.begin() + m.row_ptr[r], m.col.begin() + m.row_ptr[r + 1]);
    // Duplicate pairs would break the implicit-1 representation.
    const auto begin = m.col.begin() + m.row_ptr[r];
    const auto end = m.col.begin() + m.row_ptr[r + 1];
    if (std::adjacent_find(begin, end) != end) {
      throw ShapeError("duplicate (user,item) pair in incidence input");
    }
  }
  return m;
}

SparseBinary transpose(const SparseBinary& m) {
  SparseBinary t;
  t.rows = m.cols;
  t.cols = m.rows;
  t.row_ptr.assign(static_cast<std::size_t>(m.cols) + 1, 0);
  for (const std::int32_t c : m.col) ++t.row_ptr[c + 1];
  std::partial_sum(t.row_ptr.begin(), t.row_ptr.end(), t.row_ptr.begin());
  t.col.resize(m.col.size());
  std::vector<std::int64_t> cursor(t.row_ptr.begin(), t.row_ptr.end() - 1);
  for (int r = 0; r < m.rows; ++r) {
    for (const std::int32_t* c = m.row_begin(r); c != m.row_end(r); ++c) {
      t.col[cursor[*c]++] = r;
    }
  }
  return t;
}

SparseCounts proximity(const SparseBinary& incidence, int k, int budget_mb) {
  if (k < 1) throw ConfigError("proximity order k must be >= 1");
  SparseCounts x = as_counts(incidence);
  if (k == 1) return x;
  const SparseBinary t = transpose(incidence);
  const std::int64_t max_entries = budget_entries(budget_mb);
  for (int step = 2; step <= k; ++step) {
    x = multiply(x, t, max_entries, budget_mb);          // users x users walks
    x = multiply(x, incidence, max_entries, budget_mb);  // back to users x items
  }
  return x;
}

std::vector<SparseCounts> proximity_stack(const SparseBinary& incidence, int k_ord,
                                          int budget_mb) {
  if (k_ord < 1) throw ConfigError("k_ord must be >= 1");
  std::vector<SparseCounts> stack;
  stack.reserve(static_cast<std::size_t>(k_ord));
  stack.push_back(as_counts(incidence));
  if (k_ord == 1) return stack;
  const SparseBinary t = transpose(incidence);
  const std::int64_t max_entries = budget_entries(budget_mb);
  for (int k = 2; k <= k_ord; ++k) {
    SparseCounts x = multiply(stack.back(), t, max_entries, budget_mb);
    stack.push_back(multiply(x, incidence, max_entries, budget_mb));
  }
  return stack;
}

bool UserSubgraph::is_one(int order, std::int32_t item) const {
  const auto& row = ones[order];
  return std::binary_search(row.begin(), row.end(), item);
}

std::size_t UserSubgraph::total_ones() const {
  std::size_t n = 0;
  for (const auto& row : ones) n += row.size();
  return n;
}

UserSubgraph build_subgraph(const std::vector<SparseCounts>& orders, int user,
                            const std::vector<double>& thresholds, const std::string& normalize,
                            int max_second_order) {
  if (orders.empty()) throw ConfigError("build_subgraph: no proximity orders");
  if (thresholds.size() != orders.size()) {
    throw ConfigError("build_subgraph: one threshold per proximity order required");
  }
  if (thresholds[0] != 1.0) {
    throw ConfigError("build_subgraph: the first-order threshold is fixed at 1");
  }
  for (const double c : thresholds) {
    if (!(c > 0.0)) throw ConfigError("build_subgraph: thresholds must be > 0");
  }

  UserSubgraph sg;
  sg.user = user;
  sg.num_items = orders[0].cols;
  sg.ones.resize(orders.size());
  for (std::size_t k = 0; k < orders.size(); ++k) {
    const SparseCounts& mat = orders[k];
    const std::int64_t begin = mat.row_ptr[user], end = mat.row_ptr[user + 1];
    double denom = 1.0;
    if (k >= 1 && normalize == "row") {
      std::int64_t total = 0;
      for (std::int64_t e = begin; e < end; ++e) total += mat.val[e];
      if (total > 0) denom = static_cast<double>(total);
    }
    std::vector<std::pair<std::int64_t, std::int32_t>> kept;  // (count, item)
    for (std::int64_t e = begin; e < end; ++e) {
      const double value = static_cast<double>(mat.val[e]) / denom;
      if (value >= thresholds[k]) kept.emplace_back(mat.val[e], mat.col[e]);
    }
    if (k >= 1 && max_second_order > 0 &&
        kept.size() > static_cast<std::size_t>(max_second_order)) {
      std::partial_sort(kept.begin(), kept.begin() + max_second_order, kept.end(),
                        [](const auto& a, const auto& b) {
                          if (a.first != b.first) return a.first > b.first;
                          return a.second < b.second;
                        });
      kept.resize(static_cast<std::size_t>(max_second_order));
    }
    auto& row = sg.ones[k];
    row.reserve(kept.size());
    for (const auto& [count, item] : kept) row.push_back(item);
    std::sort(row.begin(), row.end());
  }
  return sg;
}

std::vector<UserSubgraph> build_all_subgraphs(const std::vector<SparseCounts>& orders,
                                              const std::vector<double>& thresholds,
                                              const std::string& normalize, int max_second_order,
                                              int threads) {
  const int users = orders.empty() ? 0 : orders[0].rows;
  std::vector<UserSubgraph> out(static_cast<std::size_t>(users));
  parallel_for(static_cast<std::size_t>(users), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t u = begin; u < end; ++u) {
      out[u] = build_subgraph(orders, static_cast<int>(u), thresholds, normalize,
                              max_second_order);
    }
  });
  return out;
}

PathLengths shortest_paths(const SparseBinary& incidence, int threads) {
  const SparseBinary item_users = transpose(incidence);
  PathLengths q;
  q.users = incidence.rows;
  q.items = incidence.cols;
  q.dist.assign(static_cast<std::size_t>(q.users),
                std::vector<std::int32_t>(static_cast<std::size_t>(q.items),
                                          PathLengths::kUnreachable));

  parallel_for(static_cast<std::size_t>(q.users), threads, [&](std::size_t begin,
                                                               std::size_t end) {
    // BFS over the undirected bipartite graph; only item distances are kept.
    std::vector<std::int32_t> user_dist(static_cast<std::size_t>(q.users));
    std::vector<std::int32_t> frontier_users, next_users;
    for (std::size_t src = begin; src < end; ++src) {
      auto& item_dist = q.dist[src];
      std::fill(user_dist.begin(), user_dist.end(), PathLengths::kUnreachable);
      frontier_users.assign(1, static_cast<std::int32_t>(src));
      user_dist[src] = 0;
      std::int32_t depth = 0;
      while (!frontier_users.empty()) {
        next_users.clear();
        for (const std::int32_t u : frontier_users) {
          for (const std::int32_t* v = incidence.row_begin(u); v != incidence.row_end(u); ++v) {
            if (item_dist[*v] != PathLengths::kUnreachable) continue;
            item_dist[*v] = depth + 1;
            for (const std::int32_t* u2 = item_users.row_begin(*v);
                 u2 != item_users.row_end(*v); ++u2) {
              if (user_dist[*u2] != PathLengths::kUnreachable) continue;
              user_dist[*u2] = depth + 2;
              next_users.push_back(*u2);
            }
          }
        }
        frontier_users.swap(next_users);
        depth += 2;
      }
    }
  });
  return q;
}

double jaccard_similarity(const SparseBinary& item_users, int a, int b) {
  const std::int32_t* ia = item_users.row_begin(a);
  const std::int32_t* ea = item_users.row_end(a);
  const std::int32_t* ib = item_users.row_begin(b);
  const std::int32_t* eb = item_users.row_end(b);
  std::int64_t inter = 0;
  while (ia != ea && ib != eb) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++inter;
      ++ia;
      ++ib;
    }
  }
  const std::int64_t uni = item_users.degree(a) + item_users.degree(b) - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

KnnIndex knn_index(const SparseBinary& incidence, int knn_size, int threads) {
  if (knn_size < 1) throw ConfigError("knn_size must be >= 1");
  const SparseBinary item_users = transpose(incidence);
  const int items = incidence.cols;
  const int target = std::min(knn_size, items - 1);

  KnnIndex idx;
  idx.knn_size = knn_size;
  idx.neighbors.resize(static_cast<std::size_t>(items));
  idx.similarities.resize(static_cast<std::size_t>(items));

  parallel_for(static_cast<std::size_t>(items), threads, [&](std::size_t begin, std::size_t end) {
    std::vector<std::int64_t> inter(static_cast<std::size_t>(items), 0);
    std::vector<std::int32_t> touched;
    std::vector<char> chosen(static_cast<std::size_t>(items), 0);
    for (std::size_t v = begin; v < end; ++v) {
      touched.clear();
      for (const std::int32_t* u = item_users.row_begin(static_cast<int>(v));
           u != item_users.row_end(static_cast<int>(v)); ++u) {
        for (const std::int32_t* w = incidence.row_begin(*u); w != incidence.row_end(*u); ++w) {
          if (*w == static_cast<std::int32_t>(v)) continue;
          if (inter[*w] == 0) touched.push_back(*w);
          ++inter[*w];
        }
      }
      std::vector<std::pair<double, std::int32_t>> cand;  // (-similarity, item)
      cand.reserve(touched.size());
      const std::int64_t deg_v = item_users.degree(static_cast<int>(v));
      for (const std::int32_t w : touched) {
        const std::int64_t uni = deg_v + item_users.degree(w) - inter[w];
        cand.emplace_back(-static_cast<double>(inter[w]) / static_cast<double>(uni), w);
        inter[w] = 0;
      }
      std::sort(cand.begin(), cand.end());
      auto& nbrs = idx.neighbors[v];
      auto& sims = idx.similarities[v];
      nbrs.reserve(static_cast<std::size_t>(target));
      sims.reserve(static_cast<std::size_t>(target));
      for (const auto& [neg_sim, w] : cand) {
        if (static_cast<int>(nbrs.size()) == target) break;
        nbrs.push_back(w);
        sims.push_back(-neg_sim);
        chosen[w] = 1;
      }
      // Pad with zero-similarity items in index order.
      for (std::int32_t w = 0; static_cast<int>(nbrs.size()) < target; ++w) {
        if (w == static_cast<std::int32_t>(v) || chosen[w]) continue;
        nbrs.push_back(w);
        sims.push_back(0.0);
      }
      for (const std::int32_t w : nbrs) chosen[w] = 0;
    }
  });
  return idx;
}

UserStrata build_strata(const UserSubgraph& subgraph, const PathLengths& q,
                        const std::vector<double>& boundaries) {
  if (boundaries.empty()) throw ConfigError("strata boundaries must be non-empty");
  for (std::size_t i = 1; i < boundaries.size(); ++i) {
    if (!(boundaries[i] > boundaries[i - 1])) {
      throw ConfigError("strata boundaries must be strictly increasing");
    }
  }
  if (!std::isinf(boundaries.back())) {
    throw ConfigError("the last strata boundary must be infinite");
  }

  const int T = static_cast<int>(boundaries.size());
  UserStrata strata;
  strata.by_order.assign(static_cast<std::size_t>(subgraph.orders()),
                         std::vector<std::vector<std::int32_t>>(static_cast<std::size_t>(T)));
  const auto& dist = q.dist[subgraph.user];
  for (int k = 0; k < subgraph.orders(); ++k) {
    const auto& row = subgraph.ones[k];
    std::size_t next = 0;
    for (std::int32_t v = 0; v < subgraph.num_items; ++v) {
      if (next < row.size() && row[next] == v) {
        ++next;  // a one, not stratified
        continue;
      }
      const double d = dist[v] == PathLengths::kUnreachable
                           ? std::numeric_limits<double>::infinity()
                           : static_cast<double>(dist[v]);
      int t = 0;
      while (d > boundaries[t]) ++t;  // last boundary is +inf, always terminates
      strata.by_order[k][t].push_back(v);
    }
  }
  return strata;
}

StrataIndex build_all_strata(const std::vector<UserSubgraph>& subgraphs, const PathLengths& q,
                             const std::vector<double>& boundaries, int threads) {
  StrataIndex idx;
  idx.boundaries = boundaries;
  idx.users.resize(subgraphs.size());
  parallel_for(subgraphs.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t u = begin; u < end; ++u) {
      idx.users[u] = build_strata(subgraphs[u], q, boundaries);
    }
  });
  return idx;
}

}  // namespace sgrec
