// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#include "sgrec/artifacts.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "sgrec/errors.hpp"

namespace sgrec {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::vector<std::int32_t>> group_by_user(
    const std::vector<std::pair<int, int>>& pairs, int users) {
  std::vector<std::vector<std::int32_t>> out(static_cast<std::size_t>(users));
  for (const auto& [u, v] : pairs) out[u].push_back(v);
  for (auto& row : out) std::sort(row.begin(), row.end());
  return out;
}

GraphArtifacts build_graph_artifacts(const InteractionDataset& ds, const RunConfig& cfg) {
  if (ds.train.empty()) throw EmptyDatasetError("train split is empty; nothing to build on");
  GraphArtifacts g;
  g.incidence = incidence_from_pairs(ds.train, ds.num_users(), ds.num_items());
  g.proximities = proximity_stack(g.incidence, cfg.k_ord, cfg.proximity_budget_mb);
  g.subgraphs = build_all_subgraphs(g.proximities, cfg.proximity_thresholds(),
                                    cfg.proximity_normalize, cfg.max_second_order, cfg.threads);
  g.paths = shortest_paths(g.incidence, cfg.threads);
  g.knn = knn_index(g.incidence, cfg.knn_size, cfg.threads);
  g.strata = build_all_strata(g.subgraphs, g.paths, cfg.strata_boundaries, cfg.threads);
  return g;
}

void write_coo(const SparseCounts& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << m.rows << '\t' << m.cols << '\t' << m.nnz() << '\n';
  for (int r = 0; r < m.rows; ++r) {
    for (std::int64_t e = m.row_ptr[r]; e < m.row_ptr[r + 1]; ++e) {
      out << r << '\t' << m.col[e] << '\t' << m.val[e] << '\n';
    }
  }
}

SparseCounts read_coo(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  SparseCounts m;
  std::int64_t nnz = 0;
  if (!(in >> m.rows >> m.cols >> nnz)) throw FormatError(path + ": bad header");
  std::vector<std::pair<int, std::pair<std::int32_t, std::int64_t>>> entries;
  entries.reserve(static_cast<std::size_t>(nnz));
  for (std::int64_t i = 0; i < nnz; ++i) {
    int r = 0;
    std::int32_t c = 0;
    std::int64_t v = 0;
    if (!(in >> r >> c >> v)) throw FormatError(path + ": truncated entry list");
    if (r < 0 || r >= m.rows || c < 0 || c >= m.cols) {
      throw FormatError(path + ": entry out of bounds");
    }
    entries.push_back({r, {c, v}});
  }
  std::sort(entries.begin(), entries.end());
  m.row_ptr.assign(static_cast<std::size_t>(m.rows) + 1, 0);
  for (const auto& e : entries) ++m.row_ptr[e.first + 1];
  for (int r = 0; r < m.rows; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
  m.col.reserve(entries.size());
  m.val.reserve(entries.size());
  for (const auto& e : entries) {
    m.col.push_back(e.second.first);
    m.val.push_back(e.second.second);
  }
  return m;
}

namespace {

SparseBinary binary_from_counts(const SparseCounts& m) {
  SparseBinary b;
  b.rows = m.rows;
  b.cols = m.cols;
  b.row_ptr = m.row_ptr;
  b.col = m.col;
  return b;
}

void write_subgraphs(const std::vector<UserSubgraph>& subgraphs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  const int users = static_cast<int>(subgraphs.size());
  const int orders = users > 0 ? subgraphs[0].orders() : 0;
  const int items = users > 0 ? subgraphs[0].num_items : 0;
  out << users << '\t' << orders << '\t' << items << '\n';
  for (const auto& sg : subgraphs) {
    for (int k = 0; k < sg.orders(); ++k) {
      for (const auto v : sg.ones[k]) {
        out << sg.user << '\t' << (k + 1) << '\t' << v << '\n';
      }
    }
  }
}

std::vector<UserSubgraph> read_subgraphs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  int users = 0, orders = 0, items = 0;
  if (!(in >> users >> orders >> items)) throw FormatError(path + ": bad header");
  std::vector<UserSubgraph> out(static_cast<std::size_t>(users));
  for (int u = 0; u < users; ++u) {
    out[u].user = u;
    out[u].num_items = items;
    out[u].ones.assign(static_cast<std::size_t>(orders), {});
  }
  int u = 0, k = 0;
  std::int32_t v = 0;
  while (in >> u >> k >> v) {
    if (u < 0 || u >= users || k < 1 || k > orders || v < 0 || v >= items) {
      throw FormatError(path + ": entry out of bounds");
    }
    out[u].ones[k - 1].push_back(v);
  }
  for (auto& sg : out) {
    for (auto& row : sg.ones) std::sort(row.begin(), row.end());
  }
  return out;
}

void write_paths(const PathLengths& q, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  std::int64_t finite = 0;
  for (const auto& row : q.dist) {
    for (const auto d : row) finite += d != PathLengths::kUnreachable;
  }
  out << q.users << '\t' << q.items << '\t' << finite << '\n';
  for (int u = 0; u < q.users; ++u) {
    for (int v = 0; v < q.items; ++v) {
      if (q.dist[u][v] != PathLengths::kUnreachable) {
        out << u << '\t' << v << '\t' << q.dist[u][v] << '\n';
      }
    }
  }
}

PathLengths read_paths(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  PathLengths q;
  std::int64_t finite = 0;
  if (!(in >> q.users >> q.items >> finite)) throw FormatError(path + ": bad header");
  q.dist.assign(static_cast<std::size_t>(q.users),
                std::vector<std::int32_t>(static_cast<std::size_t>(q.items),
                                          PathLengths::kUnreachable));
  for (std::int64_t i = 0; i < finite; ++i) {
    int u = 0, v = 0;
    std::int32_t d = 0;
    if (!(in >> u >> v >> d)) throw FormatError(path + ": truncated entry list");
    if (u < 0 || u >= q.users || v < 0 || v >= q.items) {
      throw FormatError(path + ": entry out of bounds");
    }
    q.dist[u][v] = d;
  }
  return q;
}

void write_knn(const KnnIndex& knn, const std::string& path) {
  json doc;
  doc["knn_size"] = knn.knn_size;
  doc["items"] = knn.num_items();
  doc["neighbors"] = knn.neighbors;
  doc["similarities"] = knn.similarities;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << doc.dump() << '\n';
}

KnnIndex read_knn(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json doc;
  try {
    in >> doc;
    KnnIndex knn;
    knn.knn_size = doc.at("knn_size").get<int>();
    knn.neighbors = doc.at("neighbors").get<std::vector<std::vector<std::int32_t>>>();
    knn.similarities = doc.at("similarities").get<std::vector<std::vector<double>>>();
    if (static_cast<int>(knn.neighbors.size()) != doc.at("items").get<int>()) {
      throw FormatError(path + ": neighbor table does not match the item count");
    }
    return knn;
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_strata(const StrataIndex& strata, const std::string& path) {
  json doc;
  // The final boundary is +infinity by construction and implicit in the file.
  json bounds = json::array();
  for (std::size_t i = 0; i + 1 < strata.boundaries.size(); ++i) bounds.push_back(strata.boundaries[i]);
  doc["finite_boundaries"] = bounds;
  json users = json::array();
  for (const auto& u : strata.users) users.push_back(u.by_order);
  doc["strata"] = std::move(users);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << doc.dump() << '\n';
}

StrataIndex read_strata(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json doc;
  try {
    in >> doc;
    StrataIndex strata;
    for (const auto& b : doc.at("finite_boundaries")) strata.boundaries.push_back(b.get<double>());
    strata.boundaries.push_back(std::numeric_limits<double>::infinity());
    for (const auto& u : doc.at("strata")) {
      UserStrata us;
      us.by_order = u.get<std::vector<std::vector<std::vector<std::int32_t>>>>();
      strata.users.push_back(std::move(us));
    }
    return strata;
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace

void save_graph_artifacts(const GraphArtifacts& g, const std::string& dir) {
  fs::create_directories(dir);
  write_coo(g.proximities[0], (fs::path(dir) / "incidence.coo.tsv").string());
  for (std::size_t k = 1; k < g.proximities.size(); ++k) {
    write_coo(g.proximities[k],
              (fs::path(dir) / ("proximity.k" + std::to_string(k + 1) + ".coo.tsv")).string());
  }
  write_subgraphs(g.subgraphs, (fs::path(dir) / "subgraphs.tsv").string());
  write_paths(g.paths, (fs::path(dir) / "shortest_paths.coo.tsv").string());
  write_knn(g.knn, (fs::path(dir) / "knn.json").string());
  write_strata(g.strata, (fs::path(dir) / "strata.json").string());
}

GraphArtifacts load_graph_artifacts(const std::string& dir) {
  GraphArtifacts g;
  g.proximities.push_back(read_coo((fs::path(dir) / "incidence.coo.tsv").string()));
  g.incidence = binary_from_counts(g.proximities[0]);
  for (int k = 2;; ++k) {
    const fs::path p = fs::path(dir) / ("proximity.k" + std::to_string(k) + ".coo.tsv");
    if (!fs::exists(p)) break;
    g.proximities.push_back(read_coo(p.string()));
  }
  g.subgraphs = read_subgraphs((fs::path(dir) / "subgraphs.tsv").string());
  g.paths = read_paths((fs::path(dir) / "shortest_paths.coo.tsv").string());
  g.knn = read_knn((fs::path(dir) / "knn.json").string());
  g.strata = read_strata((fs::path(dir) / "strata.json").string());
  return g;
}

}  // namespace sgrec
