// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#pragma once

#include <string>
#include <vector>

#include "sgrec/config.hpp"
#include "sgrec/graph.hpp"
#include "sgrec/ingest.hpp"

namespace sgrec {

/// Everything the trainer and evaluator need from the train split, built once
/// and persisted. On disk (one directory):
///   incidence.coo.tsv        E, coordinate-list text with a dims header
///   proximity.k<k>.coo.tsv   walk counts for each order k >= 2
///   subgraphs.tsv            header `users orders items`, rows `user order item`
///   shortest_paths.coo.tsv   finite Q entries only
///   knn.json                 neighbor lists and similarities
///   strata.json              per (user, order, stratum) item lists
struct GraphArtifacts {
  SparseBinary incidence;
  std::vector<SparseCounts> proximities;  // index 0 is order 1 (= E)
  std::vector<UserSubgraph> subgraphs;
  PathLengths paths;
  KnnIndex knn;
  StrataIndex strata;
};

/// Builds all artifacts from the train split of `ds` under `cfg`.
GraphArtifacts build_graph_artifacts(const InteractionDataset& ds, const RunConfig& cfg);

void save_graph_artifacts(const GraphArtifacts& g, const std::string& dir);
GraphArtifacts load_graph_artifacts(const std::string& dir);

/// Per-user item lists from a set of (user, item) pairs.
std::vector<std::vector<std::int32_t>> group_by_user(
    const std::vector<std::pair<int, int>>& pairs, int users);

// Coordinate-list text serialization: first line `rows<TAB>cols<TAB>nnz`,
// then `row<TAB>col<TAB>value` per entry.
void write_coo(const SparseCounts& m, const std::string& path);
SparseCounts read_coo(const std::string& path);

}  // namespace sgrec
