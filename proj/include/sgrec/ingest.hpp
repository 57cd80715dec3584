// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace sgrec {

/// One record of a raw interaction log.
struct RawInteraction {
  std::string user_id;
  std::string item_id;
  double value = 0.0;
  std::optional<std::int64_t> timestamp;
};

struct LoadResult {
  std::vector<RawInteraction> interactions;
  std::size_t malformed_lines = 0;
};

/// Indexed and split interaction data. Users and items carry dense indices
/// assigned in first-appearance order of the filtered stream, so every
/// downstream matrix is reproducible from (input, config, seed).
struct InteractionDataset {
  std::vector<std::string> user_ids;  // dense index -> id
  std::vector<std::string> item_ids;
  std::unordered_map<std::string, int> user_index;
  std::unordered_map<std::string, int> item_index;
  std::vector<std::pair<int, int>> train;
  std::vector<std::pair<int, int>> validation;
  std::vector<std::pair<int, int>> test;

  int num_users() const { return static_cast<int>(user_ids.size()); }
  int num_items() const { return static_cast<int>(item_ids.size()); }
  std::size_t num_interactions() const {
    return train.size() + validation.size() + test.size();
  }
};

/// Parses a delimited interaction log: user, item, value and an optional
/// timestamp. Malformed lines are counted, not fatal; a file where every
/// non-empty line is malformed is a FormatError, an unreadable file an
/// IoError. `delimiter` is "::", "," or "tab".
LoadResult load_interactions(const std::string& path, const std::string& delimiter);

/// Keeps interactions with value >= threshold, collapses duplicates to the
/// first occurrence, then iteratively removes users and items with fewer than
/// `min_interactions` interactions until a fixed point. Result preserves
/// first-appearance order. Throws EmptyDatasetError if nothing survives.
std::vector<std::pair<std::string, std::string>> binarize_and_filter(
    const std::vector<RawInteraction>& raws, double threshold, int min_interactions);

/// Interaction-level random split, deterministic for a fixed seed. The
/// validation set is carved out of the training portion: of round(train_frac*n)
/// training interactions, round(val_frac*that) become validation.
InteractionDataset split(const std::vector<std::pair<std::string, std::string>>& interactions,
                         double train_frac, double val_frac, std::uint64_t seed);

/// Split manifest: `user_index<TAB>item_index<TAB>{train|val|test}` per line,
/// preceded by the two index maps, so a split can be frozen and reloaded
/// bit-exactly. Layout on disk under `dir`: users.tsv, items.tsv, manifest.tsv.
void write_dataset(const InteractionDataset& ds, const std::string& dir);
InteractionDataset read_dataset(const std::string& dir);

}  // namespace sgrec
