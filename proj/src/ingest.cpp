// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#include "sgrec/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "sgrec/errors.hpp"
#include "sgrec/rng.hpp"

namespace sgrec {

namespace {

std::vector<std::string> split_fields(const std::string& line, const std::string& delim) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(delim, pos);
    if (next == std::string::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + delim.size();
  }
}

bool parse_record(const std::string& line, const std::string& delim, RawInteraction& out) {
  const auto fields = split_fields(line, delim);
  if (fields.size() < 3) return false;
  if (fields[0].empty() || fields[1].empty()) return false;
  try {
    std::size_t pos = 0;
    out.value = std::stod(fields[2], &pos);
    if (pos != fields[2].size()) return false;
  } catch (const std::exception&) {
    return false;
  }
  out.user_id = fields[0];
  out.item_id = fields[1];
  out.timestamp.reset();
  if (fields.size() >= 4 && !fields[3].empty()) {
    try {
      std::size_t pos = 0;
      out.timestamp = std::stoll(fields[3], &pos);
      if (pos != fields[3].size()) return false;
    } catch (const std::exception&) {
      return false;
    }
  }
  return true;
}

struct PairHash {
  std::size_t operator()(const std::pair<int, int>& p) const {
    return std::hash<std::int64_t>()((static_cast<std::int64_t>(p.first) << 32) ^
                                     static_cast<std::uint32_t>(p.second));
  }
};

}  // namespace

LoadResult load_interactions(const std::string& path, const std::string& delimiter) {
  const std::string delim = delimiter == "tab" ? "\t" : delimiter;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open interaction log: " + path);
  LoadResult result;
  std::string line;
  std::size_t nonempty = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++nonempty;
    RawInteraction rec;
    if (parse_record(line, delim, rec)) {
      result.interactions.push_back(std::move(rec));
    } else {
      ++result.malformed_lines;
    }
  }
  if (in.bad()) throw IoError("I/O error while reading " + path);
  if (nonempty > 0 && result.interactions.empty()) {
    throw FormatError("no parseable records in " + path + " (" +
                      std::to_string(result.malformed_lines) +
                      " malformed lines; wrong delimiter?)");
  }
  return result;
}

std::vector<std::pair<std::string, std::string>> binarize_and_filter(
    const std::vector<RawInteraction>& raws, double threshold, int min_interactions) {
  // Dedup to the first occurrence, keeping stream order.
  std::vector<std::pair<std::string, std::string>> pairs;
  {
    std::unordered_set<std::string> seen;
    for (const auto& r : raws) {
      if (!(r.value >= threshold)) continue;
      std::string key = r.user_id + '\x1f' + r.item_id;
      if (seen.insert(std::move(key)).second) pairs.emplace_back(r.user_id, r.item_id);
    }
  }

  // Degree floor to a fixed point: removing an item can drop a user below the
  // floor and vice versa, so iterate until stable.
  if (min_interactions > 0) {
    bool changed = true;
    while (changed && !pairs.empty()) {
      std::unordered_map<std::string, int> user_deg, item_deg;
      for (const auto& [u, v] : pairs) {
        ++user_deg[u];
        ++item_deg[v];
      }
      std::vector<std::pair<std::string, std::string>> kept;
      kept.reserve(pairs.size());
      for (auto& p : pairs) {
        if (user_deg[p.first] >= min_interactions && item_deg[p.second] >= min_interactions) {
          kept.push_back(std::move(p));
        }
      }
      changed = kept.size() != pairs.size();
      pairs = std::move(kept);
    }
  }

  if (pairs.empty()) {
    throw EmptyDatasetError("no interactions survive binarization (threshold " +
                            std::to_string(threshold) + ") and degree floor " +
                            std::to_string(min_interactions));
  }
  return pairs;
}

InteractionDataset split(const std::vector<std::pair<std::string, std::string>>& interactions,
                         double train_frac, double val_frac, std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) throw ConfigError("train_frac must be in (0,1)");
  if (!(val_frac >= 0.0 && val_frac < 1.0)) throw ConfigError("val_frac must be in [0,1)");

  InteractionDataset ds;
  std::vector<std::pair<int, int>> indexed;
  indexed.reserve(interactions.size());
  for (const auto& [u, v] : interactions) {
    auto [uit, unew] = ds.user_index.try_emplace(u, ds.num_users());
    if (unew) ds.user_ids.push_back(u);
    auto [vit, vnew] = ds.item_index.try_emplace(v, ds.num_items());
    if (vnew) ds.item_ids.push_back(v);
    indexed.emplace_back(uit->second, vit->second);
  }

  std::vector<std::size_t> order(indexed.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng = Rng::derive(seed, rng_streams::kSplit);
  rng.shuffle(order);

  const std::size_t n = indexed.size();
  const std::size_t n_pool = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(n)));
  const std::size_t n_val =
      static_cast<std::size_t>(std::llround(val_frac * static_cast<double>(n_pool)));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = indexed[order[i]];
    if (i < n_val) {
      ds.validation.push_back(p);
    } else if (i < n_pool) {
      ds.train.push_back(p);
    } else {
      ds.test.push_back(p);
    }
  }
  return ds;
}

void write_dataset(const InteractionDataset& ds, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / "users.tsv");
    if (!out) throw IoError("cannot write users.tsv in " + dir);
    for (int i = 0; i < ds.num_users(); ++i) out << i << '\t' << ds.user_ids[i] << '\n';
  }
  {
    std::ofstream out(fs::path(dir) / "items.tsv");
    if (!out) throw IoError("cannot write items.tsv in " + dir);
    for (int i = 0; i < ds.num_items(); ++i) out << i << '\t' << ds.item_ids[i] << '\n';
  }
  std::ofstream out(fs::path(dir) / "manifest.tsv");
  if (!out) throw IoError("cannot write manifest.tsv in " + dir);
  for (const auto& [u, v] : ds.train) out << u << '\t' << v << "\ttrain\n";
  for (const auto& [u, v] : ds.validation) out << u << '\t' << v << "\tval\n";
  for (const auto& [u, v] : ds.test) out << u << '\t' << v << "\ttest\n";
}

InteractionDataset read_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  InteractionDataset ds;
  auto read_ids = [&](const char* name, std::vector<std::string>& ids,
                      std::unordered_map<std::string, int>& index) {
    std::ifstream in(fs::path(dir) / name);
    if (!in) throw IoError(std::string("cannot open ") + name + " in " + dir);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos) throw FormatError(std::string(name) + ": expected index<TAB>id");
      const int idx = std::stoi(line.substr(0, tab));
      if (idx != static_cast<int>(ids.size())) {
        throw FormatError(std::string(name) + ": indices must be dense and ordered");
      }
      ids.push_back(line.substr(tab + 1));
      index.emplace(ids.back(), idx);
    }
  };
  read_ids("users.tsv", ds.user_ids, ds.user_index);
  read_ids("items.tsv", ds.item_ids, ds.item_index);

  std::ifstream in(fs::path(dir) / "manifest.tsv");
  if (!in) throw IoError("cannot open manifest.tsv in " + dir);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    int u = -1, v = -1;
    std::string tag;
    if (!(ss >> u >> v >> tag)) {
      throw FormatError("manifest.tsv:" + std::to_string(lineno) + ": malformed line");
    }
    if (u < 0 || u >= ds.num_users() || v < 0 || v >= ds.num_items()) {
      throw FormatError("manifest.tsv:" + std::to_string(lineno) + ": index out of range");
    }
    if (tag == "train") {
      ds.train.emplace_back(u, v);
    } else if (tag == "val") {
      ds.validation.emplace_back(u, v);
    } else if (tag == "test") {
      ds.test.emplace_back(u, v);
    } else {
      throw FormatError("manifest.tsv:" + std::to_string(lineno) + ": unknown split '" + tag + "'");
    }
  }
  return ds;
}

}  // namespace sgrec
