// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <tuple>

#include "sgrec/errors.hpp"
#include "sgrec/ingest.hpp"

using namespace sgrec;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& body) {
  const fs::path p = fs::temp_directory_path() / name;
  std::ofstream out(p);
  out << body;
  return p;
}

std::vector<RawInteraction> raw(const std::vector<std::tuple<std::string, std::string, double>>& v) {
  std::vector<RawInteraction> out;
  for (const auto& [u, i, val] : v) out.push_back({u, i, val, std::nullopt});
  return out;
}

}  // namespace

TEST_CASE("load_interactions parses the :: record layout") {
  const auto p = write_temp("sgrec_ml.dat", "1::296::5.0::1147880044\n2::300::3.5\n");
  const auto res = load_interactions(p.string(), "::");
  REQUIRE(res.interactions.size() == 2);
  CHECK(res.malformed_lines == 0);
  const auto& r = res.interactions[0];
  CHECK(r.user_id == "1");
  CHECK(r.item_id == "296");
  CHECK(r.value == 5.0);
  REQUIRE(r.timestamp.has_value());
  CHECK(*r.timestamp == 1147880044);
  CHECK_FALSE(res.interactions[1].timestamp.has_value());
}

TEST_CASE("load_interactions handles csv without timestamps") {
  const auto p = write_temp("sgrec_csv.dat", "a,b,4\n");
  const auto res = load_interactions(p.string(), ",");
  REQUIRE(res.interactions.size() == 1);
  CHECK(res.interactions[0].user_id == "a");
  CHECK(res.interactions[0].item_id == "b");
  CHECK(res.interactions[0].value == 4.0);
  CHECK_FALSE(res.interactions[0].timestamp.has_value());
}

TEST_CASE("empty file yields an empty list with zero warnings") {
  const auto p = write_temp("sgrec_empty.dat", "");
  const auto res = load_interactions(p.string(), "::");
  CHECK(res.interactions.empty());
  CHECK(res.malformed_lines == 0);
}

TEST_CASE("malformed lines are counted, all-malformed is fatal") {
  const auto p = write_temp("sgrec_mixed.dat", "1::2::5.0\ngarbage\n3::4::nope\n");
  const auto res = load_interactions(p.string(), "::");
  CHECK(res.interactions.size() == 1);
  CHECK(res.malformed_lines == 2);

  const auto bad = write_temp("sgrec_bad.dat", "garbage\nmore garbage\n");
  CHECK_THROWS_AS(load_interactions(bad.string(), "::"), FormatError);
  CHECK_THROWS_AS(load_interactions("/nonexistent/sgrec.dat", "::"), IoError);
}

TEST_CASE("binarize keeps values at or above the threshold") {
  const auto pairs = binarize_and_filter(
      raw({{"u1", "v1", 3.5}, {"u2", "v2", 4.0}, {"u3", "v3", 5.0}}), 4.0, 0);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0] == std::pair<std::string, std::string>("u2", "v2"));
  CHECK(pairs[1] == std::pair<std::string, std::string>("u3", "v3"));
}

TEST_CASE("min_interactions 0 disables the degree floor") {
  const auto pairs = binarize_and_filter(raw({{"u", "v", 5.0}}), 1.0, 0);
  CHECK(pairs.size() == 1);
}

TEST_CASE("degree floor above every degree empties the dataset") {
  std::vector<RawInteraction> rs;
  for (int u = 0; u < 3; ++u) {
    for (int v = 0; v < 3; ++v) rs.push_back({"u" + std::to_string(u), "v" + std::to_string(v), 5.0, {}});
  }
  CHECK_THROWS_AS(binarize_and_filter(rs, 1.0, 10), EmptyDatasetError);
}

TEST_CASE("filtering iterates to a fixed point") {
  // (A,x),(A,y),(B,x),(C,y) collapses entirely under floor 2: B and C fall
  // first, which drops x and y, which drops A. The (D,E)x(p,q) clique stays.
  auto rs = raw({{"A", "x", 5},
                 {"A", "y", 5},
                 {"B", "x", 5},
                 {"C", "y", 5},
                 {"D", "p", 5},
                 {"D", "q", 5},
                 {"E", "p", 5},
                 {"E", "q", 5}});
  const auto pairs = binarize_and_filter(rs, 1.0, 2);
  REQUIRE(pairs.size() == 4);
  for (const auto& [u, v] : pairs) {
    CHECK((u == "D" || u == "E"));
    CHECK((v == "p" || v == "q"));
  }
}

TEST_CASE("duplicates collapse to one") {
  const auto pairs = binarize_and_filter(raw({{"u", "v", 5.0}, {"u", "v", 4.5}}), 1.0, 0);
  CHECK(pairs.size() == 1);
}

TEST_CASE("split honors the 80/10 arithmetic") {
  std::vector<std::pair<std::string, std::string>> inter;
  for (int i = 0; i < 100; ++i) inter.emplace_back("u" + std::to_string(i % 10), "v" + std::to_string(i));
  const auto ds = split(inter, 0.8, 0.1, 1234);
  CHECK(ds.train.size() == 72);
  CHECK(ds.validation.size() == 8);
  CHECK(ds.test.size() == 20);
}

TEST_CASE("split is deterministic and a partition") {
  std::vector<std::pair<std::string, std::string>> inter;
  for (int i = 0; i < 57; ++i) inter.emplace_back("u" + std::to_string(i % 7), "v" + std::to_string(i % 13));
  std::sort(inter.begin(), inter.end());
  inter.erase(std::unique(inter.begin(), inter.end()), inter.end());

  const auto a = split(inter, 0.8, 0.1, 99);
  const auto b = split(inter, 0.8, 0.1, 99);
  CHECK(a.train == b.train);
  CHECK(a.validation == b.validation);
  CHECK(a.test == b.test);

  std::set<std::pair<int, int>> all(a.train.begin(), a.train.end());
  for (const auto& p : a.validation) CHECK(all.insert(p).second);
  for (const auto& p : a.test) CHECK(all.insert(p).second);
  CHECK(all.size() == inter.size());
}

TEST_CASE("val_frac 0 leaves validation empty") {
  std::vector<std::pair<std::string, std::string>> inter;
  for (int i = 0; i < 40; ++i) inter.emplace_back("u" + std::to_string(i), "v" + std::to_string(i));
  const auto ds = split(inter, 0.75, 0.0, 5);
  CHECK(ds.validation.empty());
  CHECK(ds.train.size() == 30);
  CHECK(ds.test.size() == 10);
}

TEST_CASE("dataset round-trips through the manifest files") {
  std::vector<std::pair<std::string, std::string>> inter;
  for (int i = 0; i < 30; ++i) inter.emplace_back("u" + std::to_string(i % 5), "v" + std::to_string(i % 11));
  std::sort(inter.begin(), inter.end());
  inter.erase(std::unique(inter.begin(), inter.end()), inter.end());
  const auto ds = split(inter, 0.7, 0.2, 3);

  const auto dir = fs::temp_directory_path() / "sgrec_ds_roundtrip";
  fs::remove_all(dir);
  write_dataset(ds, dir.string());
  const auto back = read_dataset(dir.string());
  CHECK(back.user_ids == ds.user_ids);
  CHECK(back.item_ids == ds.item_ids);
  CHECK(back.train == ds.train);
  CHECK(back.validation == ds.validation);
  CHECK(back.test == ds.test);
}
