// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
//
// End-to-end pipeline runs through the installed binary. The binary path
// comes from SGREC_BIN (set by ctest) or is derived from the test
// executable's location.
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sgrec/rng.hpp"
#include "testutil.hpp"

namespace fs = std::filesystem;
using namespace sgrec;

namespace {

fs::path binary_path() {
  if (const char* env = std::getenv("SGREC_BIN")) return env;
  // tests/unit_tests -> tools/sgrec in the same build tree.
  std::error_code ec;
  const fs::path self = fs::read_symlink("/proc/self/exe", ec);
  if (!ec) {
    const fs::path guess = self.parent_path().parent_path() / "tools" / "sgrec";
    if (fs::exists(guess)) return guess;
  }
  return {};
}

int run(const std::string& cmd) {
  const int status = std::system((cmd + " > /dev/null 2>&1").c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

struct CliFixture {
  fs::path root;
  fs::path bin;
  fs::path config;
  fs::path input;

  CliFixture() {
    bin = binary_path();
    root = fs::temp_directory_path() / "sgrec_cli_fixture";
    fs::remove_all(root);
    fs::create_directories(root);

    config = root / "config.txt";
    std::ofstream cfg(config);
    cfg << "seed=11\n"
           "binarize_threshold=1\n"
           "min_interactions=0\n"
           "latent_dim=8\n"
           "embed_dim=2\n"
           "enc_hidden=16\n"
           "knn_size=4\n"
           "batch_size=16\n"
           "max_epochs=6\n"
           "patience=50\n"
           "neg_per_stratum=10\n"
           "threads=1\n"
           "k_cut=5\n";

    input = root / "ratings.dat";
    std::ofstream log(input);
    Rng rng(4242);
    const auto ds = testutil::planted_dataset(15, 8, 5, 31, 0.0);
    // Re-emit the planted interactions as a raw '::' log.
    for (const auto& [u, v] : ds.train) {
      log << ds.user_ids[u] << "::" << ds.item_ids[v] << "::5.0::" << (1000 + u) << '\n';
    }
    for (const auto& [u, v] : ds.test) {
      log << ds.user_ids[u] << "::" << ds.item_ids[v] << "::5.0\n";
    }
  }

  std::string exe() const { return bin.string(); }
};

}  // namespace

TEST_CASE("cli pipeline end to end") {
  CliFixture fx;
  if (fx.bin.empty()) {
    MESSAGE("sgrec binary not found; set SGREC_BIN");
    return;
  }
  const std::string data = (fx.root / "data").string();
  const std::string graph = (fx.root / "graph").string();
  const std::string rundir = (fx.root / "run").string();

  REQUIRE(run(fx.exe() + " prepare --config " + fx.config.string() + " --input " +
              fx.input.string() + " --out " + data) == 0);
  CHECK(fs::exists(fs::path(data) / "users.tsv"));
  CHECK(fs::exists(fs::path(data) / "items.tsv"));
  CHECK(fs::exists(fs::path(data) / "manifest.tsv"));
  CHECK(fs::exists(fs::path(data) / "stats.json"));
  CHECK(fs::exists(fs::path(data) / "effective_config.txt"));

  SUBCASE("prepare is deterministic") {
    const std::string data2 = (fx.root / "data2").string();
    REQUIRE(run(fx.exe() + " prepare --config " + fx.config.string() + " --input " +
                fx.input.string() + " --out " + data2) == 0);
    CHECK(slurp(fs::path(data) / "manifest.tsv") == slurp(fs::path(data2) / "manifest.tsv"));
  }

  REQUIRE(run(fx.exe() + " build-graph --config " + fx.config.string() + " --data " + data +
              " --out " + graph) == 0);
  for (const char* name : {"incidence.coo.tsv", "proximity.k2.coo.tsv", "subgraphs.tsv",
                           "shortest_paths.coo.tsv", "knn.json", "strata.json"}) {
    CHECK(fs::exists(fs::path(graph) / name));
  }

  REQUIRE(run(fx.exe() + " train --config " + fx.config.string() + " --data " + data +
              " --graph " + graph + " --out " + rundir) == 0);
  CHECK(fs::exists(fs::path(rundir) / "checkpoint_best.bin"));
  CHECK(fs::exists(fs::path(rundir) / "checkpoint_last.bin"));
  CHECK(fs::exists(fs::path(rundir) / "training_log.csv"));

  const std::string evaldir = (fx.root / "eval").string();
  REQUIRE(run(fx.exe() + " evaluate --config " + fx.config.string() + " --checkpoint " +
              (fs::path(rundir) / "checkpoint_best.bin").string() + " --data " + data +
              " --graph " + graph + " --out " + evaldir) == 0);
  CHECK(fs::exists(fs::path(evaldir) / "metrics.csv"));
  CHECK(fs::exists(fs::path(evaldir) / "summary.json"));

  SUBCASE("recommend prints ranked tab-separated lines") {
    const fs::path outfile = fx.root / "rec.tsv";
    const std::string cmd = fx.exe() + " recommend --checkpoint " +
                            (fs::path(rundir) / "checkpoint_last.bin").string() + " --data " +
                            data + " --graph " + graph + " --user u0 --k 4 > " +
                            outfile.string() + " 2>/dev/null";
    REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    std::ifstream in(outfile);
    std::string line;
    int rank = 0;
    double prev_score = 2.0;
    while (std::getline(in, line)) {
      ++rank;
      std::istringstream ss(line);
      int r = 0;
      std::string item;
      double score = 0, s1 = 0, s2 = 0;
      REQUIRE((ss >> r >> item >> score >> s1 >> s2));
      CHECK(r == rank);
      CHECK(score <= prev_score);
      prev_score = score;
      CHECK(item.substr(0, 1) == "v");
    }
    CHECK(rank == 4);
  }

  SUBCASE("resume accepts a previous checkpoint") {
    const std::string rundir2 = (fx.root / "run2").string();
    std::ofstream more(fx.config, std::ios::app);
    more << "max_epochs=8\n";
    more.close();
    REQUIRE(run(fx.exe() + " train --config " + fx.config.string() + " --data " + data +
                " --graph " + graph + " --out " + rundir2 + " --resume " +
                (fs::path(rundir) / "checkpoint_last.bin").string()) == 0);
    // Two more epochs logged: 7 and 8.
    std::ifstream log(fs::path(rundir2) / "training_log.csv");
    std::string header, first;
    std::getline(log, header);
    std::getline(log, first);
    CHECK(first.substr(0, 2) == "7,");
  }
}

TEST_CASE("cli error contracts") {
  CliFixture fx;
  if (fx.bin.empty()) {
    MESSAGE("sgrec binary not found; set SGREC_BIN");
    return;
  }

  SUBCASE("missing input exits 2") {
    CHECK(run(fx.exe() + " prepare --config " + fx.config.string() +
              " --input /nonexistent/ratings.dat --out " + (fx.root / "x").string()) == 2);
  }
  SUBCASE("unknown config key exits 2") {
    const fs::path bad = fx.root / "bad_config.txt";
    std::ofstream(bad) << "latent_dimension=7\n";
    CHECK(run(fx.exe() + " prepare --config " + bad.string() + " --input " + fx.input.string() +
              " --out " + (fx.root / "y").string()) == 2);
  }
  SUBCASE("missing required flags exit 2") {
    CHECK(run(fx.exe() + " prepare --config " + fx.config.string()) == 2);
  }
  SUBCASE("unknown user id exits 2") {
    const std::string data = (fx.root / "errdata").string();
    const std::string graph = (fx.root / "errgraph").string();
    const std::string rundir = (fx.root / "errrun").string();
    REQUIRE(run(fx.exe() + " prepare --config " + fx.config.string() + " --input " +
                fx.input.string() + " --out " + data) == 0);
    REQUIRE(run(fx.exe() + " build-graph --config " + fx.config.string() + " --data " + data +
                " --out " + graph) == 0);
    REQUIRE(run(fx.exe() + " train --config " + fx.config.string() + " --data " + data +
                " --graph " + graph + " --out " + rundir) == 0);
    CHECK(run(fx.exe() + " recommend --checkpoint " +
              (fs::path(rundir) / "checkpoint_best.bin").string() + " --data " + data +
              " --graph " + graph + " --user nosuchuser") == 2);
  }
}
