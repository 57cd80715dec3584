#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sgrec/config.hpp"
#include "sgrec/errors.hpp"

using namespace sgrec;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& body) {
  const fs::path p = fs::temp_directory_path() / name;
  std::ofstream out(p);
  out << body;
  return p;
}

}  // namespace

TEST_CASE("defaults carry the published hyper-parameters") {
  RunConfig cfg;
  CHECK(cfg.latent_dim == 200);
  CHECK(cfg.embed_dim == 3);
  CHECK(cfg.knn_size == 300);
  CHECK(cfg.batch_size == 512);
  CHECK(cfg.learning_rate == 0.001);
  CHECK(cfg.max_epochs == 1000);
  CHECK(cfg.dropout == 0.1);
  CHECK(cfg.beta == 0.2);
  CHECK(cfg.c2 == 0.9);
  CHECK(cfg.binarize_threshold == 4.0);
  CHECK(cfg.min_interactions == 10);
  CHECK(cfg.train_frac == 0.8);
  CHECK(cfg.val_frac == 0.1);
  CHECK(cfg.k_cut == 20);
}

TEST_CASE("load applies overrides and validates") {
  const auto p = write_temp("sgrec_cfg_ok.txt",
                            "# comment\n"
                            "latent_dim=16\n"
                            "strata_boundaries=3,7,inf\n"
                            "delimiter=,\n"
                            "\n"
                            "alpha=0.5\n");
  const RunConfig cfg = RunConfig::load(p.string());
  CHECK(cfg.latent_dim == 16);
  CHECK(cfg.alpha == 0.5);
  CHECK(cfg.delimiter == ",");
  REQUIRE(cfg.strata_boundaries.size() == 3);
  CHECK(cfg.strata_boundaries[1] == 7.0);
  CHECK(std::isinf(cfg.strata_boundaries[2]));
}

TEST_CASE("unknown keys are rejected") {
  const auto p = write_temp("sgrec_cfg_bad.txt", "latent_dimension=16\n");
  CHECK_THROWS_AS(RunConfig::load(p.string()), ConfigError);
}

TEST_CASE("out-of-range values are rejected") {
  RunConfig cfg;
  cfg.train_frac = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = RunConfig{};
  cfg.strata_boundaries = {5.0, 3.0, INFINITY};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = RunConfig{};
  cfg.strata_boundaries = {3.0, 5.0};  // no inf terminator
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = RunConfig{};
  CHECK_THROWS_AS(cfg.set("delimiter", ";"), ConfigError);
  CHECK_THROWS_AS(cfg.set("latent_dim", "abc"), ConfigError);
}

TEST_CASE("echo round-trips through set()") {
  RunConfig cfg;
  cfg.latent_dim = 12;
  cfg.alpha = 0.25;
  cfg.pild_include_validation = true;

  RunConfig reparsed;
  std::istringstream echo(cfg.echo());
  std::string line;
  while (std::getline(echo, line)) {
    const auto eq = line.find('=');
    REQUIRE(eq != std::string::npos);
    reparsed.set(line.substr(0, eq), line.substr(eq + 1));
  }
  CHECK(reparsed.latent_dim == 12);
  CHECK(reparsed.alpha == 0.25);
  CHECK(reparsed.pild_include_validation == true);
  CHECK(reparsed.echo() == cfg.echo());
}
