// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
//
// sgrec: subgraph-based exploration/exploitation recommender.
//
//   sgrec prepare     --config c.txt --input ratings.dat --out data/
//   sgrec build-graph --config c.txt --data data/ --out graph/
//   sgrec train       --config c.txt --data data/ --graph graph/ --out run/
//   sgrec evaluate    --config c.txt --checkpoint run/checkpoint_best.bin \
//                     --data data/ --graph graph/ --out eval/
//   sgrec recommend   --checkpoint run/checkpoint_best.bin --data data/ \
//                     --graph graph/ --user 42 --k 20 --alpha 0.5

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sgrec/commands.hpp"
#include "sgrec/config.hpp"
#include "sgrec/errors.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sgrec: exploitation/exploration recommender over user proximity subgraphs"};
  app.require_subcommand(1);
  app.footer("Config file keys (key=value, one per line; unknown keys are rejected):\n" +
             sgrec::RunConfig::describe_keys());

  std::string config_path, input_path, data_dir, graph_dir, out_dir, checkpoint_path,
      resume_path, user_id;
  int k = 20;
  double alpha = 1.0;

  auto* prepare = app.add_subcommand("prepare", "Load, binarize, filter and split a log");
  prepare->add_option("--config", config_path, "config file")->required();
  prepare->add_option("--input", input_path, "delimited interaction log")->required();
  prepare->add_option("--out", out_dir, "output directory")->required();

  auto* build = app.add_subcommand("build-graph", "Build proximity/graph artifacts");
  build->add_option("--config", config_path, "config file")->required();
  build->add_option("--data", data_dir, "prepared dataset directory")->required();
  build->add_option("--out", out_dir, "output directory")->required();

  auto* train = app.add_subcommand("train", "Train the model");
  train->add_option("--config", config_path, "config file")->required();
  train->add_option("--data", data_dir, "prepared dataset directory")->required();
  train->add_option("--graph", graph_dir, "graph artifacts directory")->required();
  train->add_option("--out", out_dir, "output directory")->required();
  train->add_option("--resume", resume_path, "checkpoint to continue from");

  auto* evaluate = app.add_subcommand("evaluate", "Rank held-out items and report metrics");
  evaluate->add_option("--config", config_path, "config file")->required();
  evaluate->add_option("--checkpoint", checkpoint_path, "trained checkpoint")->required();
  evaluate->add_option("--data", data_dir, "prepared dataset directory")->required();
  evaluate->add_option("--graph", graph_dir, "graph artifacts directory")->required();
  evaluate->add_option("--out", out_dir, "output directory")->required();

  auto* rec = app.add_subcommand("recommend", "Print a ranked list for one user");
  rec->add_option("--checkpoint", checkpoint_path, "trained checkpoint")->required();
  rec->add_option("--data", data_dir, "prepared dataset directory")->required();
  rec->add_option("--graph", graph_dir, "graph artifacts directory")->required();
  rec->add_option("--user", user_id, "user id (as in the input log)")->required();
  rec->add_option("--k", k, "list length");
  rec->add_option("--alpha", alpha, "score blend alpha*F1 + (1-alpha)*F2");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (prepare->parsed()) {
      sgrec::cmd_prepare(config_path, input_path, out_dir);
    } else if (build->parsed()) {
      sgrec::cmd_build_graph(config_path, data_dir, out_dir);
    } else if (train->parsed()) {
      sgrec::cmd_train(config_path, data_dir, graph_dir, out_dir, resume_path);
    } else if (evaluate->parsed()) {
      sgrec::cmd_evaluate(config_path, checkpoint_path, data_dir, graph_dir, out_dir);
    } else if (rec->parsed()) {
      sgrec::cmd_recommend(checkpoint_path, data_dir, graph_dir, user_id, k, alpha);
    }
  } catch (const sgrec::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
