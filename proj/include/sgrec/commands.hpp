// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#pragma once

#include <optional>
#include <string>

namespace sgrec {

/// The five pipeline stages behind the CLI subcommands. Each one validates
/// its inputs, does the work, writes its outputs (plus an effective_config.txt
/// echo) into the output directory, and throws on failure; the CLI maps
/// exception types to exit codes (ConfigError -> 2, everything else -> 1).

void cmd_prepare(const std::string& config_path, const std::string& input_path,
                 const std::string& out_dir);

void cmd_build_graph(const std::string& config_path, const std::string& data_dir,
                     const std::string& out_dir);

void cmd_train(const std::string& config_path, const std::string& data_dir,
               const std::string& graph_dir, const std::string& out_dir,
               const std::string& resume_path = "");

void cmd_evaluate(const std::string& config_path, const std::string& checkpoint_path,
                  const std::string& data_dir, const std::string& graph_dir,
                  const std::string& out_dir);

void cmd_recommend(const std::string& checkpoint_path, const std::string& data_dir,
                   const std::string& graph_dir, const std::string& user_id, int k, double alpha);

}  // namespace sgrec
