// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace sgrec {

/// Every tunable in one flat struct, loaded from a `key=value` text file.
/// Unknown keys are rejected; every key has a documented default (see
/// describe_keys()). The effective configuration is echoed into each
/// command's output directory.
struct RunConfig {
  // ingest
  std::string delimiter = "::";  // "::", "," or "tab"
  double binarize_threshold = 4.0;
  int min_interactions = 10;
  double train_frac = 0.8;
  double val_frac = 0.1;  // fraction of the training portion
  std::uint64_t seed = 1;

  // graph
  int k_ord = 2;                            // total proximity order (1 or 2 via the CLI)
  double c2 = 0.9;                          // threshold for orders >= 2 (c_1 is fixed at 1)
  std::string proximity_normalize = "none"; // none | row
  int max_second_order = 0;                 // per-row cap on order>=2 positives; 0 = unlimited
  int proximity_budget_mb = 1024;           // memory budget for walk-count matrices
  int knn_size = 300;
  std::vector<double> strata_boundaries = {3.0, 5.0,
                                           std::numeric_limits<double>::infinity()};

  // model
  int latent_dim = 200;  // P
  int embed_dim = 3;     // D
  int item_layers = 2;   // M
  int prox_layers = 2;   // R
  int enc_hidden = 600;  // H
  int enc_layers = 1;
  double dropout = 0.1;

  // objective
  double beta = 0.2;        // KL penalty weight
  int neg_per_stratum = 50; // per-stratum negative sample cap
  int latent_samples = 1;

  // trainer
  int batch_size = 512;
  double learning_rate = 0.001;
  int max_epochs = 1000;
  int patience = 20;
  int eval_every = 1;
  double grad_clip = 10.0;  // global L2; 0 disables
  int threads = 0;          // 0 = hardware concurrency; 1 = bit-deterministic serial
  std::string debug_loss_csv;  // per-user loss breakdown dump; empty = off

  // evaluation
  int k_cut = 20;
  double alpha = 1.0;  // score = alpha*F_1 + (1-alpha)*F_2
  bool pild_include_validation = false;
  bool export_embeddings = false;

  /// Thresholds c_1..c_K as used in subgraph construction.
  std::vector<double> proximity_thresholds() const;

  /// Parses `path`, overriding defaults. Throws ConfigError on unknown keys,
  /// malformed lines, or out-of-range values.
  static RunConfig load(const std::string& path);

  /// Applies a single `key=value` assignment.
  void set(const std::string& key, const std::string& value);

  /// Validates cross-field constraints (fraction ranges, positivity, ...).
  void validate() const;

  /// All keys with current values, sorted; the echo format.
  std::string echo() const;

  /// Writes echo() to `<dir>/effective_config.txt`.
  void write_echo(const std::string& dir) const;

  /// One `key  default  description` row per key, for --help.
  static std::string describe_keys();
};

}  // namespace sgrec
