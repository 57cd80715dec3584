// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#include "sgrec/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "sgrec/artifacts.hpp"
#include "sgrec/checkpoint.hpp"
#include "sgrec/errors.hpp"
#include "sgrec/evaluate.hpp"
#include "sgrec/ingest.hpp"
#include "sgrec/trainer.hpp"

namespace sgrec {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

RunConfig load_config(const std::string& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path);
  return RunConfig::load(path);
}

json config_json(const RunConfig& cfg) {
  json j = json::object();
  std::istringstream echo(cfg.echo());
  std::string line;
  while (std::getline(echo, line)) {
    const auto eq = line.find('=');
    j[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return j;
}

double density(std::int64_t nnz, std::int64_t rows, std::int64_t cols) {
  const std::int64_t cells = rows * cols;
  return cells == 0 ? 0.0 : static_cast<double>(nnz) / static_cast<double>(cells);
}

}  // namespace

void cmd_prepare(const std::string& config_path, const std::string& input_path,
                 const std::string& out_dir) {
  const RunConfig cfg = load_config(config_path);
  if (!fs::exists(input_path)) throw ConfigError("input path not found: " + input_path);

  const LoadResult loaded = load_interactions(input_path, cfg.delimiter);
  if (loaded.malformed_lines > 0) {
    std::cerr << "warning: " << loaded.malformed_lines << " malformed lines skipped\n";
  }
  const auto filtered =
      binarize_and_filter(loaded.interactions, cfg.binarize_threshold, cfg.min_interactions);
  const InteractionDataset ds = split(filtered, cfg.train_frac, cfg.val_frac, cfg.seed);

  write_dataset(ds, out_dir);
  cfg.write_echo(out_dir);

  json stats;
  stats["users"] = ds.num_users();
  stats["items"] = ds.num_items();
  stats["interactions"] = ds.num_interactions();
  stats["density"] = density(static_cast<std::int64_t>(ds.num_interactions()), ds.num_users(),
                             ds.num_items());
  stats["train"] = ds.train.size();
  stats["validation"] = ds.validation.size();
  stats["test"] = ds.test.size();
  stats["malformed_lines"] = loaded.malformed_lines;
  std::ofstream out(fs::path(out_dir) / "stats.json");
  if (!out) throw IoError("cannot write stats.json in " + out_dir);
  out << stats.dump(2) << '\n';

  std::cout << "prepared " << ds.num_interactions() << " interactions: " << ds.num_users()
            << " users x " << ds.num_items() << " items (density " << stats["density"] << ")\n"
            << "split train/val/test = " << ds.train.size() << "/" << ds.validation.size() << "/"
            << ds.test.size() << "\n";
}

void cmd_build_graph(const std::string& config_path, const std::string& data_dir,
                     const std::string& out_dir) {
  const RunConfig cfg = load_config(config_path);
  const InteractionDataset ds = read_dataset(data_dir);
  const GraphArtifacts g = build_graph_artifacts(ds, cfg);
  save_graph_artifacts(g, out_dir);
  cfg.write_echo(out_dir);

  json stats;
  stats["users"] = g.incidence.rows;
  stats["items"] = g.incidence.cols;
  for (std::size_t k = 0; k < g.proximities.size(); ++k) {
    const auto& m = g.proximities[k];
    const std::string key = "k" + std::to_string(k + 1);
    stats["proximity_nnz"][key] = m.nnz();
    stats["proximity_density"][key] = density(m.nnz(), m.rows, m.cols);
    std::cout << "proximity " << key << ": nnz " << m.nnz() << ", density "
              << density(m.nnz(), m.rows, m.cols) << '\n';
  }
  std::size_t subgraph_ones = 0;
  for (const auto& sg : g.subgraphs) subgraph_ones += sg.total_ones();
  stats["subgraph_ones"] = subgraph_ones;
  std::int64_t reachable = 0;
  for (const auto& row : g.paths.dist) {
    for (const auto d : row) reachable += d != PathLengths::kUnreachable;
  }
  stats["reachable_pairs"] = reachable;
  stats["knn_size"] = g.knn.knn_size;
  std::cout << "subgraph ones: " << subgraph_ones << ", reachable user-item pairs: " << reachable
            << '\n';
  std::ofstream out(fs::path(out_dir) / "graph_stats.json");
  if (!out) throw IoError("cannot write graph_stats.json in " + out_dir);
  out << stats.dump(2) << '\n';
}

void cmd_train(const std::string& config_path, const std::string& data_dir,
               const std::string& graph_dir, const std::string& out_dir,
               const std::string& resume_path) {
  const RunConfig cfg = load_config(config_path);
  const InteractionDataset ds = read_dataset(data_dir);
  const GraphArtifacts g = load_graph_artifacts(graph_dir);

  std::optional<Checkpoint> resume;
  if (!resume_path.empty()) {
    resume = Checkpoint::load(resume_path);
    resume->ensure_matches(cfg.k_ord, ds.num_items());
  }

  const TrainResult result = train(ds, g, cfg, resume ? &*resume : nullptr);

  fs::create_directories(out_dir);
  cfg.write_echo(out_dir);
  result.best.save((fs::path(out_dir) / "checkpoint_best.bin").string());
  result.last.save((fs::path(out_dir) / "checkpoint_last.bin").string());

  std::ofstream log(fs::path(out_dir) / "training_log.csv");
  if (!log) throw IoError("cannot write training_log.csv in " + out_dir);
  log << "epoch,mean_loss,mean_positive,mean_negative,mean_kl,val_ndcg,seconds\n";
  log.precision(12);
  for (const auto& row : result.log) {
    log << row.epoch << ',' << row.mean_loss << ',' << row.mean_positive << ','
        << row.mean_negative << ',' << row.mean_kl << ',' << row.val_ndcg << ',' << row.seconds
        << '\n';
  }

  std::cout << "trained " << result.log.size() << " epochs"
            << (result.stopped_early ? " (early stop)" : "") << "; best validation NDCG@"
            << cfg.k_cut << " = " << result.best.best_metric << " at epoch "
            << result.best.epoch << " over " << result.val_users << " users\n";
  if (result.aborted_non_finite) {
    throw NumericError("training aborted on a non-finite loss; last good checkpoint saved to " +
                       out_dir);
  }
}

void cmd_evaluate(const std::string& config_path, const std::string& checkpoint_path,
                  const std::string& data_dir, const std::string& graph_dir,
                  const std::string& out_dir) {
  const RunConfig cfg = load_config(config_path);
  const InteractionDataset ds = read_dataset(data_dir);
  const GraphArtifacts g = load_graph_artifacts(graph_dir);
  const Checkpoint ckpt = Checkpoint::load(checkpoint_path);
  ckpt.ensure_matches(cfg.k_ord, ds.num_items());

  const auto held_out = group_by_user(ds.test, ds.num_users());
  SparseBinary item_users;
  if (cfg.pild_include_validation) {
    auto pairs = ds.train;
    pairs.insert(pairs.end(), ds.validation.begin(), ds.validation.end());
    item_users = transpose(incidence_from_pairs(pairs, ds.num_users(), ds.num_items()));
  } else {
    item_users = transpose(g.incidence);
  }

  const MetricsReport report = evaluate_ranking(ckpt.dec, ckpt.enc, g.subgraphs, held_out,
                                                &item_users, cfg.k_cut, cfg.alpha, cfg.threads);

  fs::create_directories(out_dir);
  cfg.write_echo(out_dir);
  {
    std::ofstream csv(fs::path(out_dir) / "metrics.csv");
    if (!csv) throw IoError("cannot write metrics.csv in " + out_dir);
    csv.precision(12);
    csv << "user_id,ndcg,recall,pild,held_out\n";
    for (const auto& row : report.rows) {
      csv << ds.user_ids[row.user] << ',' << row.ndcg << ',' << row.recall << ',' << row.pild
          << ',' << row.held_out << '\n';
    }
    csv << "MEAN," << report.mean_ndcg << ',' << report.mean_recall << ',' << report.mean_pild
        << ',' << report.rows.size() << '\n';
  }
  {
    json summary;
    summary["k_cut"] = report.k_cut;
    summary["alpha"] = report.alpha;
    summary["ndcg"] = report.mean_ndcg;
    summary["recall"] = report.mean_recall;
    summary["pild"] = report.mean_pild;
    summary["users_evaluated"] = report.evaluated_users;
    summary["skipped_no_train"] = report.skipped_no_train;
    summary["skipped_no_holdout"] = report.skipped_no_holdout;
    summary["config"] = config_json(cfg);
    std::ofstream out(fs::path(out_dir) / "summary.json");
    if (!out) throw IoError("cannot write summary.json in " + out_dir);
    out << summary.dump(2) << '\n';
  }
  if (cfg.export_embeddings) {
    std::ofstream tsv(fs::path(out_dir) / "embeddings.tsv");
    if (!tsv) throw IoError("cannot write embeddings.tsv in " + out_dir);
    tsv.precision(12);
    for (int u = 0; u < ds.num_users(); ++u) {
      const auto fwd = encode(ckpt.enc, g.subgraphs[u], false, nullptr);
      tsv << ds.user_ids[u];
      for (const double x : fwd.post.mu) tsv << '\t' << x;
      tsv << '\n';
    }
  }

  std::cout << "evaluated " << report.evaluated_users << " users: NDCG@" << report.k_cut << " = "
            << report.mean_ndcg << ", Recall@" << report.k_cut << " = " << report.mean_recall
            << ", PILD = " << report.mean_pild << " (skipped " << report.skipped_no_train
            << " without train rows, " << report.skipped_no_holdout << " without held-out)\n";
}

void cmd_recommend(const std::string& checkpoint_path, const std::string& data_dir,
                   const std::string& graph_dir, const std::string& user_id, int k,
                   double alpha) {
  const InteractionDataset ds = read_dataset(data_dir);
  const GraphArtifacts g = load_graph_artifacts(graph_dir);
  const Checkpoint ckpt = Checkpoint::load(checkpoint_path);
  ckpt.ensure_matches(ckpt.config.k_ord, ds.num_items());

  const auto it = ds.user_index.find(user_id);
  if (it == ds.user_index.end()) throw ConfigError("unknown user id: " + user_id);

  const auto list = recommend(ckpt.dec, ckpt.enc, g.subgraphs[it->second], k, alpha);
  if (!list.has_value()) {
    throw EmptyDatasetError("user " + user_id + " has no training interactions to rank from");
  }
  std::cout.precision(12);
  for (std::size_t i = 0; i < list->items.size(); ++i) {
    std::cout << (i + 1) << '\t' << ds.item_ids[list->items[i]] << '\t' << list->scores[i]
              << '\t' << list->scores_order1[i] << '\t' << list->scores_order2[i] << '\n';
  }
}

}  // namespace sgrec
