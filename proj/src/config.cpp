// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#include "sgrec/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "sgrec/errors.hpp"

namespace sgrec {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const std::int64_t i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

std::vector<double> parse_boundaries(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok == "inf") {
      out.push_back(std::numeric_limits<double>::infinity());
    } else {
      out.push_back(parse_double(key, tok));
    }
  }
  if (out.empty()) throw ConfigError("config key '" + key + "': empty boundary list");
  return out;
}

std::string boundaries_to_string(const std::vector<double>& b) {
  std::ostringstream os;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (i) os << ',';
    if (std::isinf(b[i])) {
      os << "inf";
    } else {
      os << b[i];
    }
  }
  return os.str();
}

}  // namespace

std::vector<double> RunConfig::proximity_thresholds() const {
  std::vector<double> c(static_cast<std::size_t>(k_ord), c2);
  c[0] = 1.0;
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    cfg.set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "delimiter") {
    if (value != "::" && value != "," && value != "tab") {
      throw ConfigError("delimiter must be one of '::', ',', 'tab'");
    }
    delimiter = value;
  } else if (key == "binarize_threshold") {
    binarize_threshold = parse_double(key, value);
  } else if (key == "min_interactions") {
    min_interactions = static_cast<int>(parse_int(key, value));
  } else if (key == "train_frac") {
    train_frac = parse_double(key, value);
  } else if (key == "val_frac") {
    val_frac = parse_double(key, value);
  } else if (key == "seed") {
    seed = static_cast<std::uint64_t>(parse_int(key, value));
  } else if (key == "k_ord") {
    k_ord = static_cast<int>(parse_int(key, value));
  } else if (key == "c2") {
    c2 = parse_double(key, value);
  } else if (key == "proximity_normalize") {
    if (value != "none" && value != "row") {
      throw ConfigError("proximity_normalize must be 'none' or 'row'");
    }
    proximity_normalize = value;
  } else if (key == "max_second_order") {
    max_second_order = static_cast<int>(parse_int(key, value));
  } else if (key == "proximity_budget_mb") {
    proximity_budget_mb = static_cast<int>(parse_int(key, value));
  } else if (key == "knn_size") {
    knn_size = static_cast<int>(parse_int(key, value));
  } else if (key == "strata_boundaries") {
    strata_boundaries = parse_boundaries(key, value);
  } else if (key == "latent_dim") {
    latent_dim = static_cast<int>(parse_int(key, value));
  } else if (key == "embed_dim") {
    embed_dim = static_cast<int>(parse_int(key, value));
  } else if (key == "item_layers") {
    item_layers = static_cast<int>(parse_int(key, value));
  } else if (key == "prox_layers") {
    prox_layers = static_cast<int>(parse_int(key, value));
  } else if (key == "enc_hidden") {
    enc_hidden = static_cast<int>(parse_int(key, value));
  } else if (key == "enc_layers") {
    enc_layers = static_cast<int>(parse_int(key, value));
  } else if (key == "dropout") {
    dropout = parse_double(key, value);
  } else if (key == "beta") {
    beta = parse_double(key, value);
  } else if (key == "neg_per_stratum") {
    neg_per_stratum = static_cast<int>(parse_int(key, value));
  } else if (key == "latent_samples") {
    latent_samples = static_cast<int>(parse_int(key, value));
  } else if (key == "batch_size") {
    batch_size = static_cast<int>(parse_int(key, value));
  } else if (key == "learning_rate") {
    learning_rate = parse_double(key, value);
  } else if (key == "max_epochs") {
    max_epochs = static_cast<int>(parse_int(key, value));
  } else if (key == "patience") {
    patience = static_cast<int>(parse_int(key, value));
  } else if (key == "eval_every") {
    eval_every = static_cast<int>(parse_int(key, value));
  } else if (key == "grad_clip") {
    grad_clip = parse_double(key, value);
  } else if (key == "threads") {
    threads = static_cast<int>(parse_int(key, value));
  } else if (key == "debug_loss_csv") {
    debug_loss_csv = value;
  } else if (key == "k_cut") {
    k_cut = static_cast<int>(parse_int(key, value));
  } else if (key == "alpha") {
    alpha = parse_double(key, value);
  } else if (key == "pild_include_validation") {
    pild_include_validation = parse_bool(key, value);
  } else if (key == "export_embeddings") {
    export_embeddings = parse_bool(key, value);
  } else {
    throw ConfigError("unknown config key: '" + key + "'");
  }
}

void RunConfig::validate() const {
  if (!(train_frac > 0.0 && train_frac < 1.0)) {
    throw ConfigError("train_frac must be in (0,1)");
  }
  if (!(val_frac >= 0.0 && val_frac < 1.0)) {
    throw ConfigError("val_frac must be in [0,1)");
  }
  if (min_interactions < 0) throw ConfigError("min_interactions must be >= 0");
  if (k_ord < 1 || k_ord > 2) throw ConfigError("k_ord must be 1 or 2");
  if (c2 <= 0.0) throw ConfigError("c2 must be > 0");
  if (max_second_order < 0) throw ConfigError("max_second_order must be >= 0");
  if (proximity_budget_mb <= 0) throw ConfigError("proximity_budget_mb must be > 0");
  if (knn_size < 1) throw ConfigError("knn_size must be >= 1");
  for (std::size_t i = 1; i < strata_boundaries.size(); ++i) {
    if (!(strata_boundaries[i] > strata_boundaries[i - 1])) {
      throw ConfigError("strata_boundaries must be strictly increasing");
    }
  }
  if (!std::isinf(strata_boundaries.back())) {
    throw ConfigError("strata_boundaries must end with 'inf'");
  }
  if (latent_dim < 1) throw ConfigError("latent_dim must be >= 1");
  if (embed_dim < 1) throw ConfigError("embed_dim must be >= 1");
  if (item_layers < 1) throw ConfigError("item_layers must be >= 1");
  if (prox_layers < 1) throw ConfigError("prox_layers must be >= 1");
  if (enc_hidden < 1) throw ConfigError("enc_hidden must be >= 1");
  if (enc_layers < 1) throw ConfigError("enc_layers must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0,1)");
  if (beta < 0.0) throw ConfigError("beta must be >= 0");
  if (neg_per_stratum < 0) throw ConfigError("neg_per_stratum must be >= 0");
  if (latent_samples < 1) throw ConfigError("latent_samples must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (learning_rate < 0.0) throw ConfigError("learning_rate must be >= 0");
  if (max_epochs < 0) throw ConfigError("max_epochs must be >= 0");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (grad_clip < 0.0) throw ConfigError("grad_clip must be >= 0");
  if (threads < 0) throw ConfigError("threads must be >= 0");
  if (k_cut < 1) throw ConfigError("k_cut must be >= 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in [0,1]");
}

std::string RunConfig::echo() const {
  std::ostringstream os;
  os.precision(17);
  os << "alpha=" << alpha << '\n'
     << "batch_size=" << batch_size << '\n'
     << "beta=" << beta << '\n'
     << "binarize_threshold=" << binarize_threshold << '\n'
     << "c2=" << c2 << '\n'
     << "debug_loss_csv=" << debug_loss_csv << '\n'
     << "delimiter=" << delimiter << '\n'
     << "dropout=" << dropout << '\n'
     << "embed_dim=" << embed_dim << '\n'
     << "enc_hidden=" << enc_hidden << '\n'
     << "enc_layers=" << enc_layers << '\n'
     << "eval_every=" << eval_every << '\n'
     << "export_embeddings=" << (export_embeddings ? "true" : "false") << '\n'
     << "grad_clip=" << grad_clip << '\n'
     << "item_layers=" << item_layers << '\n'
     << "k_cut=" << k_cut << '\n'
     << "k_ord=" << k_ord << '\n'
     << "knn_size=" << knn_size << '\n'
     << "latent_dim=" << latent_dim << '\n'
     << "latent_samples=" << latent_samples << '\n'
     << "learning_rate=" << learning_rate << '\n'
     << "max_epochs=" << max_epochs << '\n'
     << "max_second_order=" << max_second_order << '\n'
     << "min_interactions=" << min_interactions << '\n'
     << "neg_per_stratum=" << neg_per_stratum << '\n'
     << "patience=" << patience << '\n'
     << "pild_include_validation=" << (pild_include_validation ? "true" : "false") << '\n'
     << "prox_layers=" << prox_layers << '\n'
     << "proximity_budget_mb=" << proximity_budget_mb << '\n'
     << "proximity_normalize=" << proximity_normalize << '\n'
     << "seed=" << seed << '\n'
     << "strata_boundaries=" << boundaries_to_string(strata_boundaries) << '\n'
     << "threads=" << threads << '\n'
     << "train_frac=" << train_frac << '\n'
     << "val_frac=" << val_frac << '\n';
  return os.str();
}

void RunConfig::write_echo(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  const std::string path = (std::filesystem::path(dir) / "effective_config.txt").string();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << echo();
}

std::string RunConfig::describe_keys() {
  return
      "alpha                    1.0      ranking blend: alpha*F1 + (1-alpha)*F2\n"
      "batch_size               512      users per optimization step\n"
      "beta                     0.2      KL penalty weight\n"
      "binarize_threshold       4.0      keep interactions with value >= threshold\n"
      "c2                       0.9      proximity threshold for orders >= 2\n"
      "debug_loss_csv           (empty)  per-user loss breakdown CSV; empty = off\n"
      "delimiter                ::       input field delimiter ('::', ',' or 'tab')\n"
      "dropout                  0.1      encoder input dropout rate\n"
      "embed_dim                3        D, item/proximity embedding dimension\n"
      "enc_hidden               600      encoder hidden width H\n"
      "enc_layers               1        encoder hidden layer count\n"
      "eval_every               1        validation cadence in epochs\n"
      "export_embeddings        false    write embeddings.tsv during evaluate\n"
      "grad_clip                10.0     global L2 gradient clip; 0 disables\n"
      "item_layers              2        M, item network depth\n"
      "k_cut                    20       ranking cutoff K\n"
      "k_ord                    2        total proximity order (1 or 2)\n"
      "knn_size                 300      item neighborhood size for the masked layers\n"
      "latent_dim               200      P, user latent dimension\n"
      "latent_samples           1        reparameterization samples per user step\n"
      "learning_rate            0.001    Adam step size\n"
      "max_epochs               1000     epoch cap\n"
      "max_second_order         0        per-row cap on order>=2 positives; 0 = unlimited\n"
      "min_interactions         10       degree floor applied to users and items\n"
      "neg_per_stratum          50       per-stratum negative sample cap\n"
      "patience                 20       epochs without validation improvement before stop\n"
      "pild_include_validation  false    include validation split in PILD similarities\n"
      "prox_layers              2        R, proximity network depth\n"
      "proximity_budget_mb      1024     memory budget for walk-count matrices\n"
      "proximity_normalize      none     'row' divides walk counts by their row sum\n"
      "seed                     1        master seed; all randomness derives from it\n"
      "strata_boundaries        3,5,inf  shortest-path cut points; must end with inf\n"
      "threads                  0        worker threads; 0 = auto, 1 = serial\n"
      "train_frac               0.8      training fraction of interactions\n"
      "val_frac                 0.1      validation fraction of the training portion\n";
}

}  // namespace sgrec
