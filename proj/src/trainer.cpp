// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#include "sgrec/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "sgrec/errors.hpp"
#include "sgrec/evaluate.hpp"
#include "sgrec/parallel.hpp"

namespace sgrec {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

template <typename Fn>
void visit_all(DecoderParams& dec, EncoderParams& enc, Fn&& fn) {
  visit_decoder_tensors(dec, fn);
  visit_encoder_tensors(enc, fn);
}

struct GradAccumulator {
  DecoderParams dec;
  EncoderParams enc;
  double loss = 0.0, positive = 0.0, negative = 0.0, kl = 0.0;

  GradAccumulator(const DecoderParams& dshape, const EncoderParams& eshape)
      : dec(DecoderParams::zeros_like(dshape)), enc(EncoderParams::zeros_like(eshape)) {}
};

Checkpoint snapshot(const TrainerState& state, const RunConfig& cfg, int epoch,
                    double best_metric) {
  Checkpoint ckpt;
  ckpt.config = cfg;
  ckpt.epoch = epoch;
  ckpt.adam_step = state.adam_step;
  ckpt.best_metric = best_metric;
  ckpt.seed = cfg.seed;
  ckpt.dec = state.dec;
  ckpt.enc = state.enc;
  ckpt.adam_m_dec = state.adam_m_dec;
  ckpt.adam_v_dec = state.adam_v_dec;
  ckpt.adam_m_enc = state.adam_m_enc;
  ckpt.adam_v_enc = state.adam_v_enc;
  return ckpt;
}

}  // namespace

TrainerState init_trainer_state(const InteractionDataset& ds, const GraphArtifacts& graph,
                                const RunConfig& cfg) {
  TrainerState state;
  Rng rng = Rng::derive(cfg.seed, rng_streams::kInit);
  state.dec = DecoderParams::init(cfg.k_ord, ds.num_items(), cfg.latent_dim, cfg.embed_dim,
                                  cfg.item_layers, cfg.prox_layers, graph.knn, rng);
  state.enc = EncoderParams::init(cfg.k_ord * ds.num_items(), cfg.enc_hidden, cfg.enc_layers,
                                  cfg.latent_dim, cfg.dropout, rng);
  state.adam_m_dec = DecoderParams::zeros_like(state.dec);
  state.adam_v_dec = DecoderParams::zeros_like(state.dec);
  state.adam_m_enc = EncoderParams::zeros_like(state.enc);
  state.adam_v_enc = EncoderParams::zeros_like(state.enc);
  return state;
}

LossBreakdown train_batch(TrainerState& state, const GraphArtifacts& graph,
                          const std::vector<int>& batch_users, int epoch, const RunConfig& cfg,
                          std::vector<LossBreakdown>* per_user) {
  if (batch_users.empty()) throw ConfigError("train_batch: empty batch");
  const int threads = resolve_threads(cfg.threads);
  const std::size_t n = batch_users.size();
  const std::size_t nchunks =
      std::min<std::size_t>(static_cast<std::size_t>(threads), std::max<std::size_t>(n, 1));

  NegativePolicy policy;
  policy.default_cap = cfg.neg_per_stratum;

  std::vector<GradAccumulator> acc;
  acc.reserve(nchunks);
  for (std::size_t c = 0; c < nchunks; ++c) acc.emplace_back(state.dec, state.enc);
  if (per_user != nullptr) per_user->assign(n, {});

  const std::size_t per = (n + nchunks - 1) / nchunks;
  parallel_for(n, static_cast<int>(nchunks), [&](std::size_t begin, std::size_t end) {
    GradAccumulator& local = acc[begin / per];
    for (std::size_t i = begin; i < end; ++i) {
      const int u = batch_users[i];
      Rng eps_rng = Rng::derive(cfg.seed, rng_streams::kEps, static_cast<std::uint64_t>(epoch),
                                static_cast<std::uint64_t>(u));
      std::vector<Vec> eps(static_cast<std::size_t>(cfg.latent_samples),
                           Vec(static_cast<std::size_t>(cfg.latent_dim)));
      for (auto& sample : eps) {
        for (auto& e : sample) e = eps_rng.next_normal();
      }
      Rng neg_rng = Rng::derive(cfg.seed, rng_streams::kNegatives,
                                static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(u));
      const auto plan = draw_negatives(graph.strata.users[u], policy, neg_rng);
      Rng drop_rng = Rng::derive(cfg.seed, rng_streams::kDropout,
                                 static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(u));
      const auto breakdown = loss_and_gradients(
          state.dec, state.enc, graph.subgraphs[u], eps, plan, cfg.beta,
          cfg.dropout > 0.0 ? &drop_rng : nullptr, &local.dec, &local.enc);
      local.loss += breakdown.total;
      local.positive += breakdown.positive;
      local.negative += breakdown.negative;
      local.kl += breakdown.kl;
      if (per_user != nullptr) (*per_user)[i] = breakdown;
    }
  });

  // Reduce in chunk order (chunks are contiguous user-index ranges), then
  // scale to the batch mean. Visitors enumerate tensors in one fixed order,
  // so positional pairing across accumulators is safe.
  std::vector<std::vector<Vec*>> chunk_tensors(nchunks);
  for (std::size_t c = 0; c < nchunks; ++c) {
    visit_all(acc[c].dec, acc[c].enc,
              [&](const std::string&, Vec& v) { chunk_tensors[c].push_back(&v); });
  }
  LossBreakdown total;
  total.beta = cfg.beta;
  for (std::size_t c = 0; c < nchunks; ++c) {
    total.total += acc[c].loss;
    total.positive += acc[c].positive;
    total.negative += acc[c].negative;
    total.kl += acc[c].kl;
    if (c == 0) continue;
    for (std::size_t i = 0; i < chunk_tensors[0].size(); ++i) {
      kernels::add(chunk_tensors[0][i]->data(), chunk_tensors[c][i]->data(),
                   chunk_tensors[0][i]->size());
    }
  }

  const double inv_batch = 1.0 / static_cast<double>(n);
  visit_all(acc[0].dec, acc[0].enc, [&](const std::string& name, Vec& v) {
    kernels::scale(v.data(), inv_batch, v.size());
    if (!all_finite(v)) throw NumericError("non-finite gradient in tensor " + name);
  });

  if (cfg.grad_clip > 0.0) {
    double sq = 0.0;
    visit_all(acc[0].dec, acc[0].enc,
              [&](const std::string&, Vec& v) { sq += kernels::sum_squares(v.data(), v.size()); });
    const double norm = std::sqrt(sq);
    if (norm > cfg.grad_clip) {
      const double factor = cfg.grad_clip / norm;
      visit_all(acc[0].dec, acc[0].enc,
                [&](const std::string&, Vec& v) { kernels::scale(v.data(), factor, v.size()); });
    }
  }

  ++state.adam_step;
  const double bias1 = 1.0 - std::pow(kAdamBeta1, state.adam_step);
  const double bias2 = 1.0 - std::pow(kAdamBeta2, state.adam_step);
  auto apply = [&](Vec& p, Vec& m, Vec& v, const Vec& g) {
    kernels::adam_step(p.data(), m.data(), v.data(), g.data(), p.size(), cfg.learning_rate,
                       kAdamBeta1, kAdamBeta2, kAdamEps, bias1, bias2);
  };
  // Walk the four parallel structures in lock-step; the visitors enumerate
  // tensors in one fixed order, so positional pairing is safe.
  std::vector<Vec*> params, moments_m, moments_v, grads;
  visit_all(state.dec, state.enc, [&](const std::string&, Vec& v) { params.push_back(&v); });
  visit_all(state.adam_m_dec, state.adam_m_enc,
            [&](const std::string&, Vec& v) { moments_m.push_back(&v); });
  visit_all(state.adam_v_dec, state.adam_v_enc,
            [&](const std::string&, Vec& v) { moments_v.push_back(&v); });
  visit_all(acc[0].dec, acc[0].enc, [&](const std::string&, Vec& v) { grads.push_back(&v); });
  for (std::size_t i = 0; i < params.size(); ++i) {
    apply(*params[i], *moments_m[i], *moments_v[i], *grads[i]);
  }
  return total;
}

TrainResult train(const InteractionDataset& ds, const GraphArtifacts& graph,
                  const RunConfig& cfg, const Checkpoint* resume) {
  if (ds.train.empty()) throw ConfigError("train: empty train split");
  if (graph.subgraphs.size() != static_cast<std::size_t>(ds.num_users())) {
    throw ShapeError("train: graph artifacts do not match the dataset");
  }

  TrainerState state;
  int start_epoch = 0;
  double resume_metric = -1.0;
  if (resume != nullptr) {
    resume->ensure_matches(cfg.k_ord, ds.num_items());
    state.dec = resume->dec;
    state.enc = resume->enc;
    state.adam_m_dec = resume->adam_m_dec;
    state.adam_v_dec = resume->adam_v_dec;
    state.adam_m_enc = resume->adam_m_enc;
    state.adam_v_enc = resume->adam_v_enc;
    state.adam_step = resume->adam_step;
    start_epoch = resume->epoch;
    resume_metric = resume->best_metric;
  } else {
    state = init_trainer_state(ds, graph, cfg);
  }
  const auto val_held_out = group_by_user(ds.validation, ds.num_users());
  bool has_validation = false;
  for (const auto& row : val_held_out) has_validation = has_validation || !row.empty();

  TrainResult result;
  result.best = snapshot(state, cfg, start_epoch, resume_metric);

  std::ofstream debug_csv;
  if (!cfg.debug_loss_csv.empty()) {
    debug_csv.open(cfg.debug_loss_csv);
    if (!debug_csv) throw IoError("cannot write " + cfg.debug_loss_csv);
    debug_csv << "epoch,user,positive,negative,kl,total\n";
  }

  std::vector<int> order(static_cast<std::size_t>(ds.num_users()));
  std::iota(order.begin(), order.end(), 0);

  double best_metric = resume_metric;
  int epochs_since_best = 0;
  for (int epoch = start_epoch + 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng shuffle_rng =
        Rng::derive(cfg.seed, rng_streams::kEpochShuffle, static_cast<std::uint64_t>(epoch));
    shuffle_rng.shuffle(order);

    EpochLog log;
    log.epoch = epoch;
    std::size_t users_seen = 0;
    std::vector<LossBreakdown> per_user;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const std::vector<int> batch(order.begin() + begin, order.begin() + end);
      LossBreakdown batch_sum;
      try {
        batch_sum = train_batch(state, graph, batch, epoch, cfg,
                                debug_csv.is_open() ? &per_user : nullptr);
      } catch (const NumericError&) {
        // The throwing batch never touched the parameters; return the last
        // good state.
        result.aborted_non_finite = true;
        result.last = snapshot(state, cfg, epoch - 1, best_metric);
        if (!has_validation) result.best = result.last;
        return result;
      }
      log.mean_loss += batch_sum.total;
      log.mean_positive += batch_sum.positive;
      log.mean_negative += batch_sum.negative;
      log.mean_kl += batch_sum.kl;
      users_seen += batch.size();
      if (debug_csv.is_open()) {
        for (std::size_t i = 0; i < batch.size(); ++i) {
          debug_csv << epoch << ',' << batch[i] << ',' << per_user[i].positive << ','
                    << per_user[i].negative << ',' << per_user[i].kl << ','
                    << per_user[i].total << '\n';
        }
      }
    }
    log.mean_loss /= static_cast<double>(users_seen);
    log.mean_positive /= static_cast<double>(users_seen);
    log.mean_negative /= static_cast<double>(users_seen);
    log.mean_kl /= static_cast<double>(users_seen);

    if (has_validation && epoch % cfg.eval_every == 0) {
      const auto report = evaluate_ranking(state.dec, state.enc, graph.subgraphs, val_held_out,
                                           nullptr, cfg.k_cut, 1.0, cfg.threads);
      log.val_ndcg = report.mean_ndcg;
      result.val_users = report.evaluated_users;
      if (report.mean_ndcg > best_metric) {
        best_metric = report.mean_ndcg;
        result.best = snapshot(state, cfg, epoch, best_metric);
        epochs_since_best = 0;
      } else {
        epochs_since_best += cfg.eval_every;
      }
    }

    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(log);

    if (has_validation && epochs_since_best >= cfg.patience) {
      result.stopped_early = true;
      break;
    }
  }

  const int final_epoch = result.log.empty() ? start_epoch : result.log.back().epoch;
  result.last = snapshot(state, cfg, final_epoch, best_metric);
  if (!has_validation) result.best = result.last;
  return result;
}

}  // namespace sgrec
