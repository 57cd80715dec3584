// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#pragma once

#include <string>
#include <vector>

#include "sgrec/artifacts.hpp"
#include "sgrec/checkpoint.hpp"
#include "sgrec/config.hpp"
#include "sgrec/ingest.hpp"
#include "sgrec/objective.hpp"

namespace sgrec {

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
  double mean_positive = 0.0;
  double mean_negative = 0.0;
  double mean_kl = 0.0;
  double val_ndcg = -1.0;  // -1 when this epoch was not evaluated
  double seconds = 0.0;
};

struct TrainResult {
  Checkpoint best;   // the checkpoint with the highest validation NDCG
  Checkpoint last;   // state after the final epoch
  std::vector<EpochLog> log;
  int val_users = 0;          // users contributing to the validation metric
  bool stopped_early = false;
  bool aborted_non_finite = false;  // training hit a non-finite loss; best/last hold the last good state
};

/// Mini-batch training: per epoch, a seeded shuffle of all users is cut into
/// batches; each user contributes one reparameterized sample, a fresh
/// stratified negative plan, and analytic gradients; the batch mean (after
/// optional global-norm clipping) feeds one Adam step (beta1 0.9, beta2
/// 0.999, eps 1e-8, no weight decay). Every eval_every epochs validation
/// NDCG@k_cut is computed from the deterministic encoder mean with
/// first-order scores; the best checkpoint is kept and training stops after
/// `patience` epochs without improvement.
///
/// All randomness derives from (cfg.seed, epoch, user), so a fixed seed gives
/// bit-identical trajectories in serial mode and thread-count-independent
/// draws in parallel mode. Passing a resume checkpoint continues from its
/// epoch counter with its parameters and optimizer moments.
TrainResult train(const InteractionDataset& ds, const GraphArtifacts& graph,
                  const RunConfig& cfg, const Checkpoint* resume = nullptr);

/// One optimization step over an explicit user batch; exposed for tests.
/// Returns the summed LossBreakdown over the batch. Gradients are reduced in
/// user-index order, scaled by 1/batch, clipped, then applied.
struct TrainerState {
  DecoderParams dec, adam_m_dec, adam_v_dec;
  EncoderParams enc, adam_m_enc, adam_v_enc;
  int adam_step = 0;
};

TrainerState init_trainer_state(const InteractionDataset& ds, const GraphArtifacts& graph,
                                const RunConfig& cfg);

LossBreakdown train_batch(TrainerState& state, const GraphArtifacts& graph,
                          const std::vector<int>& batch_users, int epoch, const RunConfig& cfg,
                          std::vector<LossBreakdown>* per_user = nullptr);

}  // namespace sgrec
