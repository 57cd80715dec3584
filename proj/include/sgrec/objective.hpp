// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <vector>

#include "sgrec/decoder.hpp"
#include "sgrec/encoder.hpp"
#include "sgrec/graph.hpp"
#include "sgrec/rng.hpp"

namespace sgrec {

/// Per-stratum sample sizes: n = min(N, cap). A per-stratum override list may
/// shadow the default; entries <= -1 mean "use the default".
struct NegativePolicy {
  int default_cap = 50;
  std::vector<int> per_stratum;

  int cap(int stratum) const {
    if (stratum < static_cast<int>(per_stratum.size()) && per_stratum[stratum] >= 0) {
      return per_stratum[stratum];
    }
    return default_cap;
  }
};

/// Negative items drawn for one (order, stratum) cell, with the inverse
/// sampling weight N/n that keeps the estimator unbiased.
struct SampledStratum {
  int order = 0;
  int stratum = 0;
  std::size_t population = 0;  // N_{u,t,k}
  double weight = 1.0;         // N/n, >= 1
  std::vector<std::int32_t> items;
};

struct SampledBatchPlan {
  std::vector<SampledStratum> strata;  // cells with n > 0 only
  int clamp_warnings = 0;              // policy requested more than the stratum held
};

/// Uniform without-replacement draws within each stratum; deterministic for a
/// fixed rng state. Requests beyond a stratum's population are clamped to the
/// population (weight becomes 1) and counted in clamp_warnings.
SampledBatchPlan draw_negatives(const UserStrata& strata, const NegativePolicy& policy, Rng& rng);

/// A plan that takes every zero entry: the estimator reduces to the exact
/// log-likelihood.
SampledBatchPlan exhaustive_plan(const UserStrata& strata);

struct LossBreakdown {
  double positive = 0.0;   // l_{u,1}
  double negative = 0.0;   // estimated l_{u,0}
  double kl = 0.0;
  double beta = 0.0;
  double total = 0.0;      // -(positive + negative) + beta * kl
};

/// The stratified estimator for a given latent vector:
///   l_hat = sum_{ones} log F + sum_{k,t} (N/n) sum_{sampled} log(1 - F),
/// both in stable log-sigmoid form. Returns (l1, l0_hat).
std::pair<double, double> estimated_log_likelihood(const DecoderParams& dec,
                                                   const DecoderForward& fwd,
                                                   const UserSubgraph& a,
                                                   const SampledBatchPlan& plan);

/// Loss (and optionally gradients) of one user under fixed noise:
///   total = -(1/S) sum_s l_hat(z_s) + beta * KL(q || N(0,I)),
/// with z_s = mu + eps_s (.) sigma. Encoding happens once; pass a dropout rng
/// to train with input dropout, nullptr for the deterministic path. When the
/// grad pointers are null only the loss is computed — that path is what the
/// finite-difference tests probe. Gradients accumulate into caller-zeroed
/// containers. Throws NumericError on a non-finite loss.
LossBreakdown loss_and_gradients(const DecoderParams& dec, const EncoderParams& enc,
                                 const UserSubgraph& a, const std::vector<Vec>& eps_samples,
                                 const SampledBatchPlan& plan, double beta, Rng* dropout_rng,
                                 DecoderParams* dec_grads, EncoderParams* enc_grads);

}  // namespace sgrec
