// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#include "sgrec/objective.hpp"

#include <cmath>

#include "sgrec/errors.hpp"

namespace sgrec {

SampledBatchPlan draw_negatives(const UserStrata& strata, const NegativePolicy& policy,
                                Rng& rng) {
  SampledBatchPlan plan;
  for (int k = 0; k < static_cast<int>(strata.by_order.size()); ++k) {
    for (int t = 0; t < static_cast<int>(strata.by_order[k].size()); ++t) {
      const auto& pool = strata.by_order[k][t];
      if (pool.empty()) continue;
      const int requested = policy.cap(t);
      if (requested <= 0) continue;
      SampledStratum cell;
      cell.order = k;
      cell.stratum = t;
      cell.population = pool.size();
      std::size_t n = static_cast<std::size_t>(requested);
      if (n > pool.size()) {
        n = pool.size();
        // The default cap is a min() policy; only an explicit per-stratum
        // request larger than the stratum is worth a warning.
        const bool explicit_request =
            t < static_cast<int>(policy.per_stratum.size()) && policy.per_stratum[t] >= 0;
        if (explicit_request) ++plan.clamp_warnings;
      }
      if (n == pool.size()) {
        cell.items = pool;  // exhaustive: no need to consume randomness
      } else {
        cell.items = rng.sample_without_replacement(pool, n);
      }
      cell.weight = static_cast<double>(cell.population) / static_cast<double>(cell.items.size());
      plan.strata.push_back(std::move(cell));
    }
  }
  return plan;
}

SampledBatchPlan exhaustive_plan(const UserStrata& strata) {
  SampledBatchPlan plan;
  for (int k = 0; k < static_cast<int>(strata.by_order.size()); ++k) {
    for (int t = 0; t < static_cast<int>(strata.by_order[k].size()); ++t) {
      const auto& pool = strata.by_order[k][t];
      if (pool.empty()) continue;
      SampledStratum cell;
      cell.order = k;
      cell.stratum = t;
      cell.population = pool.size();
      cell.weight = 1.0;
      cell.items = pool;
      plan.strata.push_back(std::move(cell));
    }
  }
  return plan;
}

std::pair<double, double> estimated_log_likelihood(const DecoderParams& dec,
                                                   const DecoderForward& fwd,
                                                   const UserSubgraph& a,
                                                   const SampledBatchPlan& plan) {
  double l1 = 0.0;
  for (int k = 0; k < a.orders(); ++k) {
    for (const std::int32_t v : a.ones[k]) {
      l1 += log_sigmoid(dec.gamma(k, v) + fwd.psi(k, v));
    }
  }
  double l0 = 0.0;
  for (const auto& cell : plan.strata) {
    double cell_sum = 0.0;
    for (const std::int32_t v : cell.items) {
      cell_sum += log_sigmoid(-(dec.gamma(cell.order, v) + fwd.psi(cell.order, v)));
    }
    l0 += cell.weight * cell_sum;
  }
  return {l1, l0};
}

LossBreakdown loss_and_gradients(const DecoderParams& dec, const EncoderParams& enc,
                                 const UserSubgraph& a, const std::vector<Vec>& eps_samples,
                                 const SampledBatchPlan& plan, double beta, Rng* dropout_rng,
                                 DecoderParams* dec_grads, EncoderParams* enc_grads) {
  if (eps_samples.empty()) throw ConfigError("loss_and_gradients: need at least one eps sample");
  if (beta < 0.0) throw ConfigError("loss_and_gradients: beta must be >= 0");
  const bool want_grads = dec_grads != nullptr || enc_grads != nullptr;
  if (want_grads && (dec_grads == nullptr || enc_grads == nullptr)) {
    throw ConfigError("loss_and_gradients: pass both gradient containers or neither");
  }

  const EncoderForward efwd = encode(enc, a, dropout_rng != nullptr, dropout_rng);
  const Vec sigma = efwd.post.sigma();
  const double inv_s = 1.0 / static_cast<double>(eps_samples.size());

  LossBreakdown out;
  out.beta = beta;
  out.kl = kl_to_standard_normal(efwd.post);

  Vec dmu(efwd.post.mu.size(), 0.0);
  Vec dlogvar(efwd.post.mu.size(), 0.0);

  for (const Vec& eps : eps_samples) {
    const Vec z = reparameterize(efwd.post, eps);
    const DecoderForward dfwd = decoder_forward(dec, z);
    const auto [l1, l0] = estimated_log_likelihood(dec, dfwd, a, plan);
    out.positive += inv_s * l1;
    out.negative += inv_s * l0;

    if (!want_grads) continue;

    // d(total)/d(logit) seeds. total carries -(1/S) * l_hat, so a one-cell
    // contributes -(1/S)(1 - F) and a sampled zero +(1/S) w F.
    std::vector<LogitGrad> seeds;
    seeds.reserve(a.total_ones() + plan.strata.size() * 8);
    for (int k = 0; k < a.orders(); ++k) {
      for (const std::int32_t v : a.ones[k]) {
        const double f = sigmoid(dec.gamma(k, v) + dfwd.psi(k, v));
        seeds.push_back({k, v, -inv_s * (1.0 - f)});
      }
    }
    for (const auto& cell : plan.strata) {
      for (const std::int32_t v : cell.items) {
        const double f = sigmoid(dec.gamma(cell.order, v) + dfwd.psi(cell.order, v));
        seeds.push_back({cell.order, v, inv_s * cell.weight * f});
      }
    }

    const Vec dz = decoder_backward(dec, z, dfwd, seeds, *dec_grads);
    // z = mu + eps (.) sigma with sigma = exp(logvar/2).
    for (std::size_t i = 0; i < dz.size(); ++i) {
      dmu[i] += dz[i];
      dlogvar[i] += dz[i] * eps[i] * 0.5 * sigma[i];
    }
  }

  out.total = -(out.positive + out.negative) + beta * out.kl;
  if (!std::isfinite(out.total)) {
    throw NumericError("non-finite loss (l1=" + std::to_string(out.positive) +
                       ", l0=" + std::to_string(out.negative) + ", kl=" + std::to_string(out.kl) +
                       ")");
  }

  if (want_grads) {
    // KL term: d/dmu = beta*mu, d/dlogvar = beta*(exp(logvar)-1)/2.
    for (std::size_t i = 0; i < dmu.size(); ++i) {
      dmu[i] += beta * efwd.post.mu[i];
      dlogvar[i] += beta * 0.5 * (std::exp(efwd.post.logvar[i]) - 1.0);
    }
    encoder_backward(enc, efwd, dmu, dlogvar, *enc_grads);
  }
  return out;
}

}  // namespace sgrec
