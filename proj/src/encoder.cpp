// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#include "sgrec/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "sgrec/errors.hpp"

namespace sgrec {

EncoderParams EncoderParams::init(int input, int hidden, int layers, int latent, double dropout,
                                  Rng& rng) {
  EncoderParams p;
  p.input = input;
  p.hidden = hidden;
  p.layers = layers;
  p.latent = latent;
  p.dropout = dropout;
  p.w.resize(static_cast<std::size_t>(layers));
  p.b.resize(static_cast<std::size_t>(layers));
  p.w[0] = Mat(static_cast<std::size_t>(input), static_cast<std::size_t>(hidden));
  for (auto& x : p.w[0].data()) x = rng.next_xavier(input, hidden);
  p.b[0].assign(static_cast<std::size_t>(hidden), 0.0);
  for (int l = 1; l < layers; ++l) {
    p.w[l] = Mat(static_cast<std::size_t>(hidden), static_cast<std::size_t>(hidden));
    for (auto& x : p.w[l].data()) x = rng.next_xavier(hidden, hidden);
    p.b[l].assign(static_cast<std::size_t>(hidden), 0.0);
  }
  p.w_mu = Mat(static_cast<std::size_t>(latent), static_cast<std::size_t>(hidden));
  for (auto& x : p.w_mu.data()) x = rng.next_xavier(hidden, latent);
  p.b_mu.assign(static_cast<std::size_t>(latent), 0.0);
  p.w_logvar = Mat(static_cast<std::size_t>(latent), static_cast<std::size_t>(hidden));
  for (auto& x : p.w_logvar.data()) x = rng.next_xavier(hidden, latent);
  p.b_logvar.assign(static_cast<std::size_t>(latent), 0.0);
  return p;
}

EncoderParams EncoderParams::zeros_like(const EncoderParams& p) {
  EncoderParams z = p;
  visit_encoder_tensors(z, [](const std::string&, Vec& v) { std::fill(v.begin(), v.end(), 0.0); });
  return z;
}

Vec GaussianPosterior::sigma() const {
  Vec s(logvar.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::exp(0.5 * logvar[i]);
  return s;
}

EncoderForward encode(const EncoderParams& p, const UserSubgraph& a, bool training,
                      Rng* dropout_rng) {
  const int flat = a.orders() * a.num_items;
  if (flat != p.input) {
    throw ShapeError("encode: flattened subgraph has size " + std::to_string(flat) +
                     ", encoder expects " + std::to_string(p.input));
  }

  EncoderForward fwd;
  const bool drop = training && p.dropout > 0.0 && dropout_rng != nullptr;
  const double keep_scale = drop ? 1.0 / (1.0 - p.dropout) : 1.0;
  for (int k = 0; k < a.orders(); ++k) {
    for (const std::int32_t v : a.ones[k]) {
      if (drop && dropout_rng->next_double() < p.dropout) continue;
      fwd.input_cells.push_back(static_cast<std::int32_t>(k) * a.num_items + v);
      fwd.input_values.push_back(keep_scale);
    }
  }

  // Hidden stack: the sparse first layer, then dense tanh layers.
  Vec h = p.b[0];
  for (std::size_t i = 0; i < fwd.input_cells.size(); ++i) {
    kernels::axpy(h.data(), fwd.input_values[i], p.w[0].row(fwd.input_cells[i]), h.size());
  }
  for (auto& x : h) x = std::tanh(x);
  fwd.acts.push_back(std::move(h));
  for (int l = 1; l < p.layers; ++l) {
    Vec next(static_cast<std::size_t>(p.hidden));
    matvec(p.w[l], fwd.acts.back().data(), next.data());
    for (std::size_t i = 0; i < next.size(); ++i) next[i] = std::tanh(next[i] + p.b[l][i]);
    fwd.acts.push_back(std::move(next));
  }

  const Vec& top = fwd.acts.back();
  fwd.post.mu.resize(static_cast<std::size_t>(p.latent));
  fwd.logvar_raw.resize(static_cast<std::size_t>(p.latent));
  matvec(p.w_mu, top.data(), fwd.post.mu.data());
  matvec(p.w_logvar, top.data(), fwd.logvar_raw.data());
  fwd.post.logvar.resize(static_cast<std::size_t>(p.latent));
  for (int i = 0; i < p.latent; ++i) {
    fwd.post.mu[i] += p.b_mu[i];
    fwd.logvar_raw[i] += p.b_logvar[i];
    fwd.post.logvar[i] = std::clamp(fwd.logvar_raw[i], -EncoderParams::kLogVarClamp,
                                    EncoderParams::kLogVarClamp);
  }
  return fwd;
}

Vec reparameterize(const GaussianPosterior& post, const Vec& eps) {
  if (eps.size() != post.mu.size()) {
    throw ShapeError("reparameterize: eps has dimension " + std::to_string(eps.size()) +
                     ", expected " + std::to_string(post.mu.size()));
  }
  Vec z(post.mu.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = post.mu[i] + eps[i] * std::exp(0.5 * post.logvar[i]);
  }
  return z;
}

double kl_to_standard_normal(const GaussianPosterior& post) {
  double kl = 0.0;
  for (std::size_t i = 0; i < post.mu.size(); ++i) {
    const double var = std::exp(post.logvar[i]);
    if (!(var > 0.0)) throw NumericError("kl_to_standard_normal: non-positive variance");
    kl += post.mu[i] * post.mu[i] + var - 1.0 - post.logvar[i];
  }
  return 0.5 * kl;
}

void encoder_backward(const EncoderParams& p, const EncoderForward& fwd, const Vec& dmu,
                      const Vec& dlogvar, EncoderParams& grads) {
  const Vec& top = fwd.acts.back();
  Vec dh(top.size(), 0.0);
  for (int i = 0; i < p.latent; ++i) {
    kernels::axpy(grads.w_mu.row(i), dmu[i], top.data(), top.size());
    grads.b_mu[i] += dmu[i];
    kernels::axpy(dh.data(), dmu[i], p.w_mu.row(i), top.size());
    // Hard clamp: no gradient outside the window.
    const double dlv = std::abs(fwd.logvar_raw[i]) <= EncoderParams::kLogVarClamp
                           ? dlogvar[i]
                           : 0.0;
    if (dlv != 0.0) {
      kernels::axpy(grads.w_logvar.row(i), dlv, top.data(), top.size());
      grads.b_logvar[i] += dlv;
      kernels::axpy(dh.data(), dlv, p.w_logvar.row(i), top.size());
    }
  }

  for (int l = p.layers - 1; l >= 1; --l) {
    const Vec& act = fwd.acts[l];
    const Vec& prev = fwd.acts[l - 1];
    Vec dprev(prev.size(), 0.0);
    for (std::size_t i = 0; i < act.size(); ++i) {
      const double da = dh[i] * (1.0 - act[i] * act[i]);
      if (da == 0.0) continue;
      grads.b[l][i] += da;
      kernels::axpy(grads.w[l].row(i), da, prev.data(), prev.size());
      kernels::axpy(dprev.data(), da, p.w[l].row(i), prev.size());
    }
    dh = std::move(dprev);
  }

  const Vec& act0 = fwd.acts[0];
  Vec da0(act0.size());
  for (std::size_t i = 0; i < act0.size(); ++i) {
    da0[i] = dh[i] * (1.0 - act0[i] * act0[i]);
    grads.b[0][i] += da0[i];
  }
  for (std::size_t i = 0; i < fwd.input_cells.size(); ++i) {
    kernels::axpy(grads.w[0].row(fwd.input_cells[i]), fwd.input_values[i], da0.data(),
                  da0.size());
  }
}

}  // namespace sgrec
