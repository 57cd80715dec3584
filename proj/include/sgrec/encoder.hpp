// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sgrec/graph.hpp"
#include "sgrec/mat.hpp"
#include "sgrec/rng.hpp"

namespace sgrec {

/// Inference network q(z | A): tanh feed-forward over the flattened subgraph
/// with two linear heads (mean and log-variance). Layer 1 is stored
/// input-major (input x hidden) so a sparse binary subgraph costs one axpy
/// per set cell. The log-variance head is clamped to [-10, 10] before
/// exponentiation.
struct EncoderParams {
  static constexpr double kLogVarClamp = 10.0;

  int input = 0, hidden = 0, layers = 0, latent = 0;
  double dropout = 0.0;
  std::vector<Mat> w;  // [0]: input x hidden (input-major); [l>=1]: hidden x hidden
  std::vector<Vec> b;  // [l] hidden
  Mat w_mu, w_logvar;  // latent x hidden
  Vec b_mu, b_logvar;  // latent

  static EncoderParams init(int input, int hidden, int layers, int latent, double dropout,
                            Rng& rng);
  static EncoderParams zeros_like(const EncoderParams& p);
};

/// Names follow the checkpoint convention: enc.W.<l>, enc.b.<l> (1-based),
/// enc.mu.W, enc.mu.b, enc.logvar.W, enc.logvar.b.
template <typename Params, typename Fn>
void visit_encoder_tensors(Params& p, Fn&& fn) {
  for (int l = 0; l < p.layers; ++l) {
    fn("enc.W." + std::to_string(l + 1), p.w[l].data());
    fn("enc.b." + std::to_string(l + 1), p.b[l]);
  }
  fn(std::string("enc.mu.W"), p.w_mu.data());
  fn(std::string("enc.mu.b"), p.b_mu);
  fn(std::string("enc.logvar.W"), p.w_logvar.data());
  fn(std::string("enc.logvar.b"), p.b_logvar);
}

struct GaussianPosterior {
  Vec mu;
  Vec logvar;  // already clamped

  Vec sigma() const;
};

/// Forward cache for the backward pass.
struct EncoderForward {
  std::vector<std::int32_t> input_cells;  // flattened indices of the surviving ones
  std::vector<double> input_values;       // their post-dropout values
  std::vector<Vec> acts;                  // hidden activations, post-tanh
  Vec logvar_raw;                         // pre-clamp head output
  GaussianPosterior post;
};

/// With training=true and a dropout rng, input cells are zeroed with the
/// configured rate and survivors rescaled by 1/(1-rate); otherwise the pass
/// is deterministic.
EncoderForward encode(const EncoderParams& p, const UserSubgraph& a, bool training,
                      Rng* dropout_rng);

/// z = mu + eps (.) sigma
Vec reparameterize(const GaussianPosterior& post, const Vec& eps);

/// Closed-form KL(N(mu, diag sigma^2) || N(0, I)); 0 iff mu = 0, sigma = 1.
double kl_to_standard_normal(const GaussianPosterior& post);

/// Accumulates gradients of a loss with given d/dmu and d/dlogvar into
/// `grads` (caller-zeroed, same shapes). Cells clamped in the forward pass
/// receive zero log-variance gradient.
void encoder_backward(const EncoderParams& p, const EncoderForward& fwd, const Vec& dmu,
                      const Vec& dlogvar, EncoderParams& grads);

}  // namespace sgrec
