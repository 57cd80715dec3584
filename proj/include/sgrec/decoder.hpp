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

/// Sparsity pattern of the masked item-network layers: row v's support is
/// {v} plus v's K nearest neighbours, columns sorted. All masked layers and
/// all embedding dimensions share the one pattern.
struct MaskSupport {
  int size = 0;
  std::vector<std::int64_t> row_ptr;
  std::vector<std::int32_t> col;

  std::int64_t nnz() const { return static_cast<std::int64_t>(col.size()); }
  static MaskSupport from_knn(const KnnIndex& knn);
};

/// Item network: maps a latent vector to one embedding per item. Layer 1 is
/// dense (items x latent); layers >= 2 convolve over the K-NN mask. One weight
/// set per embedding dimension d; biases are shared across d.
struct ItemNet {
  int items = 0, latent = 0, dims = 0, layers = 0;
  std::vector<Mat> w1;                 // [d] items x latent
  Vec b1;                              // items
  MaskSupport mask;
  std::vector<std::vector<Vec>> wm;    // [m-2][d] values on the mask support
  std::vector<Vec> bm;                 // [m-2] items
};

/// Proximity network: same recursion with order-sized layers, all dense.
struct ProxNet {
  int orders = 0, latent = 0, dims = 0, layers = 0;
  std::vector<Mat> w1;               // [d] orders x latent
  Vec b1;                            // orders
  std::vector<std::vector<Mat>> wr;  // [r-2][d] orders x orders
  std::vector<Vec> br;               // [r-2] orders
};

struct DecoderParams {
  Mat gamma;  // orders x items, the population baseline logits
  ItemNet item;
  ProxNet prox;

  int orders() const { return static_cast<int>(gamma.rows()); }
  int items() const { return static_cast<int>(gamma.cols()); }

  /// Xavier-initialized weights, zero gamma and biases. Draw order is fixed,
  /// so a given rng state yields one exact parameter set.
  static DecoderParams init(int orders, int items, int latent, int dims, int item_layers,
                            int prox_layers, const KnnIndex& knn, Rng& rng);

  /// Same shapes, all values zero; the gradient container.
  static DecoderParams zeros_like(const DecoderParams& p);

};

/// Enumerates every decoder tensor as (name, vector) in a fixed order. Names
/// follow the checkpoint convention: gamma, item.W.<d>.<m>, item.b.<m>,
/// prox.W.<d>.<r>, prox.b.<r> (1-based d and layer).
template <typename Params, typename Fn>
void visit_decoder_tensors(Params& p, Fn&& fn) {
  fn(std::string("gamma"), p.gamma.data());
  for (int d = 0; d < p.item.dims; ++d) {
    fn("item.W." + std::to_string(d + 1) + ".1", p.item.w1[d].data());
  }
  fn(std::string("item.b.1"), p.item.b1);
  for (int m = 2; m <= p.item.layers; ++m) {
    for (int d = 0; d < p.item.dims; ++d) {
      fn("item.W." + std::to_string(d + 1) + "." + std::to_string(m), p.item.wm[m - 2][d]);
    }
    fn("item.b." + std::to_string(m), p.item.bm[m - 2]);
  }
  for (int d = 0; d < p.prox.dims; ++d) {
    fn("prox.W." + std::to_string(d + 1) + ".1", p.prox.w1[d].data());
  }
  fn(std::string("prox.b.1"), p.prox.b1);
  for (int r = 2; r <= p.prox.layers; ++r) {
    for (int d = 0; d < p.prox.dims; ++d) {
      fn("prox.W." + std::to_string(d + 1) + "." + std::to_string(r), p.prox.wr[r - 2][d].data());
    }
    fn("prox.b." + std::to_string(r), p.prox.br[r - 2]);
  }
}

/// Per-user forward cache. Activations are stored dimension-major so each
/// dimension's item vector is contiguous: item_acts[m](d, v), prox_acts[r](d, k).
struct DecoderForward {
  std::vector<Mat> item_acts;  // layers entries, each dims x items
  std::vector<Mat> prox_acts;  // layers entries, each dims x orders

  const Mat& item_embeddings() const { return item_acts.back(); }  // S(z), dims x items
  const Mat& prox_embeddings() const { return prox_acts.back(); }  // G(z), dims x orders

  /// psi_kv(z) = g_k(z) . s_v(z)
  double psi(int order, int item) const;
};

/// Runs both per-dimension recursions. Hidden layers use tanh, the final
/// layer of each network is linear so the logit deviation is unbounded in
/// both signs.
DecoderForward decoder_forward(const DecoderParams& p, const Vec& z);

/// S(z) as a items x dims matrix (row per item), the public embedding view.
Mat item_embeddings(const DecoderParams& p, const Vec& z);
/// G(z) as an orders x dims matrix.
Mat proximity_embeddings(const DecoderParams& p, const Vec& z);

/// F_kv = sigmoid(gamma_kv + psi_kv(z)), orders x items, entries in (0,1).
/// Throws NumericError if any logit is non-finite.
Mat bernoulli_params(const DecoderParams& p, const Vec& z);

/// Exact log-likelihood sum over every (order, item) cell; the non-sampled
/// reference used by tests and small-data runs. Always <= 0.
double log_likelihood_full(const DecoderParams& p, const Vec& z, const UserSubgraph& a);

/// One cell of d(loss)/d(logit) to backpropagate.
struct LogitGrad {
  int order;
  std::int32_t item;
  double coef;
};

/// Accumulates parameter gradients for the seeded logit cells into `grads`
/// (same shapes as `p`, caller-zeroed) and returns d(loss)/dz. Masked layers
/// receive gradients on their support only, by construction.
Vec decoder_backward(const DecoderParams& p, const Vec& z, const DecoderForward& fwd,
                     const std::vector<LogitGrad>& seeds, DecoderParams& grads);

}  // namespace sgrec
