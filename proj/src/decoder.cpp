// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#include "sgrec/decoder.hpp"

#include <algorithm>
#include <cmath>

#include "sgrec/errors.hpp"

namespace sgrec {

namespace {

// Hidden layers use tanh; the last layer of each network is linear.
inline bool layer_is_linear(int layer /*1-based*/, int total) { return layer == total; }

void apply_tanh(double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = std::tanh(x[i]);
}

}  // namespace

MaskSupport MaskSupport::from_knn(const KnnIndex& knn) {
  MaskSupport mask;
  mask.size = knn.num_items();
  mask.row_ptr.assign(static_cast<std::size_t>(mask.size) + 1, 0);
  for (int v = 0; v < mask.size; ++v) {
    mask.row_ptr[v + 1] = mask.row_ptr[v] + 1 + static_cast<std::int64_t>(knn.neighbors[v].size());
  }
  mask.col.reserve(static_cast<std::size_t>(mask.row_ptr.back()));
  for (int v = 0; v < mask.size; ++v) {
    std::vector<std::int32_t> row = knn.neighbors[v];
    row.push_back(v);  // 0-NN: the item itself
    std::sort(row.begin(), row.end());
    mask.col.insert(mask.col.end(), row.begin(), row.end());
  }
  return mask;
}

DecoderParams DecoderParams::init(int orders, int items, int latent, int dims, int item_layers,
                                  int prox_layers, const KnnIndex& knn, Rng& rng) {
  DecoderParams p;
  p.gamma = Mat(static_cast<std::size_t>(orders), static_cast<std::size_t>(items));

  p.item.items = items;
  p.item.latent = latent;
  p.item.dims = dims;
  p.item.layers = item_layers;
  p.item.mask = MaskSupport::from_knn(knn);
  p.item.w1.resize(static_cast<std::size_t>(dims));
  for (auto& w : p.item.w1) {
    w = Mat(static_cast<std::size_t>(items), static_cast<std::size_t>(latent));
    for (auto& x : w.data()) x = rng.next_xavier(latent, items);
  }
  p.item.b1.assign(static_cast<std::size_t>(items), 0.0);
  const std::size_t support = static_cast<std::size_t>(p.item.mask.nnz());
  const std::size_t fan = support == 0 ? 1 : support / static_cast<std::size_t>(items);
  for (int m = 2; m <= item_layers; ++m) {
    std::vector<Vec> per_dim(static_cast<std::size_t>(dims), Vec(support));
    for (auto& w : per_dim) {
      for (auto& x : w) x = rng.next_xavier(fan, fan);
    }
    p.item.wm.push_back(std::move(per_dim));
    p.item.bm.emplace_back(static_cast<std::size_t>(items), 0.0);
  }

  p.prox.orders = orders;
  p.prox.latent = latent;
  p.prox.dims = dims;
  p.prox.layers = prox_layers;
  p.prox.w1.resize(static_cast<std::size_t>(dims));
  for (auto& w : p.prox.w1) {
    w = Mat(static_cast<std::size_t>(orders), static_cast<std::size_t>(latent));
    for (auto& x : w.data()) x = rng.next_xavier(latent, orders);
  }
  p.prox.b1.assign(static_cast<std::size_t>(orders), 0.0);
  for (int r = 2; r <= prox_layers; ++r) {
    std::vector<Mat> per_dim(static_cast<std::size_t>(dims));
    for (auto& w : per_dim) {
      w = Mat(static_cast<std::size_t>(orders), static_cast<std::size_t>(orders));
      for (auto& x : w.data()) x = rng.next_xavier(orders, orders);
    }
    p.prox.wr.push_back(std::move(per_dim));
    p.prox.br.emplace_back(static_cast<std::size_t>(orders), 0.0);
  }
  return p;
}

DecoderParams DecoderParams::zeros_like(const DecoderParams& p) {
  DecoderParams z = p;
  visit_decoder_tensors(z, [](const std::string&, Vec& v) { std::fill(v.begin(), v.end(), 0.0); });
  return z;
}

double DecoderForward::psi(int order, int item) const {
  const Mat& s = item_acts.back();
  const Mat& g = prox_acts.back();
  double acc = 0.0;
  for (std::size_t d = 0; d < s.rows(); ++d) acc += g(d, order) * s(d, item);
  return acc;
}

DecoderForward decoder_forward(const DecoderParams& p, const Vec& z) {
  if (static_cast<int>(z.size()) != p.item.latent) {
    throw ShapeError("decoder_forward: latent vector has dimension " +
                     std::to_string(z.size()) + ", expected " + std::to_string(p.item.latent));
  }
  DecoderForward fwd;
  const std::size_t dims = static_cast<std::size_t>(p.item.dims);
  const std::size_t items = static_cast<std::size_t>(p.item.items);
  const std::size_t orders = static_cast<std::size_t>(p.prox.orders);

  // Item network.
  fwd.item_acts.reserve(static_cast<std::size_t>(p.item.layers));
  {
    Mat act(dims, items);
    for (std::size_t d = 0; d < dims; ++d) {
      double* out = act.row(d);
      const Mat& w = p.item.w1[d];
      for (std::size_t v = 0; v < items; ++v) {
        out[v] = kernels::dot(w.row(v), z.data(), z.size()) + p.item.b1[v];
      }
      if (!layer_is_linear(1, p.item.layers)) apply_tanh(out, items);
    }
    fwd.item_acts.push_back(std::move(act));
  }
  for (int m = 2; m <= p.item.layers; ++m) {
    const Mat& prev = fwd.item_acts.back();
    Mat act(dims, items);
    const MaskSupport& mask = p.item.mask;
    for (std::size_t d = 0; d < dims; ++d) {
      const Vec& w = p.item.wm[m - 2][d];
      const Vec& b = p.item.bm[m - 2];
      const double* in = prev.row(d);
      double* out = act.row(d);
      for (std::size_t v = 0; v < items; ++v) {
        double acc = b[v];
        for (std::int64_t e = mask.row_ptr[v]; e < mask.row_ptr[v + 1]; ++e) {
          acc += w[e] * in[mask.col[e]];
        }
        out[v] = acc;
      }
      if (!layer_is_linear(m, p.item.layers)) apply_tanh(out, items);
    }
    fwd.item_acts.push_back(std::move(act));
  }

  // Proximity network.
  fwd.prox_acts.reserve(static_cast<std::size_t>(p.prox.layers));
  {
    Mat act(dims, orders);
    for (std::size_t d = 0; d < dims; ++d) {
      double* out = act.row(d);
      const Mat& w = p.prox.w1[d];
      for (std::size_t k = 0; k < orders; ++k) {
        out[k] = kernels::dot(w.row(k), z.data(), z.size()) + p.prox.b1[k];
      }
      if (!layer_is_linear(1, p.prox.layers)) apply_tanh(out, orders);
    }
    fwd.prox_acts.push_back(std::move(act));
  }
  for (int r = 2; r <= p.prox.layers; ++r) {
    const Mat& prev = fwd.prox_acts.back();
    Mat act(dims, orders);
    for (std::size_t d = 0; d < dims; ++d) {
      const Mat& w = p.prox.wr[r - 2][d];
      const Vec& b = p.prox.br[r - 2];
      const double* in = prev.row(d);
      double* out = act.row(d);
      for (std::size_t k = 0; k < orders; ++k) {
        out[k] = kernels::dot(w.row(k), in, orders) + b[k];
      }
      if (!layer_is_linear(r, p.prox.layers)) apply_tanh(out, orders);
    }
    fwd.prox_acts.push_back(std::move(act));
  }
  return fwd;
}

Mat item_embeddings(const DecoderParams& p, const Vec& z) {
  const DecoderForward fwd = decoder_forward(p, z);
  const Mat& s = fwd.item_embeddings();
  Mat out(s.cols(), s.rows());  // items x dims
  for (std::size_t d = 0; d < s.rows(); ++d) {
    for (std::size_t v = 0; v < s.cols(); ++v) out(v, d) = s(d, v);
  }
  return out;
}

Mat proximity_embeddings(const DecoderParams& p, const Vec& z) {
  const DecoderForward fwd = decoder_forward(p, z);
  const Mat& g = fwd.prox_embeddings();
  Mat out(g.cols(), g.rows());  // orders x dims
  for (std::size_t d = 0; d < g.rows(); ++d) {
    for (std::size_t k = 0; k < g.cols(); ++k) out(k, d) = g(d, k);
  }
  return out;
}

Mat bernoulli_params(const DecoderParams& p, const Vec& z) {
  const DecoderForward fwd = decoder_forward(p, z);
  Mat f(static_cast<std::size_t>(p.orders()), static_cast<std::size_t>(p.items()));
  for (int k = 0; k < p.orders(); ++k) {
    for (int v = 0; v < p.items(); ++v) {
      const double logit = p.gamma(k, v) + fwd.psi(k, v);
      if (!std::isfinite(logit)) {
        throw NumericError("non-finite Bernoulli logit at order " + std::to_string(k + 1) +
                           ", item " + std::to_string(v));
      }
      f(k, v) = sigmoid(logit);
    }
  }
  return f;
}

double log_likelihood_full(const DecoderParams& p, const Vec& z, const UserSubgraph& a) {
  if (a.orders() != p.orders() || a.num_items != p.items()) {
    throw ShapeError("log_likelihood_full: subgraph shape does not match decoder");
  }
  const DecoderForward fwd = decoder_forward(p, z);
  double ll = 0.0;
  for (int k = 0; k < p.orders(); ++k) {
    const auto& ones = a.ones[k];
    std::size_t next = 0;
    for (int v = 0; v < p.items(); ++v) {
      const double logit = p.gamma(k, v) + fwd.psi(k, v);
      if (next < ones.size() && ones[next] == v) {
        ll += log_sigmoid(logit);
        ++next;
      } else {
        ll += log_sigmoid(-logit);
      }
    }
  }
  return ll;
}

Vec decoder_backward(const DecoderParams& p, const Vec& z, const DecoderForward& fwd,
                     const std::vector<LogitGrad>& seeds, DecoderParams& grads) {
  const std::size_t dims = static_cast<std::size_t>(p.item.dims);
  const std::size_t items = static_cast<std::size_t>(p.item.items);
  const std::size_t orders = static_cast<std::size_t>(p.prox.orders);

  // Seed the embedding gradients: psi_kv = sum_d g_dk * s_dv.
  Mat ds(dims, items);  // d(loss)/dS at the top layer
  Mat dg(dims, orders);
  const Mat& s_top = fwd.item_embeddings();
  const Mat& g_top = fwd.prox_embeddings();
  for (const auto& seed : seeds) {
    grads.gamma(seed.order, seed.item) += seed.coef;
    for (std::size_t d = 0; d < dims; ++d) {
      ds(d, seed.item) += seed.coef * g_top(d, seed.order);
      dg(d, seed.order) += seed.coef * s_top(d, seed.item);
    }
  }

  Vec dz(z.size(), 0.0);

  // Item network backward.
  for (int m = p.item.layers; m >= 2; --m) {
    const Mat& act = fwd.item_acts[m - 1];
    const Mat& prev = fwd.item_acts[m - 2];
    const MaskSupport& mask = p.item.mask;
    Mat dprev(dims, items);
    Vec& db = grads.item.bm[m - 2];
    for (std::size_t d = 0; d < dims; ++d) {
      const double* a = act.row(d);
      const double* in = prev.row(d);
      double* dout = ds.row(d);
      double* din = dprev.row(d);
      const Vec& w = p.item.wm[m - 2][d];
      Vec& dw = grads.item.wm[m - 2][d];
      const bool linear = layer_is_linear(m, p.item.layers);
      for (std::size_t v = 0; v < items; ++v) {
        double da = dout[v];
        if (da == 0.0) continue;
        if (!linear) da *= 1.0 - a[v] * a[v];
        db[v] += da;
        for (std::int64_t e = mask.row_ptr[v]; e < mask.row_ptr[v + 1]; ++e) {
          dw[e] += da * in[mask.col[e]];
          din[mask.col[e]] += w[e] * da;
        }
      }
    }
    ds = std::move(dprev);
  }
  {
    const Mat& act = fwd.item_acts[0];
    const bool linear = layer_is_linear(1, p.item.layers);
    for (std::size_t d = 0; d < dims; ++d) {
      const double* a = act.row(d);
      double* dout = ds.row(d);
      const Mat& w = p.item.w1[d];
      Mat& dw = grads.item.w1[d];
      for (std::size_t v = 0; v < items; ++v) {
        double da = dout[v];
        if (da == 0.0) continue;
        if (!linear) da *= 1.0 - a[v] * a[v];
        grads.item.b1[v] += da;
        kernels::axpy(dw.row(v), da, z.data(), z.size());
        kernels::axpy(dz.data(), da, w.row(v), z.size());
      }
    }
  }

  // Proximity network backward.
  for (int r = p.prox.layers; r >= 2; --r) {
    const Mat& act = fwd.prox_acts[r - 1];
    const Mat& prev = fwd.prox_acts[r - 2];
    Mat dprev(dims, orders);
    Vec& db = grads.prox.br[r - 2];
    for (std::size_t d = 0; d < dims; ++d) {
      const double* a = act.row(d);
      const double* in = prev.row(d);
      double* dout = dg.row(d);
      double* din = dprev.row(d);
      const Mat& w = p.prox.wr[r - 2][d];
      Mat& dw = grads.prox.wr[r - 2][d];
      const bool linear = layer_is_linear(r, p.prox.layers);
      for (std::size_t k = 0; k < orders; ++k) {
        double da = dout[k];
        if (da == 0.0) continue;
        if (!linear) da *= 1.0 - a[k] * a[k];
        db[k] += da;
        kernels::axpy(dw.row(k), da, in, orders);
        kernels::axpy(din, da, w.row(k), orders);
      }
    }
    dg = std::move(dprev);
  }
  {
    const Mat& act = fwd.prox_acts[0];
    const bool linear = layer_is_linear(1, p.prox.layers);
    for (std::size_t d = 0; d < dims; ++d) {
      const double* a = act.row(d);
      double* dout = dg.row(d);
      const Mat& w = p.prox.w1[d];
      Mat& dw = grads.prox.w1[d];
      for (std::size_t k = 0; k < orders; ++k) {
        double da = dout[k];
        if (da == 0.0) continue;
        if (!linear) da *= 1.0 - a[k] * a[k];
        grads.prox.b1[k] += da;
        kernels::axpy(dw.row(k), da, z.data(), z.size());
        kernels::axpy(dz.data(), da, w.row(k), z.size());
      }
    }
  }

  return dz;
}

}  // namespace sgrec
