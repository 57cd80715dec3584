// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#include <doctest.h>

#include <cmath>
#include <string>

#include "sgrec/decoder.hpp"
#include "sgrec/errors.hpp"
#include "testutil.hpp"

using namespace sgrec;
using namespace sgrec::testutil;

namespace {

KnnIndex tiny_knn() {
  // 3 items, 2-NN(v) = the other two, in a fixed order.
  KnnIndex knn;
  knn.knn_size = 2;
  knn.neighbors = {{1, 2}, {0, 2}, {0, 1}};
  knn.similarities = {{0.5, 0.25}, {0.5, 0.2}, {0.25, 0.2}};
  return knn;
}

}  // namespace

TEST_CASE("mask support is self plus neighbors, sorted") {
  const auto mask = MaskSupport::from_knn(tiny_knn());
  CHECK(mask.size == 3);
  CHECK(mask.nnz() == 9);
  for (int v = 0; v < 3; ++v) {
    std::vector<std::int32_t> row(mask.col.begin() + mask.row_ptr[v],
                                  mask.col.begin() + mask.row_ptr[v + 1]);
    CHECK(row == std::vector<std::int32_t>{0, 1, 2});
  }
}

TEST_CASE("single linear layer with zero weights maps everything to zero") {
  Rng rng(61);
  DecoderParams p = DecoderParams::init(2, 3, 4, 2, 1, 1, tiny_knn(), rng);
  for (auto& w : p.item.w1) w.fill(0.0);
  const Mat s = item_embeddings(p, {1.0, -2.0, 3.0, 0.5});
  for (const double x : s.data()) CHECK(x == 0.0);
}

TEST_CASE("two-layer masked composition matches the hand formula") {
  Rng rng(67);
  DecoderParams p = DecoderParams::init(1, 3, 2, 1, 2, 1, tiny_knn(), rng);
  const Vec z = {0.3, -0.7};
  const Mat s = item_embeddings(p, z);

  // s_v^(1) = tanh(w1[v,:] z + b1[v]); s_0^(2) = w2[0,:] . s^(1) + b2[0].
  double s1[3];
  for (int v = 0; v < 3; ++v) {
    s1[v] = std::tanh(p.item.w1[0](v, 0) * z[0] + p.item.w1[0](v, 1) * z[1] + p.item.b1[v]);
  }
  const Vec& w2 = p.item.wm[0][0];  // row 0 support is {0,1,2}
  const double want = w2[0] * s1[0] + w2[1] * s1[1] + w2[2] * s1[2] + p.item.bm[0][0];
  CHECK(s(0, 0) == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("masked forward equals the dense-reference oracle") {
  Rng rng(71);
  for (int trial = 0; trial < 10; ++trial) {
    const auto t = make_tiny(rng, 4, 4 + static_cast<int>(rng.next_below(4)), 3, 2, 2, 2, 2);
    Vec z(3);
    for (auto& x : z) x = rng.next_normal();
    const DecoderForward fwd = decoder_forward(t.dec, z);
    const Mat want_s = dense_item_forward_oracle(t.dec, z);
    const Mat want_g = dense_prox_forward_oracle(t.dec, z);
    REQUIRE(fwd.item_embeddings().data().size() == want_s.data().size());
    for (std::size_t i = 0; i < want_s.data().size(); ++i) {
      CHECK(fwd.item_embeddings().data()[i] ==
            doctest::Approx(want_s.data()[i]).epsilon(1e-12));
    }
    for (std::size_t i = 0; i < want_g.data().size(); ++i) {
      CHECK(fwd.prox_embeddings().data()[i] ==
            doctest::Approx(want_g.data()[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("proximity embeddings read out a column under an identity-like setup") {
  Rng rng(73);
  DecoderParams p = DecoderParams::init(2, 3, 3, 2, 1, 1, tiny_knn(), rng);
  const Vec z = {1.0, 0.0, 0.0};  // e_1 picks the first column of each W
  const Mat g = proximity_embeddings(p, z);
  for (int k = 0; k < 2; ++k) {
    for (int d = 0; d < 2; ++d) {
      CHECK(g(k, d) == doctest::Approx(p.prox.w1[d](k, 0)).epsilon(1e-14));
    }
  }
}

TEST_CASE("zero decoder gives uniform Bernoulli parameters") {
  Rng rng(79);
  DecoderParams p = DecoderParams::init(2, 3, 4, 2, 2, 2, tiny_knn(), rng);
  p = DecoderParams::zeros_like(p);
  const Mat f = bernoulli_params(p, {0.1, 0.2, 0.3, 0.4});
  for (const double x : f.data()) CHECK(x == 0.5);
}

TEST_CASE("large baseline saturates the link") {
  Rng rng(83);
  DecoderParams p = DecoderParams::init(2, 3, 4, 2, 2, 2, tiny_knn(), rng);
  p = DecoderParams::zeros_like(p);
  p.gamma(0, 1) = 20.0;
  p.gamma(1, 2) = -20.0;
  const Mat f = bernoulli_params(p, Vec(4, 0.0));
  CHECK(std::abs(f(0, 1) - 1.0) < 1e-8);
  CHECK(std::abs(f(1, 2)) < 1e-8);
  for (const double x : f.data()) {
    CHECK(x > 0.0);
    CHECK(x < 1.0);
  }
}

TEST_CASE("psi equals the dot of the two embedding outputs") {
  Rng rng(89);
  const auto t = make_tiny(rng);
  Vec z(3);
  for (auto& x : z) x = rng.next_normal();
  const DecoderForward fwd = decoder_forward(t.dec, z);
  const Mat s = item_embeddings(t.dec, z);   // items x dims
  const Mat g = proximity_embeddings(t.dec, z);  // orders x dims
  for (int k = 0; k < 2; ++k) {
    for (int v = 0; v < t.dec.items(); ++v) {
      double dot = 0.0;
      for (int d = 0; d < 2; ++d) dot += g(k, d) * s(v, d);
      CHECK(fwd.psi(k, v) == doctest::Approx(dot).epsilon(1e-13));
    }
  }
}

TEST_CASE("full log-likelihood: uniform case and scalar-loop oracle") {
  Rng rng(97);
  const auto t = make_tiny(rng);
  const auto& a = t.subgraphs[0];

  DecoderParams zero = DecoderParams::zeros_like(t.dec);
  const double ll_uniform = log_likelihood_full(zero, Vec(3, 0.0), a);
  CHECK(ll_uniform ==
        doctest::Approx(2.0 * t.dec.items() * std::log(0.5)).epsilon(1e-13));

  Vec z(3);
  for (auto& x : z) x = rng.next_normal();
  const Mat f = bernoulli_params(t.dec, z);
  double want = 0.0;
  for (int k = 0; k < 2; ++k) {
    for (int v = 0; v < t.dec.items(); ++v) {
      const bool one = a.is_one(k, v);
      want += one ? std::log(f(k, v)) : std::log(1.0 - f(k, v));
    }
  }
  const double got = log_likelihood_full(t.dec, z, a);
  CHECK(got == doctest::Approx(want).epsilon(1e-10));
  CHECK(got <= 0.0);
}

TEST_CASE("near-perfect fit drives the log-likelihood toward zero") {
  Rng rng(101);
  DecoderParams p = DecoderParams::init(1, 3, 2, 1, 1, 1, tiny_knn(), rng);
  p = DecoderParams::zeros_like(p);
  UserSubgraph a;
  a.user = 0;
  a.num_items = 3;
  a.ones = {{0, 2}};
  p.gamma(0, 0) = 30.0;
  p.gamma(0, 1) = -30.0;
  p.gamma(0, 2) = 30.0;
  CHECK(std::abs(log_likelihood_full(p, Vec(2, 0.0), a)) < 1e-8);
}

TEST_CASE("raising gamma strictly raises F") {
  Rng rng(103);
  const auto t = make_tiny(rng);
  Vec z(3);
  for (auto& x : z) x = rng.next_normal();
  DecoderParams p = t.dec;
  const double before = bernoulli_params(p, z)(1, 2);
  p.gamma(1, 2) += 0.25;
  const double after = bernoulli_params(p, z)(1, 2);
  CHECK(after > before);
}

TEST_CASE("shape mismatches are rejected") {
  Rng rng(107);
  const auto t = make_tiny(rng);
  CHECK_THROWS_AS(decoder_forward(t.dec, Vec(7, 0.0)), ShapeError);
  UserSubgraph bad;
  bad.user = 0;
  bad.num_items = t.dec.items() + 1;
  bad.ones.resize(2);
  CHECK_THROWS_AS(log_likelihood_full(t.dec, Vec(3, 0.0), bad), ShapeError);
}
