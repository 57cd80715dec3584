// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "sgrec/kernels.hpp"
#include "sgrec/rng.hpp"

using namespace sgrec;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = scale * (2.0 * rng.next_double() - 1.0);
  return v;
}

// Sizes chosen to hit empty, sub-lane, one-lane, unrolled-body and tail paths.
const std::size_t kSizes[] = {0, 1, 3, 4, 5, 8, 13, 64, 257, 4096};

}  // namespace

TEST_CASE("kernel dispatch reports a usable backend") {
  const auto& table = kernels::active();
  bool found = false;
  for (const auto* t : kernels::available()) found = found || t == &table;
  CHECK(found);
  CHECK(kernels::available()[0]->name == std::string("scalar"));
}

TEST_CASE("reduction kernels agree with the scalar reference") {
  Rng rng(7);
  for (const auto* backend : kernels::available()) {
    for (const std::size_t n : kSizes) {
      const auto a = random_vec(rng, n);
      const auto b = random_vec(rng, n);
      const double ref_dot = kernels::scalar::table.dot(a.data(), b.data(), n);
      const double ref_sum = kernels::scalar::table.sum(a.data(), n);
      const double ref_sq = kernels::scalar::table.sum_squares(a.data(), n);
      // Accumulation order differs between backends; bound the reassociation error.
      const double tol = 1e-13 * (1.0 + static_cast<double>(n));
      CHECK(std::abs(backend->dot(a.data(), b.data(), n) - ref_dot) <=
            tol * (1.0 + std::abs(ref_dot)));
      CHECK(std::abs(backend->sum(a.data(), n) - ref_sum) <= tol * (1.0 + std::abs(ref_sum)));
      CHECK(std::abs(backend->sum_squares(a.data(), n) - ref_sq) <=
            tol * (1.0 + std::abs(ref_sq)));
    }
  }
}

TEST_CASE("elementwise kernels are bitwise-identical across backends") {
  Rng rng(11);
  for (const auto* backend : kernels::available()) {
    for (const std::size_t n : kSizes) {
      const auto x = random_vec(rng, n);
      auto y_ref = random_vec(rng, n);
      auto y = y_ref;
      const double a = 0.37;

      kernels::scalar::table.axpy(y_ref.data(), a, x.data(), n);
      backend->axpy(y.data(), a, x.data(), n);
      CHECK(std::memcmp(y.data(), y_ref.data(), n * sizeof(double)) == 0);

      kernels::scalar::table.scale(y_ref.data(), a, n);
      backend->scale(y.data(), a, n);
      CHECK(std::memcmp(y.data(), y_ref.data(), n * sizeof(double)) == 0);

      kernels::scalar::table.add(y_ref.data(), x.data(), n);
      backend->add(y.data(), x.data(), n);
      CHECK(std::memcmp(y.data(), y_ref.data(), n * sizeof(double)) == 0);
    }
  }
}

TEST_CASE("adam_step is bitwise-identical across backends") {
  Rng rng(13);
  for (const auto* backend : kernels::available()) {
    for (const std::size_t n : kSizes) {
      auto p_ref = random_vec(rng, n);
      auto m_ref = random_vec(rng, n, 0.01);
      std::vector<double> v_ref(n);
      for (auto& x : v_ref) x = rng.next_double() * 0.01;
      const auto g = random_vec(rng, n);
      auto p = p_ref, m = m_ref, v = v_ref;

      const double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8;
      const double bias1 = 1.0 - std::pow(b1, 7), bias2 = 1.0 - std::pow(b2, 7);
      kernels::scalar::table.adam_step(p_ref.data(), m_ref.data(), v_ref.data(), g.data(), n,
                                       lr, b1, b2, eps, bias1, bias2);
      backend->adam_step(p.data(), m.data(), v.data(), g.data(), n, lr, b1, b2, eps, bias1,
                         bias2);
      CHECK(std::memcmp(p.data(), p_ref.data(), n * sizeof(double)) == 0);
      CHECK(std::memcmp(m.data(), m_ref.data(), n * sizeof(double)) == 0);
      CHECK(std::memcmp(v.data(), v_ref.data(), n * sizeof(double)) == 0);
    }
  }
}

TEST_CASE("adam_step matches a hand-computed first step") {
  // One parameter, g = 2, fresh moments, t = 1.
  double p = 1.0, m = 0.0, v = 0.0;
  const double g = 2.0, lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  kernels::adam_step(&p, &m, &v, &g, 1, lr, b1, b2, eps, 1.0 - b1, 1.0 - b2);
  // m = 0.2, mhat = 2; v = 0.004, vhat = 4; step = 0.1 * 2/(2+eps)
  CHECK(m == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(v == doctest::Approx(0.004).epsilon(1e-15));
  CHECK(p == doctest::Approx(1.0 - 0.1 * (2.0 / (2.0 + eps))).epsilon(1e-15));
}
