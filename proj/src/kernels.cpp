// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#include "sgrec/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>

namespace sgrec::kernels {

namespace scalar {
namespace {

double dot_impl(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_impl(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double sum_squares_impl(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

void axpy_impl(double* y, double a, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_impl(double* y, double a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] *= a;
}

void add_impl(double* y, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += x[i];
}

void adam_step_impl(double* p, double* m, double* v, const double* g, std::size_t n,
                    double lr, double beta1, double beta2, double eps, double bias1,
                    double bias2) {
  for (std::size_t i = 0; i < n; ++i) {
    const double gi = g[i];
    m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
    v[i] = beta2 * v[i] + (1.0 - beta2) * (gi * gi);
    const double mhat = m[i] / bias1;
    const double vhat = v[i] / bias2;
    p[i] = p[i] - lr * (mhat / (std::sqrt(vhat) + eps));
  }
}

}  // namespace

const FnTable table = {
    "scalar",   dot_impl,   sum_impl, sum_squares_impl,
    axpy_impl,  scale_impl, add_impl, adam_step_impl,
};

}  // namespace scalar

namespace {

const FnTable* select_backend() {
  const char* forced = std::getenv("SGREC_KERNELS");
#if defined(__x86_64__) || defined(_M_X64)
  if (forced != nullptr) {
    if (std::strcmp(forced, "avx2") == 0 && avx2::supported()) return &avx2::table;
    return &scalar::table;
  }
  if (avx2::supported()) return &avx2::table;
#else
  (void)forced;
#endif
  return &scalar::table;
}

}  // namespace

const FnTable& active() {
  static const FnTable* chosen = select_backend();
  return *chosen;
}

std::vector<const FnTable*> available() {
  std::vector<const FnTable*> out{&scalar::table};
#if defined(__x86_64__) || defined(_M_X64)
  if (avx2::supported()) out.push_back(&avx2::table);
#endif
  return out;
}

}  // namespace sgrec::kernels
