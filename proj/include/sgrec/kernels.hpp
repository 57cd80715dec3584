// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#pragma once

#include <cstddef>
#include <vector>

namespace sgrec::kernels {

/// Table of the double-precision inner-loop kernels the trainer spends its
/// time in. `scalar` is the reference semantics; vector backends must agree
/// bitwise for elementwise kernels and to ~1e-15 relative for reductions
/// (the accumulation order differs). See tests/test_kernels.cpp.
struct FnTable {
  const char* name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  double (*sum_squares)(const double* x, std::size_t n);
  // y[i] += a * x[i]
  void (*axpy)(double* y, double a, const double* x, std::size_t n);
  // y[i] *= a
  void (*scale)(double* y, double a, std::size_t n);
  // y[i] += x[i]
  void (*add)(double* y, const double* x, std::size_t n);
  // Adam moment + parameter update with bias corrections bias1 = 1-beta1^t,
  // bias2 = 1-beta2^t. Op order is part of the contract: backends must follow
  //   m = beta1*m + (1-beta1)*g
  //   v = beta2*v + (1-beta2)*g*g
  //   p -= lr * (m/bias1) / (sqrt(v/bias2) + eps)
  void (*adam_step)(double* p, double* m, double* v, const double* g, std::size_t n,
                    double lr, double beta1, double beta2, double eps, double bias1,
                    double bias2);
};

namespace scalar {
extern const FnTable table;
}

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
extern const FnTable table;
bool supported();
}  // namespace avx2
#endif

/// The backend selected for this process: the widest supported one, unless the
/// SGREC_KERNELS environment variable ("scalar" or "avx2") forces a choice.
const FnTable& active();

/// Every backend the running CPU can execute, scalar first.
std::vector<const FnTable*> available();

inline double dot(const double* a, const double* b, std::size_t n) {
  return active().dot(a, b, n);
}
inline double sum(const double* x, std::size_t n) { return active().sum(x, n); }
inline double sum_squares(const double* x, std::size_t n) {
  return active().sum_squares(x, n);
}
inline void axpy(double* y, double a, const double* x, std::size_t n) {
  active().axpy(y, a, x, n);
}
inline void scale(double* y, double a, std::size_t n) { active().scale(y, a, n); }
inline void add(double* y, const double* x, std::size_t n) { active().add(y, x, n); }
inline void adam_step(double* p, double* m, double* v, const double* g, std::size_t n,
                      double lr, double beta1, double beta2, double eps, double bias1,
                      double bias2) {
  active().adam_step(p, m, v, g, n, lr, beta1, beta2, eps, bias1, bias2);
}

}  // namespace sgrec::kernels
