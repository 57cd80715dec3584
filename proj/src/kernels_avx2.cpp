// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
//
// AVX2 variants of the inner-loop kernels. This translation unit is compiled
// with -mavx2 -ffp-contract=off; nothing here may run before avx2::supported()
// has returned true. FMA is deliberately not used so that the elementwise
// kernels stay bitwise-identical to the scalar reference.

#include "sgrec/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

namespace sgrec::kernels::avx2 {
namespace {

inline double hadd(__m256d v) {
  // (v0+v2, v1+v3) then (v0+v2)+(v1+v3)
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_impl(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    acc1 = _mm256_add_pd(acc1,
                         _mm256_mul_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  double acc = hadd(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_impl(const double* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
  double acc = hadd(acc0);
  for (; i < n; ++i) acc += x[i];
  return acc;
}

double sum_squares_impl(const double* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(v, v));
  }
  double acc = hadd(acc0);
  for (; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

void axpy_impl(double* y, double a, const double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scale_impl(double* y, double a, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_mul_pd(_mm256_loadu_pd(y + i), va));
  }
  for (; i < n; ++i) y[i] *= a;
}

void add_impl(double* y, const double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) y[i] += x[i];
}

void adam_step_impl(double* p, double* m, double* v, const double* g, std::size_t n,
                    double lr, double beta1, double beta2, double eps, double bias1,
                    double bias2) {
  const __m256d vb1 = _mm256_set1_pd(beta1);
  const __m256d vb1c = _mm256_set1_pd(1.0 - beta1);
  const __m256d vb2 = _mm256_set1_pd(beta2);
  const __m256d vb2c = _mm256_set1_pd(1.0 - beta2);
  const __m256d vlr = _mm256_set1_pd(lr);
  const __m256d veps = _mm256_set1_pd(eps);
  const __m256d vbias1 = _mm256_set1_pd(bias1);
  const __m256d vbias2 = _mm256_set1_pd(bias2);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gi = _mm256_loadu_pd(g + i);
    const __m256d mi =
        _mm256_add_pd(_mm256_mul_pd(vb1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(vb1c, gi));
    const __m256d vi = _mm256_add_pd(_mm256_mul_pd(vb2, _mm256_loadu_pd(v + i)),
                                     _mm256_mul_pd(vb2c, _mm256_mul_pd(gi, gi)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d mhat = _mm256_div_pd(mi, vbias1);
    const __m256d vhat = _mm256_div_pd(vi, vbias2);
    const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
    const __m256d step = _mm256_mul_pd(vlr, _mm256_div_pd(mhat, denom));
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
  }
  for (; i < n; ++i) {
    const double gi = g[i];
    m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
    v[i] = beta2 * v[i] + (1.0 - beta2) * (gi * gi);
    const double mhat = m[i] / bias1;
    const double vhat = v[i] / bias2;
    p[i] = p[i] - lr * (mhat / (std::sqrt(vhat) + eps));
  }
}

}  // namespace

bool supported() { return __builtin_cpu_supports("avx2") != 0; }

const FnTable table = {
    "avx2",     dot_impl,   sum_impl, sum_squares_impl,
    axpy_impl,  scale_impl, add_impl, adam_step_impl,
};

}  // namespace sgrec::kernels::avx2

#endif  // x86_64
