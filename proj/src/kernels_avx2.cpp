// AVX2/FMA variants of the dense kernels. Compiled with -mavx2 -mfma in its
// own translation unit; only reached after the runtime CPU check passes.

#include "cmpe/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>

namespace cmpe::kernels {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d s0 = _mm256_setzero_pd();
  __m256d s1 = _mm256_setzero_pd();
  __m256d s2 = _mm256_setzero_pd();
  __m256d s3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), s1);
    s2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), s2);
    s3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), s3);
  }
  for (; i + 4 <= n; i += 4)
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
  double s = hsum(_mm256_add_pd(_mm256_add_pd(s0, s1), _mm256_add_pd(s2, s3)));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double* y, double a, const double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(y + i + 4, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4),
                                                _mm256_loadu_pd(y + i + 4)));
  }
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void scal_avx2(double* x, double a, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= a;
}

void matvec_avx2(const double* w, std::size_t rows, std::size_t cols,
                 const double* x, const double* bias, double* y) {
  // Two rows at a time to reuse the loaded x vector.
  std::size_t r = 0;
  for (; r + 2 <= rows; r += 2) {
    const double* row0 = w + r * cols;
    const double* row1 = row0 + cols;
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) {
      const __m256d vx = _mm256_loadu_pd(x + c);
      a0 = _mm256_fmadd_pd(_mm256_loadu_pd(row0 + c), vx, a0);
      a1 = _mm256_fmadd_pd(_mm256_loadu_pd(row1 + c), vx, a1);
    }
    double s0 = hsum(a0);
    double s1 = hsum(a1);
    for (; c < cols; ++c) {
      s0 += row0[c] * x[c];
      s1 += row1[c] * x[c];
    }
    y[r] = s0 + (bias ? bias[r] : 0.0);
    y[r + 1] = s1 + (bias ? bias[r + 1] : 0.0);
  }
  for (; r < rows; ++r)
    y[r] = (bias ? bias[r] : 0.0) + dot_avx2(w + r * cols, x, cols);
}

void adam_avx2(double* p, double* m, double* v, const double* g, std::size_t n,
               double lr, double beta1, double beta2, double eps, double bc1,
               double bc2) {
  const __m256d vb1 = _mm256_set1_pd(beta1);
  const __m256d vb2 = _mm256_set1_pd(beta2);
  const __m256d v1mb1 = _mm256_set1_pd(1.0 - beta1);
  const __m256d v1mb2 = _mm256_set1_pd(1.0 - beta2);
  const __m256d vlr = _mm256_set1_pd(lr);
  const __m256d veps = _mm256_set1_pd(eps);
  const __m256d vbc1 = _mm256_set1_pd(bc1);
  const __m256d vbc2 = _mm256_set1_pd(bc2);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vg = _mm256_loadu_pd(g + i);
    __m256d vm = _mm256_fmadd_pd(vb1, _mm256_loadu_pd(m + i), _mm256_mul_pd(v1mb1, vg));
    __m256d vv = _mm256_fmadd_pd(vb2, _mm256_loadu_pd(v + i),
                                 _mm256_mul_pd(v1mb2, _mm256_mul_pd(vg, vg)));
    _mm256_storeu_pd(m + i, vm);
    _mm256_storeu_pd(v + i, vv);
    const __m256d mhat = _mm256_div_pd(vm, vbc1);
    const __m256d vhat = _mm256_div_pd(vv, vbc2);
    const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(vlr, mhat), denom);
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
  }
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
  }
}

}  // namespace

const Ops* avx2_ops() {
  static const Ops ops{"avx2", dot_avx2, axpy_avx2, scal_avx2, matvec_avx2,
                       adam_avx2};
  if (!__builtin_cpu_supports("avx2") || !__builtin_cpu_supports("fma"))
    return nullptr;
  return &ops;
}

}  // namespace cmpe::kernels

#else

namespace cmpe::kernels {
const Ops* avx2_ops() { return nullptr; }
}  // namespace cmpe::kernels

#endif
