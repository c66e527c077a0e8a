#pragma once

#include <cstddef>
#include <string_view>

namespace cmpe::kernels {

// Dense double-precision kernels behind the MLP training loop. Each entry
// has a scalar reference implementation and may have SIMD variants; the
// active set is chosen once at startup from CPU features and can be forced
// with the CMPE_SIMD environment variable (or set_active in tests). SIMD
// variants reassociate additions, so results may differ from scalar in the
// last bits; the equivalence tests pin the allowed drift.
struct Ops {
  const char* name;

  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += a * x
  void (*axpy)(double* y, double a, const double* x, std::size_t n);
  // x *= a
  void (*scal)(double* x, double a, std::size_t n);
  // y = W x + bias, W row-major rows x cols; bias may be null
  void (*matvec)(const double* w, std::size_t rows, std::size_t cols,
                 const double* x, const double* bias, double* y);
  // Bias-corrected Adam update for one parameter block. bc1 = 1 - beta1^t,
  // bc2 = 1 - beta2^t are precomputed by the caller.
  void (*adam_update)(double* p, double* m, double* v, const double* g,
                      std::size_t n, double lr, double beta1, double beta2,
                      double eps, double bc1, double bc2);
};

const Ops& scalar_ops();
const Ops* avx2_ops();  // null when unsupported at build or run time

// The runtime-selected implementation.
const Ops& active_ops();

// Forces a named implementation ("scalar", "avx2"); returns false when the
// name is unknown or unavailable on this machine.
bool set_active(std::string_view name);

}  // namespace cmpe::kernels
