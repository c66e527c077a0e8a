#include <cmath>

#include "cmpe/kernels.hpp"

namespace cmpe::kernels {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double* y, double a, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scal_scalar(double* x, double a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void matvec_scalar(const double* w, std::size_t rows, std::size_t cols,
                   const double* x, const double* bias, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    double s = bias ? bias[r] : 0.0;
    const double* row = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) s += row[c] * x[c];
    y[r] = s;
  }
}

void adam_scalar(double* p, double* m, double* v, const double* g, std::size_t n,
                 double lr, double beta1, double beta2, double eps, double bc1,
                 double bc2) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops{"scalar", dot_scalar, axpy_scalar, scal_scalar,
                       matvec_scalar, adam_scalar};
  return ops;
}

}  // namespace cmpe::kernels
