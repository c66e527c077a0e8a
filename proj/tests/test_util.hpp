#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "cmpe/bounds.hpp"
#include "cmpe/poly.hpp"
#include "cmpe/rng.hpp"

namespace cmpe::test {

// Global weight functions of the two chain networks used across the suites:
//   h = 18 - 3x1 + x2 - 7y1 - y2 + 5x1y1 - 4x2y2 - y1y2
//   t = 28 + 2x1 - 7x2 - 4y1 - 2y2 + 2x1y1 - x2y2
// with variable order (x1, x2, y1, y2).
inline MultilinearPolynomial figure1_h() {
  return MultilinearPolynomial::from_terms(
      4, {{{}, 18.0},
          {{0}, -3.0},
          {{1}, 1.0},
          {{2}, -7.0},
          {{3}, -1.0},
          {{0, 2}, 5.0},
          {{1, 3}, -4.0},
          {{2, 3}, -1.0}});
}

inline MultilinearPolynomial figure1_t() {
  return MultilinearPolynomial::from_terms(
      4, {{{}, 28.0},
          {{0}, 2.0},
          {{1}, -7.0},
          {{2}, -4.0},
          {{3}, -2.0},
          {{0, 2}, 2.0},
          {{1, 3}, -1.0}});
}

// Conditioned toy instance (x1 = x2 = 1, q = 20) with the f-shift fixed at
// 20, so f = 4 + 2y1 + 5y2 + y1y2 and g = 3 - 2y1 - 3y2. Over the four
// discrete points: f = {4,9,6,12}, g = {3,0,1,-2}, p* = 9, q* = 7.
inline CmpeInstance toy_instance(double q = 20.0, double f_shift = 20.0) {
  const Evidence ev{{0, 1.0}, {1, 1.0}};
  const auto hx = condition(figure1_h(), ev);
  const auto tx = condition(figure1_t(), ev);
  CmpeInstance inst;
  inst.evidence = ev;
  inst.q = q;
  inst.y_index_map = hx.index_map;
  inst.f_shift = f_shift;
  inst.f = MultilinearPolynomial::combine(-1.0, hx.poly, 0.0, hx.poly)
               .plus_constant(f_shift);
  inst.g = tx.poly.plus_constant(-q);
  inst.l_f = 1.0;
  inst.u_f = 36.0;
  return inst;
}

inline MultilinearPolynomial random_pairwise_poly(std::uint32_t n, Rng& rng,
                                                  double edge_prob = 0.4,
                                                  double wmax = 3.0) {
  std::map<std::vector<VarIndex>, double> terms;
  terms[{}] = rng.uniform(-wmax, wmax);
  for (VarIndex i = 0; i < n; ++i)
    if (rng.bernoulli(0.7)) terms[{i}] = rng.uniform(-wmax, wmax);
  for (VarIndex i = 0; i < n; ++i)
    for (VarIndex j = i + 1; j < n; ++j)
      if (rng.bernoulli(edge_prob)) terms[{i, j}] = rng.uniform(-wmax, wmax);
  return MultilinearPolynomial::from_terms(n, terms);
}

// Random instance through build_instance with empty evidence: h and t are
// random pairwise polynomials and q is a random discrete t-value, so both
// feasible and infeasible regions are usually nonempty.
inline CmpeInstance random_instance(std::uint32_t n, Rng& rng) {
  const auto h = random_pairwise_poly(n, rng);
  const auto t = random_pairwise_poly(n, rng);
  std::vector<double> point(n);
  for (auto& v : point) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
  const double q = t.evaluate(point) + rng.uniform(-0.25, 0.25);
  return build_instance(h, t, {}, q);
}

inline double brute_min(const MultilinearPolynomial& p,
                        std::vector<std::uint8_t>* argmin = nullptr) {
  const std::uint32_t n = p.n_vars();
  std::vector<double> y(n);
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m) {
    for (std::uint32_t i = 0; i < n; ++i)
      y[i] = static_cast<double>((m >> (n - 1 - i)) & 1u);
    const double v = p.evaluate(y);
    if (v < best) {
      best = v;
      if (argmin) *argmin = round_half_up(y);
    }
  }
  return best;
}

// Central finite differences of a scalar function of a point.
inline std::vector<double> finite_diff(
    const std::function<double(std::span<const double>)>& fn,
    std::vector<double> point, double step) {
  std::vector<double> grad(point.size());
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double orig = point[i];
    point[i] = orig + step;
    const double hi = fn(point);
    point[i] = orig - step;
    const double lo = fn(point);
    point[i] = orig;
    grad[i] = (hi - lo) / (2.0 * step);
  }
  return grad;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

}  // namespace cmpe::test
