#include "cmpe/poly.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cmpe {

namespace {

void check_key(std::uint32_t n_vars, const std::vector<VarIndex>& key) {
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (key[i] >= n_vars) throw std::invalid_argument("term index out of range");
    if (i > 0 && key[i] <= key[i - 1])
      throw std::invalid_argument("term key not sorted/duplicate-free");
  }
}

}  // namespace

MultilinearPolynomial MultilinearPolynomial::from_terms(
    std::uint32_t n_vars, const std::map<std::vector<VarIndex>, double>& terms) {
  MultilinearPolynomial p;
  p.n_vars_ = n_vars;
  for (const auto& [key, w] : terms) {
    check_key(n_vars, key);
    if (w == 0.0) continue;
    if (key.empty()) {
      p.constant_ = w;
      continue;
    }
    p.vars_.insert(p.vars_.end(), key.begin(), key.end());
    p.offsets_.push_back(p.vars_.size());
    p.weights_.push_back(w);
  }
  return p;
}

MultilinearPolynomial MultilinearPolynomial::constant_poly(std::uint32_t n_vars,
                                                           double c) {
  MultilinearPolynomial p;
  p.n_vars_ = n_vars;
  p.constant_ = c;
  return p;
}

double MultilinearPolynomial::weight_of(std::span<const VarIndex> key) const {
  if (key.empty()) return constant_;
  for (std::size_t i = 0; i < num_terms(); ++i) {
    const auto tv = term_vars(i);
    if (tv.size() == key.size() && std::equal(tv.begin(), tv.end(), key.begin()))
      return weights_[i];
  }
  return 0.0;
}

double MultilinearPolynomial::abs_weight_sum() const {
  double s = std::abs(constant_);
  for (double w : weights_) s += std::abs(w);
  return s;
}

double MultilinearPolynomial::evaluate(std::span<const double> a) const {
  if (a.size() != n_vars_) throw std::invalid_argument("assignment length mismatch");
  double acc = constant_;
  for (std::size_t i = 0; i < num_terms(); ++i) {
    double prod = weights_[i];
    for (VarIndex v : term_vars(i)) prod *= a[v];
    acc += prod;
  }
  return acc;
}

void MultilinearPolynomial::gradient(std::span<const double> a,
                                     std::span<double> out) const {
  if (a.size() != n_vars_) throw std::invalid_argument("assignment length mismatch");
  if (out.size() != n_vars_) throw std::invalid_argument("gradient length mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < num_terms(); ++i) {
    const auto tv = term_vars(i);
    // Terms are short (pairwise in typical networks); recomputing the
    // leave-one-out product is exact and avoids the divide-by-zero case.
    for (std::size_t k = 0; k < tv.size(); ++k) {
      double prod = weights_[i];
      for (std::size_t j = 0; j < tv.size(); ++j)
        if (j != k) prod *= a[tv[j]];
      out[tv[k]] += prod;
    }
  }
}

std::vector<double> MultilinearPolynomial::gradient(std::span<const double> a) const {
  std::vector<double> out(n_vars_);
  gradient(a, out);
  return out;
}

MultilinearPolynomial MultilinearPolynomial::combine(double a,
                                                     const MultilinearPolynomial& p,
                                                     double b,
                                                     const MultilinearPolynomial& q) {
  if (p.n_vars() != q.n_vars())
    throw std::invalid_argument("combine: variable count mismatch");
  std::map<std::vector<VarIndex>, double> terms;
  terms[{}] = a * p.constant_ + b * q.constant_;
  for (std::size_t i = 0; i < p.num_terms(); ++i) {
    const auto tv = p.term_vars(i);
    terms[std::vector<VarIndex>(tv.begin(), tv.end())] += a * p.weights_[i];
  }
  for (std::size_t i = 0; i < q.num_terms(); ++i) {
    const auto tv = q.term_vars(i);
    terms[std::vector<VarIndex>(tv.begin(), tv.end())] += b * q.weights_[i];
  }
  return from_terms(p.n_vars(), terms);
}

MultilinearPolynomial MultilinearPolynomial::plus_constant(double c) const {
  MultilinearPolynomial p = *this;
  p.constant_ += c;
  return p;
}

MultilinearPolynomial MultilinearPolynomial::scaled(double a) const {
  return combine(a, *this, 0.0, constant_poly(n_vars_, 0.0));
}

ConditionedPoly condition(const MultilinearPolynomial& p, const Evidence& evidence) {
  std::vector<char> is_evidence(p.n_vars(), 0);
  std::vector<double> value(p.n_vars(), 0.0);
  for (const auto& [v, val] : evidence) {
    if (v >= p.n_vars()) throw std::invalid_argument("evidence index out of range");
    if (is_evidence[v]) throw std::invalid_argument("duplicate evidence variable");
    is_evidence[v] = 1;
    value[v] = val;
  }

  ConditionedPoly out;
  std::vector<VarIndex> old_to_new(p.n_vars(), 0);
  for (VarIndex v = 0; v < p.n_vars(); ++v) {
    if (!is_evidence[v]) {
      old_to_new[v] = static_cast<VarIndex>(out.index_map.size());
      out.index_map.push_back(v);
    }
  }

  std::map<std::vector<VarIndex>, double> terms;
  terms[{}] = p.constant();
  for (std::size_t i = 0; i < p.num_terms(); ++i) {
    double w = p.term_weight(i);
    std::vector<VarIndex> kept;
    for (VarIndex v : p.term_vars(i)) {
      if (is_evidence[v])
        w *= value[v];
      else
        kept.push_back(old_to_new[v]);
    }
    if (w != 0.0) terms[kept] += w;
  }
  out.poly = MultilinearPolynomial::from_terms(
      static_cast<std::uint32_t>(out.index_map.size()), terms);
  return out;
}

double MarkovNetwork::weight(std::span<const std::uint8_t> bits) const {
  double acc = 0.0;
  for (const auto& pot : potentials) {
    std::size_t idx = 0;
    for (VarIndex v : pot.scope) idx = idx * 2 + bits[v];
    acc += pot.table[idx];
  }
  return acc;
}

MultilinearPolynomial to_polynomial(const MarkovNetwork& net) {
  for (auto c : net.cardinalities)
    if (c != 2) throw std::invalid_argument("to_polynomial: binary networks only");

  std::map<std::vector<VarIndex>, double> terms;
  terms[{}] = 0.0;
  for (const auto& pot : net.potentials) {
    const std::size_t k = pot.scope.size();
    if (k > 24) throw std::invalid_argument("to_polynomial: scope too large");
    const std::size_t size = std::size_t{1} << k;

    // Reindex the row-major table (last scope var fastest) to subset masks
    // where bit j corresponds to scope[j], then take the Moebius transform
    // in place: coeff[S] = sum_{T subseteq S} (-1)^{|S \ T|} table[T].
    std::vector<double> coeff(size);
    for (std::size_t rm = 0; rm < size; ++rm) {
      std::size_t mask = 0;
      for (std::size_t j = 0; j < k; ++j)
        if (rm & (std::size_t{1} << (k - 1 - j))) mask |= std::size_t{1} << j;
      coeff[mask] = pot.table[rm];
    }
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t bit = std::size_t{1} << j;
      for (std::size_t mask = 0; mask < size; ++mask)
        if (mask & bit) coeff[mask] -= coeff[mask ^ bit];
    }

    for (std::size_t mask = 0; mask < size; ++mask) {
      if (coeff[mask] == 0.0) continue;
      std::vector<VarIndex> key;
      for (std::size_t j = 0; j < k; ++j)
        if (mask & (std::size_t{1} << j)) key.push_back(pot.scope[j]);
      std::sort(key.begin(), key.end());
      terms[key] += coeff[mask];
    }
  }
  return MultilinearPolynomial::from_terms(net.n_vars, terms);
}

CmpeInstance build_instance(const MultilinearPolynomial& h,
                            const MultilinearPolynomial& t,
                            const Evidence& evidence, double q) {
  if (h.n_vars() != t.n_vars())
    throw std::invalid_argument("build_instance: variable count mismatch");
  ConditionedPoly hx = condition(h, evidence);
  ConditionedPoly tx = condition(t, evidence);

  CmpeInstance inst;
  inst.evidence = evidence;
  inst.q = q;
  inst.y_index_map = hx.index_map;
  inst.f_shift = 1.0 + hx.poly.abs_weight_sum();
  inst.f = MultilinearPolynomial::combine(-1.0, hx.poly, 0.0, hx.poly)
               .plus_constant(inst.f_shift);
  inst.g = tx.poly.plus_constant(-q);
  inst.l_f = 1.0;
  inst.u_f = inst.f_shift + hx.poly.abs_weight_sum();
  return inst;
}

CmpeInstance build_instance(const MarkovNetwork& m1, const MarkovNetwork& m2,
                            const Evidence& evidence, double q) {
  if (m1.n_vars != m2.n_vars)
    throw std::invalid_argument("build_instance: variable count mismatch");
  return build_instance(to_polynomial(m1), to_polynomial(m2), evidence, q);
}

std::vector<std::uint8_t> round_half_up(std::span<const double> y) {
  std::vector<std::uint8_t> bits(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) bits[i] = y[i] >= 0.5 ? 1 : 0;
  return bits;
}

std::vector<double> bits_to_assignment(std::span<const std::uint8_t> bits) {
  return std::vector<double>(bits.begin(), bits.end());
}

}  // namespace cmpe
