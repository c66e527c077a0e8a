#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cmpe {

using VarIndex = std::uint32_t;

// Partial assignment: (variable index, value) pairs. Values are 0/1 for
// discrete evidence but any value in [0,1] is accepted (multilinear
// relaxation).
using Evidence = std::vector<std::pair<VarIndex, double>>;

// Sparse multilinear polynomial  p(z) = c + sum_I w_I * prod_{i in I} z_i
// over binary (or [0,1]-relaxed) variables. Term keys are sorted,
// duplicate-free index sets; construction merges equal keys and drops exact
// zeros, so equality of term sets is canonical.
class MultilinearPolynomial {
 public:
  MultilinearPolynomial() = default;

  static MultilinearPolynomial from_terms(
      std::uint32_t n_vars, const std::map<std::vector<VarIndex>, double>& terms);

  static MultilinearPolynomial constant_poly(std::uint32_t n_vars, double c);

  std::uint32_t n_vars() const { return n_vars_; }
  std::size_t num_terms() const { return weights_.size(); }  // non-constant
  double constant() const { return constant_; }

  std::span<const VarIndex> term_vars(std::size_t i) const {
    return {vars_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  double term_weight(std::size_t i) const { return weights_[i]; }

  // Weight of an exact key (sorted indices); 0 when the term is absent.
  double weight_of(std::span<const VarIndex> key) const;

  // sum_I |w_I| including the constant term.
  double abs_weight_sum() const;

  double evaluate(std::span<const double> a) const;

  // Exact partial derivatives of the multilinear extension.
  void gradient(std::span<const double> a, std::span<double> out) const;
  std::vector<double> gradient(std::span<const double> a) const;

  // a*p + b*q (term-wise merge; p and q must share n_vars).
  static MultilinearPolynomial combine(double a, const MultilinearPolynomial& p,
                                       double b, const MultilinearPolynomial& q);

  MultilinearPolynomial plus_constant(double c) const;
  MultilinearPolynomial scaled(double a) const;

  bool operator==(const MultilinearPolynomial& other) const = default;

 private:
  std::uint32_t n_vars_ = 0;
  double constant_ = 0.0;
  std::vector<std::size_t> offsets_{0};  // term i -> [offsets_[i], offsets_[i+1])
  std::vector<VarIndex> vars_;
  std::vector<double> weights_;
};

// Result of substituting evidence into a polynomial: the remaining variables
// are reindexed 0..k-1 and index_map[local] gives the original index.
struct ConditionedPoly {
  MultilinearPolynomial poly;
  std::vector<VarIndex> index_map;
};

ConditionedPoly condition(const MultilinearPolynomial& p, const Evidence& evidence);

struct Potential {
  std::vector<VarIndex> scope;  // ordered, duplicate-free
  std::vector<double> table;    // log values, row-major (last scope var fastest)
};

struct MarkovNetwork {
  std::uint32_t n_vars = 0;
  std::vector<std::uint32_t> cardinalities;  // all 2 in scope
  std::vector<Potential> potentials;

  // Table-sum weight of a discrete assignment; the reference semantics that
  // to_polynomial must reproduce.
  double weight(std::span<const std::uint8_t> bits) const;
};

// Compiles the network into its global multilinear weight function by
// expanding every table through the Moebius transform and merging terms.
MultilinearPolynomial to_polynomial(const MarkovNetwork& net);

// Conditioned CMPE instance: minimize f over {0,1}^|Y| subject to g <= 0.
// f = f_shift - h_x is strictly positive on the whole hypercube; g = t_x - q.
struct CmpeInstance {
  MultilinearPolynomial f;
  MultilinearPolynomial g;
  Evidence evidence;
  double q = 0.0;
  double f_shift = 0.0;
  double l_f = 1.0;
  double u_f = 0.0;
  std::vector<VarIndex> y_index_map;  // local index -> original network index

  std::uint32_t n_query() const { return f.n_vars(); }
  // h_x(y) in the original maximization units.
  double h_value(std::span<const double> y) const { return f_shift - f.evaluate(y); }
};

CmpeInstance build_instance(const MarkovNetwork& m1, const MarkovNetwork& m2,
                            const Evidence& evidence, double q);

// Same contract, but over pre-compiled polynomials (the networks' global
// weight functions); used by the pipeline to avoid recompiling per example.
CmpeInstance build_instance(const MultilinearPolynomial& h,
                            const MultilinearPolynomial& t,
                            const Evidence& evidence, double q);

// Rounds a relaxed assignment to bits; ties at 0.5 round up.
std::vector<std::uint8_t> round_half_up(std::span<const double> y);

std::vector<double> bits_to_assignment(std::span<const std::uint8_t> bits);

}  // namespace cmpe
