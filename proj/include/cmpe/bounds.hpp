#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "cmpe/poly.hpp"

namespace cmpe {

class WidthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EliminationOrder {
  std::vector<VarIndex> order;  // permutation of 0..n-1, eliminated front-first
  std::uint32_t ibound = 20;    // max bucket scope size (variable count)
};

// Min-fill elimination order over the polynomial's interaction graph
// (variables co-occurring in a term are adjacent). Deterministic: ties go to
// the smallest variable index.
std::vector<VarIndex> min_fill_order(const MultilinearPolynomial& p);
std::vector<VarIndex> min_fill_order_union(const MultilinearPolynomial& a,
                                           const MultilinearPolynomial& b);

std::uint32_t induced_width(const MultilinearPolynomial& p,
                            std::span<const VarIndex> order);

struct MinResult {
  double value = 0.0;
  std::vector<std::uint8_t> argmin;
};

// Exact min over {0,1}^n by bucket elimination of the polynomial's terms.
// Throws WidthError when the induced width under the order exceeds ibound.
MinResult bucket_elim_min(const MultilinearPolynomial& p,
                          const EliminationOrder& order);

// Mini-bucket relaxation: buckets whose combined scope would exceed
// ibound+1 variables are split and bounded independently, so the result is
// a lower bound on the exact minimum and equals it when no split occurs.
double mini_bucket_min(const MultilinearPolynomial& p,
                       const EliminationOrder& order);

// Same bound plus the greedy decode of the mini-bucket tables; the
// assignment is heuristic (its true value can exceed the bound).
MinResult mini_bucket_min_with_assignment(const MultilinearPolynomial& p,
                                          const EliminationOrder& order);

struct LagrangianConfig {
  std::uint32_t steps = 200;
  double eta0 = 1.0;       // eta_k = eta0 / sqrt(k+1)
  std::uint32_t ibound = 20;  // exact inner solves up to this induced width
};

struct LagrangianResult {
  double bound = 0.0;   // max over visited mu of min_y f + (1-mu) g
  double mu_star = 0.0; // best multiplier found
  std::vector<std::vector<std::uint8_t>> visited;  // inner argmins, per step
};

// Subgradient search over mu >= 0 of min_y f(y) + (1-mu) g(y); any visited
// mu yields a valid lower bound on q* = min{f+g : g > 0}, and the best one
// is returned. Inner minimizations are exact bucket elimination when the
// width permits and mini-bucket otherwise.
LagrangianResult lagrangian_lower_bound_q(const CmpeInstance& inst,
                                          const LagrangianConfig& cfg = {});

struct UpperBoundResult {
  double value = 0.0;
  std::optional<std::vector<std::uint8_t>> witness;
};

// Rounds each candidate, keeps the feasible ones (g <= 0) and returns the
// best f among them; falls back to the coarse bound u_f with no witness.
UpperBoundResult feasible_upper_bound_p(
    const CmpeInstance& inst, std::span<const std::vector<double>> candidates);

// alpha = min(1.01 * p_upper/q_lower, u_f/l_f) when q_lower certifies
// positivity, else the u_f/l_f cap. Throws when p_upper <= 0.
double compute_alpha(double p_upper, double q_lower, double u_f, double l_f);

struct AlphaBound {
  double p_upper = 0.0;
  double q_lower = 0.0;
  double alpha = 0.0;
  double mu_star = 0.0;
  bool ratio_branch = false;  // alpha came from p_upper/q_lower, uncapped
  std::optional<std::vector<std::uint8_t>> feasible_witness;
};

// Full per-instance pipeline: Lagrangian q* lower bound, feasible-solution
// p* upper bound seeded with the inner argmins visited by the subgradient
// search, and the resulting alpha.
AlphaBound compute_alpha_bound(const CmpeInstance& inst,
                               const LagrangianConfig& cfg = {});

}  // namespace cmpe
