#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cmpe/poly.hpp"

namespace cmpe {

enum class OracleStatus { optimal, infeasible, budget_exhausted };

std::string to_string(OracleStatus s);
std::optional<OracleStatus> oracle_status_from_string(const std::string& s);

struct OracleResult {
  OracleStatus status = OracleStatus::infeasible;
  std::optional<std::vector<std::uint8_t>> y_star;
  std::optional<double> p_star;
  std::uint64_t nodes_expanded = 0;
};

// Exhaustive scan over {0,1}^|Y|, ties broken by the lexicographically
// smallest assignment. Guarded at |Y| <= 24.
OracleResult brute_force_cmpe(const CmpeInstance& inst);

// Exact q* = min{ f(y)+g(y) : g(y) > 0 }, +inf when the strictly infeasible
// set is empty. Same guard.
double brute_force_qstar(const CmpeInstance& inst);

struct BnbConfig {
  std::uint64_t node_budget = UINT64_MAX;
  std::uint32_t ibound = 20;  // exact bounding up to this induced width
  double mu_hint = 1.0;       // extra Lagrange multiplier tried when pruning
};

// Depth-first branch and bound in min-fill variable order. Nodes are pruned
// when the Lagrangian/mini-bucket lower bound of the conditioned subproblem
// reaches the incumbent, or when the constraint is provably unsatisfiable
// below the node. Returns budget_exhausted with the best incumbent when the
// node budget runs out before the search completes.
OracleResult branch_and_bound_cmpe(const CmpeInstance& inst,
                                   const BnbConfig& cfg = {});

}  // namespace cmpe
