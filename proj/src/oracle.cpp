#include "cmpe/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cmpe/bounds.hpp"

namespace cmpe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint32_t kBruteForceGuard = 24;

void check_guard(const CmpeInstance& inst) {
  if (inst.n_query() > kBruteForceGuard)
    throw std::invalid_argument(
        "brute force refused for |Y| > 24, use branch_and_bound_cmpe");
}

// Lexicographic enumeration: m ascending visits assignments in
// lexicographic order of (y_0, y_1, ...).
void decode(std::uint64_t m, std::uint32_t n, std::vector<double>& y) {
  for (std::uint32_t i = 0; i < n; ++i)
    y[i] = static_cast<double>((m >> (n - 1 - i)) & 1u);
}

struct BnbState {
  const CmpeInstance* inst;
  std::vector<VarIndex> order;
  std::uint64_t budget;
  std::uint32_t ibound;
  double mu_hint;

  Evidence partial;  // local query indices assigned so far
  std::vector<std::uint8_t> bits;
  double incumbent = kInf;
  std::optional<std::vector<std::uint8_t>> best;
  std::uint64_t nodes = 0;
  bool exhausted = false;
};

double relaxed_min(const MultilinearPolynomial& p, std::uint32_t ibound) {
  if (p.n_vars() == 0) return p.constant();
  EliminationOrder order{min_fill_order(p), ibound};
  if (induced_width(p, order.order) <= ibound)
    return bucket_elim_min(p, order).value;
  return mini_bucket_min(p, order);
}

void dfs(BnbState& st, std::uint32_t depth) {
  if (st.exhausted) return;
  if (st.nodes >= st.budget) {
    st.exhausted = true;
    return;
  }
  ++st.nodes;

  const std::uint32_t n = st.inst->n_query();
  if (depth == n) {
    const auto y = bits_to_assignment(st.bits);
    if (st.inst->g.evaluate(y) <= 0.0) {
      const double fy = st.inst->f.evaluate(y);
      if (fy < st.incumbent) {
        st.incumbent = fy;
        st.best = st.bits;
      }
    }
    return;
  }

  const auto fc = condition(st.inst->f, st.partial).poly;
  const auto gc = condition(st.inst->g, st.partial).poly;

  // Constraint prune: a lower bound on min g above 0 proves every
  // completion infeasible.
  if (relaxed_min(gc, st.ibound) > 0.0) return;

  // Objective prune via weak duality at a few multipliers.
  if (st.incumbent < kInf) {
    double lb = -kInf;
    for (double mu : {0.0, st.mu_hint}) {
      const auto relaxed = MultilinearPolynomial::combine(1.0, fc, mu, gc);
      lb = std::max(lb, relaxed_min(relaxed, st.ibound));
      if (lb >= st.incumbent) return;
    }
  }

  const VarIndex v = st.order[depth];
  // Greedy value ordering: score each child by f + max(0, g) at the
  // midpoint relaxation of the remaining variables.
  VarIndex local = 0;
  {
    // Position of v among the still-free variables of fc's index space.
    std::vector<char> assigned(n, 0);
    for (const auto& [u, val] : st.partial) assigned[u] = 1;
    for (VarIndex u = 0; u < v; ++u)
      if (!assigned[u]) ++local;
  }
  double score[2];
  {
    std::vector<double> mid(fc.n_vars(), 0.5);
    for (int b = 0; b < 2; ++b) {
      mid[local] = static_cast<double>(b);
      const double gmid = gc.evaluate(mid);
      score[b] = fc.evaluate(mid) + std::max(0.0, gmid);
    }
  }
  const int first = score[1] < score[0] ? 1 : 0;
  for (int b : {first, 1 - first}) {
    st.partial.emplace_back(v, static_cast<double>(b));
    st.bits[v] = static_cast<std::uint8_t>(b);
    dfs(st, depth + 1);
    st.partial.pop_back();
    if (st.exhausted) return;
  }
}

}  // namespace

std::string to_string(OracleStatus s) {
  switch (s) {
    case OracleStatus::optimal: return "optimal";
    case OracleStatus::infeasible: return "infeasible";
    case OracleStatus::budget_exhausted: return "budget_exhausted";
  }
  return "unknown";
}

std::optional<OracleStatus> oracle_status_from_string(const std::string& s) {
  if (s == "optimal") return OracleStatus::optimal;
  if (s == "infeasible") return OracleStatus::infeasible;
  if (s == "budget_exhausted") return OracleStatus::budget_exhausted;
  return std::nullopt;
}

OracleResult brute_force_cmpe(const CmpeInstance& inst) {
  check_guard(inst);
  const std::uint32_t n = inst.n_query();
  OracleResult out;
  std::vector<double> y(n);
  double best = kInf;
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m) {
    decode(m, n, y);
    ++out.nodes_expanded;
    if (inst.g.evaluate(y) > 0.0) continue;
    const double fy = inst.f.evaluate(y);
    if (fy < best) {  // strict: first hit is the lexicographically smallest
      best = fy;
      out.y_star = round_half_up(y);
      out.p_star = fy;
    }
  }
  out.status = out.y_star ? OracleStatus::optimal : OracleStatus::infeasible;
  return out;
}

double brute_force_qstar(const CmpeInstance& inst) {
  check_guard(inst);
  const std::uint32_t n = inst.n_query();
  std::vector<double> y(n);
  double best = kInf;
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m) {
    decode(m, n, y);
    if (inst.g.evaluate(y) <= 0.0) continue;
    best = std::min(best, inst.f.evaluate(y) + inst.g.evaluate(y));
  }
  return best;
}

OracleResult branch_and_bound_cmpe(const CmpeInstance& inst, const BnbConfig& cfg) {
  if (cfg.node_budget < 1)
    throw std::invalid_argument("branch_and_bound_cmpe: node_budget must be >= 1");
  BnbState st;
  st.inst = &inst;
  st.order = min_fill_order_union(inst.f, inst.g);
  st.budget = cfg.node_budget;
  st.ibound = cfg.ibound;
  st.mu_hint = cfg.mu_hint;
  st.bits.assign(inst.n_query(), 0);

  dfs(st, 0);

  OracleResult out;
  out.nodes_expanded = st.nodes;
  out.y_star = st.best;
  if (st.best) out.p_star = st.incumbent;
  if (st.exhausted)
    out.status = OracleStatus::budget_exhausted;
  else
    out.status = st.best ? OracleStatus::optimal : OracleStatus::infeasible;
  return out;
}

}  // namespace cmpe
