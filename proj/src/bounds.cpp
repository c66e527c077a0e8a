#include "cmpe/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cmpe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::vector<char>> interaction_graph(
    std::initializer_list<const MultilinearPolynomial*> polys,
    std::uint32_t n) {
  std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
  for (const auto* p : polys) {
    for (std::size_t t = 0; t < p->num_terms(); ++t) {
      const auto tv = p->term_vars(t);
      for (std::size_t i = 0; i < tv.size(); ++i)
        for (std::size_t j = i + 1; j < tv.size(); ++j)
          adj[tv[i]][tv[j]] = adj[tv[j]][tv[i]] = 1;
    }
  }
  return adj;
}

std::vector<VarIndex> min_fill_from_graph(std::vector<std::vector<char>> adj) {
  const std::uint32_t n = static_cast<std::uint32_t>(adj.size());
  std::vector<char> done(n, 0);
  std::vector<VarIndex> order;
  order.reserve(n);
  for (std::uint32_t step = 0; step < n; ++step) {
    VarIndex best = 0;
    long best_fill = -1;
    for (VarIndex v = 0; v < n; ++v) {
      if (done[v]) continue;
      std::vector<VarIndex> nb;
      for (VarIndex u = 0; u < n; ++u)
        if (!done[u] && u != v && adj[v][u]) nb.push_back(u);
      long fill = 0;
      for (std::size_t i = 0; i < nb.size(); ++i)
        for (std::size_t j = i + 1; j < nb.size(); ++j)
          if (!adj[nb[i]][nb[j]]) ++fill;
      if (best_fill < 0 || fill < best_fill) {
        best_fill = fill;
        best = v;
      }
    }
    std::vector<VarIndex> nb;
    for (VarIndex u = 0; u < n; ++u)
      if (!done[u] && u != best && adj[best][u]) nb.push_back(u);
    for (std::size_t i = 0; i < nb.size(); ++i)
      for (std::size_t j = i + 1; j < nb.size(); ++j)
        adj[nb[i]][nb[j]] = adj[nb[j]][nb[i]] = 1;
    done[best] = 1;
    order.push_back(best);
  }
  return order;
}

// Local function over a small sorted scope; bit k of a table index holds the
// value of scope[k].
struct Fn {
  std::vector<VarIndex> scope;
  std::vector<double> vals;
};

std::vector<VarIndex> scope_union(const std::vector<const Fn*>& fns) {
  std::vector<VarIndex> u;
  for (const Fn* f : fns) {
    std::vector<VarIndex> merged;
    std::set_union(u.begin(), u.end(), f->scope.begin(), f->scope.end(),
                   std::back_inserter(merged));
    u = std::move(merged);
  }
  return u;
}

Fn combine(const std::vector<const Fn*>& fns, std::vector<VarIndex> scope) {
  Fn out;
  out.scope = std::move(scope);
  out.vals.assign(std::size_t{1} << out.scope.size(), 0.0);
  for (const Fn* f : fns) {
    // Position of each member variable inside the union scope.
    std::vector<std::uint32_t> pos(f->scope.size());
    for (std::size_t j = 0; j < f->scope.size(); ++j)
      pos[j] = static_cast<std::uint32_t>(
          std::lower_bound(out.scope.begin(), out.scope.end(), f->scope[j]) -
          out.scope.begin());
    for (std::size_t idx = 0; idx < out.vals.size(); ++idx) {
      std::size_t sub = 0;
      for (std::size_t j = 0; j < pos.size(); ++j)
        sub |= ((idx >> pos[j]) & 1u) << j;
      out.vals[idx] += f->vals[sub];
    }
  }
  return out;
}

// Minimizes variable v out of t; v must be in t.scope.
Fn min_out(const Fn& t, VarIndex v) {
  const std::size_t pv = static_cast<std::size_t>(
      std::lower_bound(t.scope.begin(), t.scope.end(), v) - t.scope.begin());
  Fn out;
  out.scope = t.scope;
  out.scope.erase(out.scope.begin() + pv);
  out.vals.assign(std::size_t{1} << out.scope.size(), 0.0);
  const std::size_t lo_mask = (std::size_t{1} << pv) - 1;
  for (std::size_t idx = 0; idx < out.vals.size(); ++idx) {
    const std::size_t base = (idx & lo_mask) | ((idx & ~lo_mask) << 1);
    out.vals[idx] = std::min(t.vals[base], t.vals[base | (std::size_t{1} << pv)]);
  }
  return out;
}

double eval_fn(const Fn& f, const std::vector<std::uint8_t>& bits) {
  std::size_t idx = 0;
  for (std::size_t j = 0; j < f.scope.size(); ++j)
    idx |= static_cast<std::size_t>(bits[f.scope[j]]) << j;
  return f.vals[idx];
}

struct ElimOutcome {
  double value = 0.0;
  std::vector<std::uint8_t> assignment;
  bool split = false;
};

// Shared elimination engine. With allow_split=false this is exact bucket
// elimination and throws WidthError when a bucket outgrows ibound+1
// variables. With allow_split=true oversized buckets are partitioned and
// each part is bounded independently (mini-bucket), giving a lower bound.
// The assignment is decoded greedily from the per-bucket combined tables in
// reverse elimination order; it is an exact argmin in the unsplit case.
ElimOutcome eliminate(const MultilinearPolynomial& p,
                      const EliminationOrder& order, bool allow_split) {
  const std::uint32_t n = p.n_vars();
  if (order.order.size() != n)
    throw std::invalid_argument("elimination order length mismatch");
  std::vector<std::uint32_t> pos(n);
  {
    std::vector<char> seen(n, 0);
    for (std::uint32_t k = 0; k < n; ++k) {
      const VarIndex v = order.order[k];
      if (v >= n || seen[v])
        throw std::invalid_argument("elimination order is not a permutation");
      seen[v] = 1;
      pos[v] = k;
    }
  }

  auto earliest_pos = [&](const std::vector<VarIndex>& scope) {
    std::uint32_t m = n;
    for (VarIndex v : scope) m = std::min(m, pos[v]);
    return m;
  };

  std::vector<std::vector<Fn>> buckets(n);
  double value = p.constant();
  for (std::size_t t = 0; t < p.num_terms(); ++t) {
    const auto tv = p.term_vars(t);
    Fn f;
    f.scope.assign(tv.begin(), tv.end());
    f.vals.assign(std::size_t{1} << f.scope.size(), 0.0);
    f.vals.back() = p.term_weight(t);  // all-ones configuration
    buckets[earliest_pos(f.scope)].push_back(std::move(f));
  }

  std::vector<std::vector<Fn>> decode_tables(n);
  bool split = false;
  for (std::uint32_t k = 0; k < n; ++k) {
    auto& members = buckets[k];
    if (members.empty()) continue;
    std::vector<const Fn*> all;
    for (const auto& f : members) all.push_back(&f);

    std::vector<std::vector<const Fn*>> groups;
    if (!allow_split) {
      const auto u = scope_union(all);
      if (u.size() > order.ibound + 1)
        throw WidthError("exact elimination infeasible, use mini_bucket");
      groups.push_back(all);
    } else {
      // Greedy first-fit by decreasing scope size; a group never exceeds
      // ibound+1 variables unless a single member is already larger.
      std::stable_sort(all.begin(), all.end(),
                       [](const Fn* a, const Fn* b) {
                         if (a->scope.size() != b->scope.size())
                           return a->scope.size() > b->scope.size();
                         return a->scope < b->scope;
                       });
      std::vector<std::vector<VarIndex>> group_scopes;
      for (const Fn* f : all) {
        bool placed = false;
        for (std::size_t gi = 0; gi < groups.size(); ++gi) {
          std::vector<VarIndex> merged;
          std::set_union(group_scopes[gi].begin(), group_scopes[gi].end(),
                         f->scope.begin(), f->scope.end(),
                         std::back_inserter(merged));
          if (merged.size() <= order.ibound + 1) {
            groups[gi].push_back(f);
            group_scopes[gi] = std::move(merged);
            placed = true;
            break;
          }
        }
        if (!placed) {
          groups.push_back({f});
          group_scopes.push_back(f->scope);
        }
      }
      if (groups.size() > 1) split = true;
    }

    const VarIndex v = order.order[k];
    for (auto& g : groups) {
      Fn combined = combine(g, scope_union(g));
      Fn reduced = min_out(combined, v);
      decode_tables[k].push_back(std::move(combined));
      if (reduced.scope.empty()) {
        value += reduced.vals[0];
      } else {
        const std::uint32_t dest = earliest_pos(reduced.scope);
        buckets[dest].push_back(std::move(reduced));
      }
    }
    members.clear();
  }

  // Greedy decode, last-eliminated variable first. Ties pick 0.
  std::vector<std::uint8_t> bits(n, 0);
  for (std::uint32_t k = n; k-- > 0;) {
    const VarIndex v = order.order[k];
    if (decode_tables[k].empty()) {
      bits[v] = 0;
      continue;
    }
    double s0 = 0.0, s1 = 0.0;
    bits[v] = 0;
    for (const Fn& t : decode_tables[k]) s0 += eval_fn(t, bits);
    bits[v] = 1;
    for (const Fn& t : decode_tables[k]) s1 += eval_fn(t, bits);
    bits[v] = s1 < s0 ? 1 : 0;
  }
  return {value, std::move(bits), split};
}

}  // namespace

std::vector<VarIndex> min_fill_order(const MultilinearPolynomial& p) {
  return min_fill_from_graph(interaction_graph({&p}, p.n_vars()));
}

std::vector<VarIndex> min_fill_order_union(const MultilinearPolynomial& a,
                                           const MultilinearPolynomial& b) {
  if (a.n_vars() != b.n_vars())
    throw std::invalid_argument("min_fill_order_union: variable count mismatch");
  return min_fill_from_graph(interaction_graph({&a, &b}, a.n_vars()));
}

std::uint32_t induced_width(const MultilinearPolynomial& p,
                            std::span<const VarIndex> order) {
  auto adj = interaction_graph({&p}, p.n_vars());
  std::vector<char> done(p.n_vars(), 0);
  std::uint32_t width = 0;
  for (VarIndex v : order) {
    std::vector<VarIndex> nb;
    for (VarIndex u = 0; u < p.n_vars(); ++u)
      if (!done[u] && u != v && adj[v][u]) nb.push_back(u);
    width = std::max<std::uint32_t>(width, static_cast<std::uint32_t>(nb.size()));
    for (std::size_t i = 0; i < nb.size(); ++i)
      for (std::size_t j = i + 1; j < nb.size(); ++j)
        adj[nb[i]][nb[j]] = adj[nb[j]][nb[i]] = 1;
    done[v] = 1;
  }
  return width;
}

MinResult bucket_elim_min(const MultilinearPolynomial& p,
                          const EliminationOrder& order) {
  auto r = eliminate(p, order, /*allow_split=*/false);
  return {r.value, std::move(r.assignment)};
}

double mini_bucket_min(const MultilinearPolynomial& p,
                       const EliminationOrder& order) {
  return eliminate(p, order, /*allow_split=*/true).value;
}

MinResult mini_bucket_min_with_assignment(const MultilinearPolynomial& p,
                                          const EliminationOrder& order) {
  auto r = eliminate(p, order, /*allow_split=*/true);
  return {r.value, std::move(r.assignment)};
}

LagrangianResult lagrangian_lower_bound_q(const CmpeInstance& inst,
                                          const LagrangianConfig& cfg) {
  if (cfg.steps < 1) throw std::invalid_argument("lagrangian: steps must be >= 1");
  EliminationOrder order{min_fill_order_union(inst.f, inst.g), cfg.ibound};
  const auto fg = MultilinearPolynomial::combine(1.0, inst.f, 1.0, inst.g);
  const bool exact = induced_width(fg, order.order) <= cfg.ibound;

  LagrangianResult res;
  res.bound = -kInf;
  double mu = 0.0;
  for (std::uint32_t k = 0; k < cfg.steps; ++k) {
    const auto p_mu = MultilinearPolynomial::combine(1.0, inst.f, 1.0 - mu, inst.g);
    const MinResult inner = exact ? bucket_elim_min(p_mu, order)
                                  : mini_bucket_min_with_assignment(p_mu, order);
    if (inner.value > res.bound) {
      res.bound = inner.value;
      res.mu_star = mu;
    }
    res.visited.push_back(inner.argmin);
    const double gy = inst.g.evaluate(bits_to_assignment(inner.argmin));
    const double eta = cfg.eta0 / std::sqrt(static_cast<double>(k + 1));
    mu = std::max(0.0, mu + eta * (-gy));
  }
  return res;
}

UpperBoundResult feasible_upper_bound_p(
    const CmpeInstance& inst, std::span<const std::vector<double>> candidates) {
  UpperBoundResult out;
  out.value = inst.u_f;
  for (const auto& cand : candidates) {
    const auto bits = round_half_up(cand);
    const auto y = bits_to_assignment(bits);
    if (inst.g.evaluate(y) > 0.0) continue;
    const double fy = inst.f.evaluate(y);
    if (!out.witness || fy < out.value) {
      out.value = fy;
      out.witness = bits;
    }
  }
  return out;
}

double compute_alpha(double p_upper, double q_lower, double u_f, double l_f) {
  if (p_upper <= 0.0)
    throw std::invalid_argument("compute_alpha: p_upper must be positive");
  const double cap = u_f / l_f;
  if (q_lower > 0.0) return std::min(p_upper / q_lower * 1.01, cap);
  return cap;
}

AlphaBound compute_alpha_bound(const CmpeInstance& inst,
                               const LagrangianConfig& cfg) {
  const LagrangianResult lag = lagrangian_lower_bound_q(inst, cfg);

  std::vector<std::vector<double>> candidates;
  candidates.reserve(lag.visited.size());
  for (const auto& bits : lag.visited)
    candidates.push_back(bits_to_assignment(bits));
  const UpperBoundResult ub = feasible_upper_bound_p(inst, candidates);

  AlphaBound out;
  out.p_upper = ub.value;
  out.q_lower = lag.bound;
  out.mu_star = lag.mu_star;
  out.feasible_witness = ub.witness;
  out.alpha = compute_alpha(ub.value, lag.bound, inst.u_f, inst.l_f);
  out.ratio_branch =
      lag.bound > 0.0 && ub.value / lag.bound * 1.01 <= inst.u_f / inst.l_f;
  return out;
}

}  // namespace cmpe
