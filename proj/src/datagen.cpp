#include "cmpe/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cmpe {

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

bool valid_percentile(int p) {
  return p == 10 || p == 30 || p == 60 || p == 80 || p == 90;
}

}  // namespace

MarkovNetwork perturb_model(const MarkovNetwork& m1, double sigma2, Rng& rng) {
  if (sigma2 < 0.0) throw std::invalid_argument("perturb_model: sigma2 < 0");
  MarkovNetwork m2 = m1;
  const double sigma = std::sqrt(sigma2);
  for (auto& pot : m2.potentials)
    for (auto& v : pot.table) v += rng.normal(0.0, sigma);
  return m2;
}

MarkovNetwork perturb_model(const MarkovNetwork& m1, double sigma2,
                            std::uint64_t seed) {
  Rng rng(seed);
  return perturb_model(m1, sigma2, rng);
}

std::vector<std::vector<std::uint8_t>> gibbs_sample(
    const MultilinearPolynomial& p, const Evidence& clamped, std::size_t n,
    std::uint64_t burn_in, std::uint32_t thinning, Rng& rng) {
  if (n < 1) throw std::invalid_argument("gibbs_sample: n must be >= 1");
  if (thinning < 1) throw std::invalid_argument("gibbs_sample: thinning must be >= 1");
  const std::uint32_t nv = p.n_vars();

  std::vector<char> fixed(nv, 0);
  std::vector<double> z(nv, 0.0);
  for (const auto& [v, val] : clamped) {
    if (v >= nv) throw std::invalid_argument("gibbs_sample: clamped index out of range");
    fixed[v] = 1;
    z[v] = val;
  }
  std::vector<VarIndex> free_vars;
  for (VarIndex v = 0; v < nv; ++v)
    if (!fixed[v]) free_vars.push_back(v);
  for (VarIndex v : free_vars) z[v] = rng.bernoulli(0.5) ? 1.0 : 0.0;

  // Terms touching each variable; the full conditional of v needs only the
  // difference p(z | z_v=1) - p(z | z_v=0) which these terms determine.
  std::vector<std::vector<std::uint32_t>> touching(nv);
  for (std::size_t t = 0; t < p.num_terms(); ++t)
    for (VarIndex v : p.term_vars(t)) touching[v].push_back(static_cast<std::uint32_t>(t));

  auto sweep = [&]() {
    for (VarIndex v : free_vars) {
      double delta = 0.0;
      for (std::uint32_t t : touching[v]) {
        double prod = p.term_weight(t);
        for (VarIndex u : p.term_vars(t))
          if (u != v) prod *= z[u];
        delta += prod;
      }
      z[v] = rng.uniform() < logistic(delta) ? 1.0 : 0.0;
    }
  };

  for (std::uint64_t s = 0; s < burn_in; ++s) sweep();

  std::vector<std::vector<std::uint8_t>> samples;
  samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::uint32_t s = 0; s < thinning; ++s) sweep();
    std::vector<std::uint8_t> bits(nv);
    for (VarIndex v = 0; v < nv; ++v) bits[v] = z[v] != 0.0 ? 1 : 0;
    samples.push_back(std::move(bits));
  }
  return samples;
}

std::vector<std::vector<std::uint8_t>> gibbs_sample(const MarkovNetwork& net,
                                                    std::size_t n,
                                                    std::uint64_t burn_in,
                                                    std::uint32_t thinning,
                                                    std::uint64_t seed) {
  Rng rng(seed);
  return gibbs_sample(to_polynomial(net), {}, n, burn_in, thinning, rng);
}

double select_q(const MultilinearPolynomial& t, const Evidence& evidence,
                int percentile, std::uint64_t burn_in, std::uint32_t thinning,
                Rng& rng) {
  if (!valid_percentile(percentile))
    throw std::invalid_argument("select_q: percentile must be one of 10/30/60/80/90");
  const auto samples = gibbs_sample(t, evidence, 100, burn_in, thinning, rng);
  std::vector<double> weights;
  weights.reserve(samples.size());
  for (const auto& s : samples) weights.push_back(t.evaluate(bits_to_assignment(s)));
  std::sort(weights.begin(), weights.end());
  return weights[static_cast<std::size_t>(percentile) - 1];
}

double select_q(const MarkovNetwork& m2, const Evidence& evidence,
                int percentile, std::uint64_t seed) {
  Rng rng(seed);
  return select_q(to_polynomial(m2), evidence, percentile, 1000, 10, rng);
}

Evidence Dataset::evidence_of(std::size_t i) const {
  const auto& ex = examples.at(i);
  Evidence ev;
  ev.reserve(evidence_vars.size());
  for (std::size_t j = 0; j < evidence_vars.size(); ++j)
    ev.emplace_back(evidence_vars[j], static_cast<double>(ex.x[j]));
  return ev;
}

Dataset build_dataset(const DatasetSpec& spec, const MarkovNetwork& m1,
                      const MarkovNetwork& m2) {
  if (spec.evidence_frac <= 0.0 || spec.evidence_frac >= 1.0)
    throw std::invalid_argument("build_dataset: evidence_frac must be in (0,1)");
  if (!valid_percentile(spec.q_percentile))
    throw std::invalid_argument("build_dataset: invalid q percentile");
  if (spec.train_count > spec.n_samples)
    throw std::invalid_argument("build_dataset: train_count > n_samples");
  if (m1.n_vars != m2.n_vars)
    throw std::invalid_argument("build_dataset: model variable count mismatch");

  const Rng master(spec.seed);
  const std::uint32_t n = m1.n_vars;

  Dataset ds;
  ds.percentile = spec.q_percentile;
  ds.train_count = spec.train_count;

  // Evidence subset: floor(frac*n) distinct variables, fixed per dataset.
  const auto k = static_cast<std::uint32_t>(spec.evidence_frac * n);
  {
    Rng rng = master.stream(rng_tag::evidence_subset);
    std::vector<VarIndex> all(n);
    std::iota(all.begin(), all.end(), 0);
    for (std::uint32_t i = 0; i < k; ++i) {
      const auto j = i + rng.uniform_int(n - i);
      std::swap(all[i], all[j]);
    }
    ds.evidence_vars.assign(all.begin(), all.begin() + k);
    std::sort(ds.evidence_vars.begin(), ds.evidence_vars.end());
  }

  const auto h = to_polynomial(m1);
  {
    Rng rng = master.stream(rng_tag::gibbs_data);
    const auto chain =
        gibbs_sample(h, {}, spec.n_samples, spec.burn_in, spec.thinning, rng);
    ds.examples.reserve(chain.size());
    for (std::size_t i = 0; i < chain.size(); ++i) {
      DatasetExample ex;
      ex.example_id = i;
      ex.x.reserve(ds.evidence_vars.size());
      for (VarIndex v : ds.evidence_vars) ex.x.push_back(chain[i][v]);
      ds.examples.push_back(std::move(ex));
    }
  }

  // One q per dataset, drawn from the m2-conditional given the first
  // example's evidence.
  {
    Rng rng = master.stream(rng_tag::gibbs_q);
    ds.q = select_q(to_polynomial(m2), ds.evidence_of(0), spec.q_percentile,
                    spec.burn_in, spec.thinning, rng);
  }
  return ds;
}

MarkovNetwork make_grid_network(std::uint32_t rows, std::uint32_t cols,
                                std::uint64_t seed, double shift) {
  Rng rng(seed);
  MarkovNetwork net;
  net.n_vars = rows * cols;
  net.cardinalities.assign(net.n_vars, 2);
  auto id = [cols](std::uint32_t r, std::uint32_t c) { return r * cols + c; };
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (std::uint32_t c = 0; c < cols; ++c) {
      Potential unary;
      unary.scope = {id(r, c)};
      unary.table = {rng.normal(shift, 1.0), rng.normal(shift, 1.0)};
      net.potentials.push_back(std::move(unary));
    }
  }
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (std::uint32_t c = 0; c < cols; ++c) {
      if (c + 1 < cols) {
        Potential p;
        p.scope = {id(r, c), id(r, c + 1)};
        p.table = {rng.normal(shift, 1.0), rng.normal(shift, 1.0),
                   rng.normal(shift, 1.0), rng.normal(shift, 1.0)};
        net.potentials.push_back(std::move(p));
      }
      if (r + 1 < rows) {
        Potential p;
        p.scope = {id(r, c), id(r + 1, c)};
        p.table = {rng.normal(shift, 1.0), rng.normal(shift, 1.0),
                   rng.normal(shift, 1.0), rng.normal(shift, 1.0)};
        net.potentials.push_back(std::move(p));
      }
    }
  }
  return net;
}

}  // namespace cmpe
