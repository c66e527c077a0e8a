#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cmpe/poly.hpp"
#include "cmpe/rng.hpp"

namespace cmpe {

// Adds independent Gaussian(0, sigma2) noise to every table entry.
MarkovNetwork perturb_model(const MarkovNetwork& m1, double sigma2,
                            std::uint64_t seed);
MarkovNetwork perturb_model(const MarkovNetwork& m1, double sigma2, Rng& rng);

// Single-site Gibbs chain over the log-linear distribution induced by the
// polynomial. Variables listed in `clamped` stay fixed; the rest start
// uniformly at random, are swept in ascending index order, and the chain
// records one state every `thinning` sweeps after `burn_in` sweeps.
// Returned states are full assignments including the clamped values.
std::vector<std::vector<std::uint8_t>> gibbs_sample(
    const MultilinearPolynomial& p, const Evidence& clamped, std::size_t n,
    std::uint64_t burn_in, std::uint32_t thinning, Rng& rng);

std::vector<std::vector<std::uint8_t>> gibbs_sample(const MarkovNetwork& net,
                                                    std::size_t n,
                                                    std::uint64_t burn_in,
                                                    std::uint32_t thinning,
                                                    std::uint64_t seed);

// Draws 100 conditional samples of Y given the evidence from the
// m2-induced distribution, sorts them ascending by t-weight and returns the
// k-th order statistic (1-indexed), k = percentile. Valid percentiles are
// 10, 30, 60, 80, 90.
double select_q(const MultilinearPolynomial& t, const Evidence& evidence,
                int percentile, std::uint64_t burn_in, std::uint32_t thinning,
                Rng& rng);
double select_q(const MarkovNetwork& m2, const Evidence& evidence,
                int percentile, std::uint64_t seed);

struct DatasetSpec {
  std::string base_network_path;
  double sigma2 = 0.1;
  double evidence_frac = 0.6;
  int q_percentile = 80;
  std::size_t n_samples = 10000;
  std::size_t train_count = 9000;
  std::uint64_t seed = 0;
  std::uint64_t burn_in = 1000;
  std::uint32_t thinning = 10;
};

struct DatasetExample {
  std::uint64_t example_id = 0;
  std::vector<std::uint8_t> x;  // evidence values, in evidence_vars order
};

struct Dataset {
  std::vector<VarIndex> evidence_vars;  // fixed per dataset, sorted
  double q = 0.0;
  int percentile = 0;
  std::size_t train_count = 0;
  std::vector<DatasetExample> examples;

  Evidence evidence_of(std::size_t i) const;
};

// Samples full assignments from m1, projects them onto a fixed random
// evidence subset (floor(frac * n) variables chosen once), and selects a
// single q shared by the whole dataset from the m2-conditional given the
// first example's evidence. First train_count examples are the train split.
Dataset build_dataset(const DatasetSpec& spec, const MarkovNetwork& m1,
                      const MarkovNetwork& m2);

// Deterministic benchmark generator: rows x cols grid with unary and
// pairwise log-potentials drawn from Normal(shift, 1).
MarkovNetwork make_grid_network(std::uint32_t rows, std::uint32_t cols,
                                std::uint64_t seed, double shift = 2.0);

}  // namespace cmpe
