#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cmpe/bounds.hpp"
#include "cmpe/datagen.hpp"
#include "cmpe/losses.hpp"
#include "cmpe/mlp.hpp"
#include "cmpe/oracle.hpp"
#include "cmpe/poly.hpp"

namespace cmpe {

// On-disk layout of a dataset directory:
//   manifest.json, dataset.jsonl, m2.uai (when generated),
//   labels.jsonl, bounds.jsonl,
//   model-<loss>.json, train-log-<loss>.jsonl,
//   report-<loss>.json, report-<loss>.timing.json
//
// report-<loss>.json carries only deterministic content; wall-clock timings
// live in the .timing.json sidecar so that equal-seed runs are byte-equal.

struct Manifest {
  int version = 1;
  std::string model_path;
  std::string model2_path;  // relative to the dataset dir when generated
  bool prob_tables = false;
  double sigma2 = 0.1;
  double evidence_frac = 0.6;
  int percentile = 80;
  double q = 0.0;
  std::size_t n_samples = 0;
  std::size_t train_count = 0;
  std::uint64_t seed = 0;
  std::uint64_t burn_in = 1000;
  std::uint32_t thinning = 10;
  std::vector<VarIndex> evidence_vars;
};

struct LabelRecord {
  std::uint64_t example_id = 0;
  OracleStatus status = OracleStatus::infeasible;
  std::optional<std::vector<std::uint8_t>> y_star;
  std::optional<double> p_star;
  std::optional<double> h_value;
};

struct BoundsRecord {
  std::uint64_t example_id = 0;
  double p_upper = 0.0;
  double q_lower = 0.0;
  double alpha = 0.0;
  double mu_star = 0.0;
  bool ratio_branch = false;
};

// A dataset directory pulled into memory, with the compiled network
// polynomials; instances are conditioned per example on demand.
struct LoadedDataset {
  std::string dir;
  Manifest manifest;
  MarkovNetwork m1, m2;
  MultilinearPolynomial h, t;
  Dataset data;

  static LoadedDataset load(const std::string& dir);
  CmpeInstance instance(std::size_t i) const;
  std::size_t size() const { return data.examples.size(); }
  std::size_t train_count() const { return data.train_count; }
};

struct GenOptions {
  std::string model_path;
  std::string model2_path;  // optional explicit m2; empty -> perturb m1
  bool prob_tables = false;
  DatasetSpec spec;
  std::string out_dir;
};

void stage_gen(const GenOptions& opts);

struct OracleOptions {
  std::string dir;
  unsigned workers = 0;  // 0 -> hardware concurrency
  std::uint64_t node_budget = 10'000'000;
  std::uint32_t brute_force_limit = 20;  // |Y| beyond this uses branch&bound
};

void stage_oracle(const OracleOptions& opts);

struct BoundsOptions {
  std::string dir;
  unsigned workers = 0;
  LagrangianConfig lagrangian;
};

void stage_bounds(const BoundsOptions& opts);

std::vector<LabelRecord> load_labels(const std::string& dir);
std::vector<BoundsRecord> load_bounds(const std::string& dir);

struct TrainOptions {
  LossKind loss = LossKind::ss_cmpe;
  std::uint32_t epochs = 300;
  std::uint32_t batch = 128;
  std::uint64_t seed = 0;
  double lr = 1e-3;
  double beta = 10.0;
  double rho = 1.0;
  double lambda_init = 1.0;
  double lambda_max = 1e4;
  double mu_init = 0.0;
  std::uint32_t plateau_patience = 10;
  double plateau_factor = 0.9;
  double plateau_rel_tol = 1e-4;
  std::uint32_t pdl_growth_every = 10;
  double pdl_growth_factor = 2.0;
  std::vector<std::uint32_t> hidden = {128, 256, 512};
};

struct EpochLog {
  std::uint32_t epoch = 0;
  double loss = 0.0;
  double lr = 0.0;
  double seconds = 0.0;
};

struct TrainOutput {
  MlpModel model;
  AdamState adam;
  std::optional<MlpModel> dual;  // pdl only
  std::array<std::uint64_t, 4> rng_state{};
  double train_seconds = 0.0;
  std::vector<EpochLog> log;
};

TrainOutput train_loop(const LoadedDataset& ds, const TrainOptions& opts,
                       const std::vector<LabelRecord>* labels,
                       const std::vector<BoundsRecord>* bounds);

// Runs train_loop and writes model-<loss>.json + train-log-<loss>.jsonl.
void stage_train(const std::string& dir, const TrainOptions& opts);

struct EvalRecordRow {
  std::uint64_t example_id = 0;
  std::vector<std::uint8_t> y;
  double h_value = 0.0;
  double p_star_h = 0.0;
  double gap = 0.0;
  bool violated = false;
  double g_value = 0.0;
};

struct EvalAggregates {
  double gap_mean = 0.0, gap_std = 0.0;                    // raw signed gap
  double gap_feasible_mean = 0.0, gap_feasible_std = 0.0;  // g <= 0 outputs
  double viol_mean = 0.0, viol_std = 0.0;
  std::size_t n = 0, n_feasible = 0, n_skipped = 0;
};

struct EvalReport {
  std::string method;
  std::vector<EvalRecordRow> records;
  EvalAggregates agg;
};

using Predictor = std::function<std::vector<double>(std::span<const double>)>;

// Rounds predictor outputs half-up, flags g > 0 as violations and reports
// the optimality gap (h(y*) - h(yhat)) / |h(y*)| in maximization units.
// Requires an optimal label for every test example unless skip_nonoptimal.
EvalReport evaluate_model(const Predictor& predict, const LoadedDataset& ds,
                          const std::vector<LabelRecord>& labels,
                          const std::string& method,
                          bool skip_nonoptimal = false);

struct EvalOptions {
  std::string dir;
  std::string loss_name;      // picks model-<loss>.json
  bool skip_nonoptimal = false;
};

void stage_eval(const EvalOptions& opts);

// Reads report JSONs (plus .timing.json sidecars when present) and renders
// the comparison table: method,gap_mean,gap_std,viol_mean,viol_std,train_s,infer_s
std::string compare_reports(const std::vector<std::string>& report_paths);

// Checkpoint IO (versioned JSON blob: dims, parameters, Adam state, RNG
// state, metadata).
struct Checkpoint {
  MlpModel model;
  AdamState adam;
  std::optional<MlpModel> dual;
  std::array<std::uint64_t, 4> rng_state{};
  std::string loss_name;
  double train_seconds = 0.0;
  std::uint32_t epochs = 0;
  std::uint64_t seed = 0;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace cmpe
