#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "cmpe/rng.hpp"

namespace cmpe {

// Fully connected network with rectifier hidden layers and, by default, a
// logistic output layer so every output lands in (0,1). Weight matrices are
// row-major, one row per output unit.
struct MlpModel {
  std::vector<std::uint32_t> dims;
  bool logistic_output = true;
  std::vector<std::vector<double>> weights;  // [l]: dims[l+1] x dims[l]
  std::vector<std::vector<double>> biases;   // [l]: dims[l+1]

  // Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases.
  static MlpModel init(std::vector<std::uint32_t> dims, bool logistic_output,
                       Rng& rng);

  std::size_t num_layers() const { return weights.size(); }
  std::uint32_t input_dim() const { return dims.front(); }
  std::uint32_t output_dim() const { return dims.back(); }

  std::vector<double> forward(std::span<const double> x) const;
};

struct MlpGradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  static MlpGradients zeros_like(const MlpModel& model);
  void zero();
  void scale(double a);
};

// Per-layer activations retained for backprop, batch-major:
// acts[l][b * dims[l] + j]. acts[0] is the input batch.
struct BatchWorkspace {
  std::size_t batch = 0;
  std::vector<std::vector<double>> acts;
  std::vector<std::vector<double>> zs;
};

// X is batch x input_dim row-major. Outputs land in ws.acts.back().
void forward_batch(const MlpModel& model, std::span<const double> x,
                   std::size_t batch, BatchWorkspace& ws);

// upstream is batch x output_dim of dL/dyhat; accumulates exact reverse-mode
// gradients into grads (caller zeroes).
void backward_batch(const MlpModel& model, const BatchWorkspace& ws,
                    std::span<const double> upstream, MlpGradients& grads);

// Single-example wrappers.
MlpGradients mlp_backward(const MlpModel& model, std::span<const double> x,
                          std::span<const double> upstream);

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step_count = 0;
  std::vector<std::vector<double>> m_w, v_w, m_b, v_b;

  static AdamState init(const MlpModel& model, double lr = 1e-3);
};

// Standard bias-corrected Adam update.
void adam_step(AdamState& state, MlpModel& model, const MlpGradients& grads);

// Reduce-on-plateau rule: when the best epoch loss has not improved by a
// relative 1e-4 for `patience` epochs, lr *= factor, with a cooldown of
// `patience` epochs between decays.
struct PlateauScheduler {
  std::uint32_t patience = 10;
  double factor = 0.9;
  double rel_tol = 1e-4;

  double best = std::numeric_limits<double>::infinity();
  std::uint32_t streak = 0;
  std::uint32_t cooldown = 0;

  // Feeds one epoch loss; mutates lr in place and returns it.
  double update(double& lr, double epoch_loss);
};

// Convenience for tests: runs the scheduler over a loss sequence and
// returns the final learning rate.
double lr_plateau(PlateauScheduler sched, double lr,
                  std::span<const double> epoch_losses);

}  // namespace cmpe
