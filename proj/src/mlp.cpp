#include "cmpe/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "cmpe/kernels.hpp"

namespace cmpe {

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void apply_activation(const MlpModel& model, std::size_t layer,
                      std::span<const double> z, std::span<double> a) {
  const bool last = layer + 1 == model.num_layers();
  if (!last) {
    for (std::size_t i = 0; i < z.size(); ++i) a[i] = z[i] > 0.0 ? z[i] : 0.0;
  } else if (model.logistic_output) {
    for (std::size_t i = 0; i < z.size(); ++i) a[i] = logistic(z[i]);
  } else {
    for (std::size_t i = 0; i < z.size(); ++i) a[i] = z[i];
  }
}

}  // namespace

MlpModel MlpModel::init(std::vector<std::uint32_t> dims, bool logistic_output,
                        Rng& rng) {
  if (dims.size() < 2) throw std::invalid_argument("MlpModel: need >= 2 dims");
  MlpModel m;
  m.dims = std::move(dims);
  m.logistic_output = logistic_output;
  for (std::size_t l = 0; l + 1 < m.dims.size(); ++l) {
    const std::size_t fan_in = m.dims[l], fan_out = m.dims[l + 1];
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::vector<double> w(fan_in * fan_out);
    for (auto& x : w) x = rng.uniform(-a, a);
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(fan_out, 0.0);
  }
  return m;
}

std::vector<double> MlpModel::forward(std::span<const double> x) const {
  if (x.size() != input_dim())
    throw std::invalid_argument("forward: input dimension mismatch");
  const auto& ops = kernels::active_ops();
  std::vector<double> a(x.begin(), x.end());
  std::vector<double> z;
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const std::size_t rows = dims[l + 1], cols = dims[l];
    z.resize(rows);
    ops.matvec(weights[l].data(), rows, cols, a.data(), biases[l].data(), z.data());
    a.resize(rows);
    apply_activation(*this, l, z, a);
  }
  return a;
}

MlpGradients MlpGradients::zeros_like(const MlpModel& model) {
  MlpGradients g;
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    g.weights.emplace_back(model.weights[l].size(), 0.0);
    g.biases.emplace_back(model.biases[l].size(), 0.0);
  }
  return g;
}

void MlpGradients::zero() {
  for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : biases) std::fill(b.begin(), b.end(), 0.0);
}

void MlpGradients::scale(double a) {
  const auto& ops = kernels::active_ops();
  for (auto& w : weights) ops.scal(w.data(), a, w.size());
  for (auto& b : biases) ops.scal(b.data(), a, b.size());
}

void forward_batch(const MlpModel& model, std::span<const double> x,
                   std::size_t batch, BatchWorkspace& ws) {
  if (x.size() != batch * model.input_dim())
    throw std::invalid_argument("forward_batch: input size mismatch");
  const auto& ops = kernels::active_ops();
  const std::size_t L = model.num_layers();
  ws.batch = batch;
  ws.acts.resize(L + 1);
  ws.zs.resize(L);
  ws.acts[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t rows = model.dims[l + 1], cols = model.dims[l];
    ws.zs[l].resize(batch * rows);
    ws.acts[l + 1].resize(batch * rows);
    for (std::size_t b = 0; b < batch; ++b) {
      double* z = ws.zs[l].data() + b * rows;
      ops.matvec(model.weights[l].data(), rows, cols,
                 ws.acts[l].data() + b * cols, model.biases[l].data(), z);
      apply_activation(model, l, {z, rows},
                       {ws.acts[l + 1].data() + b * rows, rows});
    }
  }
}

void backward_batch(const MlpModel& model, const BatchWorkspace& ws,
                    std::span<const double> upstream, MlpGradients& grads) {
  const std::size_t L = model.num_layers();
  const std::size_t batch = ws.batch;
  const std::size_t out_dim = model.output_dim();
  if (upstream.size() != batch * out_dim)
    throw std::invalid_argument("backward_batch: upstream size mismatch");
  const auto& ops = kernels::active_ops();

  std::vector<double> delta(upstream.begin(), upstream.end());
  if (model.logistic_output) {
    for (std::size_t i = 0; i < delta.size(); ++i) {
      const double y = ws.acts[L][i];
      delta[i] *= y * (1.0 - y);
    }
  }

  std::vector<double> next;
  for (std::size_t l = L; l-- > 0;) {
    const std::size_t rows = model.dims[l + 1], cols = model.dims[l];
    for (std::size_t b = 0; b < batch; ++b) {
      const double* d = delta.data() + b * rows;
      const double* a = ws.acts[l].data() + b * cols;
      for (std::size_t r = 0; r < rows; ++r) {
        if (d[r] != 0.0)
          ops.axpy(grads.weights[l].data() + r * cols, d[r], a, cols);
        grads.biases[l][r] += d[r];
      }
    }
    if (l == 0) break;
    next.assign(batch * cols, 0.0);
    for (std::size_t b = 0; b < batch; ++b) {
      const double* d = delta.data() + b * rows;
      double* nd = next.data() + b * cols;
      for (std::size_t r = 0; r < rows; ++r)
        if (d[r] != 0.0)
          ops.axpy(nd, d[r], model.weights[l].data() + r * cols, cols);
      const double* z = ws.zs[l - 1].data() + b * cols;
      for (std::size_t c = 0; c < cols; ++c)
        if (z[c] <= 0.0) nd[c] = 0.0;
    }
    delta = std::move(next);
  }
}

MlpGradients mlp_backward(const MlpModel& model, std::span<const double> x,
                          std::span<const double> upstream) {
  BatchWorkspace ws;
  forward_batch(model, x, 1, ws);
  MlpGradients g = MlpGradients::zeros_like(model);
  backward_batch(model, ws, upstream, g);
  return g;
}

AdamState AdamState::init(const MlpModel& model, double lr) {
  AdamState s;
  s.lr = lr;
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    s.m_w.emplace_back(model.weights[l].size(), 0.0);
    s.v_w.emplace_back(model.weights[l].size(), 0.0);
    s.m_b.emplace_back(model.biases[l].size(), 0.0);
    s.v_b.emplace_back(model.biases[l].size(), 0.0);
  }
  return s;
}

void adam_step(AdamState& state, MlpModel& model, const MlpGradients& grads) {
  if (grads.weights.size() != model.num_layers())
    throw std::invalid_argument("adam_step: gradient shape mismatch");
  const auto& ops = kernels::active_ops();
  ++state.step_count;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    if (grads.weights[l].size() != model.weights[l].size() ||
        grads.biases[l].size() != model.biases[l].size())
      throw std::invalid_argument("adam_step: gradient shape mismatch");
    ops.adam_update(model.weights[l].data(), state.m_w[l].data(),
                    state.v_w[l].data(), grads.weights[l].data(),
                    model.weights[l].size(), state.lr, state.beta1, state.beta2,
                    state.eps, bc1, bc2);
    ops.adam_update(model.biases[l].data(), state.m_b[l].data(),
                    state.v_b[l].data(), grads.biases[l].data(),
                    model.biases[l].size(), state.lr, state.beta1, state.beta2,
                    state.eps, bc1, bc2);
  }
}

double PlateauScheduler::update(double& lr, double epoch_loss) {
  const bool first = !(best < std::numeric_limits<double>::infinity());
  const double margin = first ? 0.0 : rel_tol * std::abs(best);
  if (first || epoch_loss < best - margin) {
    best = epoch_loss;
    streak = 0;
  } else {
    ++streak;
  }
  if (cooldown > 0) {
    --cooldown;
  } else if (streak >= patience) {
    lr *= factor;
    cooldown = patience;
    streak = 0;
  }
  return lr;
}

double lr_plateau(PlateauScheduler sched, double lr,
                  std::span<const double> epoch_losses) {
  for (double loss : epoch_losses) sched.update(lr, loss);
  return lr;
}

}  // namespace cmpe
