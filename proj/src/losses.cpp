#include "cmpe/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cmpe {

namespace {

void require_label(const LossContext& ctx) {
  if (!ctx.label)
    throw std::invalid_argument("supervised loss requires a label");
}

void require_instance(const LossContext& ctx) {
  if (!ctx.inst) throw std::invalid_argument("loss requires a CmpeInstance");
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::mse: return "mse";
    case LossKind::mae: return "mae";
    case LossKind::sl_pen: return "sl-pen";
    case LossKind::ssl_pen: return "ssl-pen";
    case LossKind::pdl: return "pdl";
    case LossKind::ss_cmpe: return "ss-cmpe";
    case LossKind::ss_cmpe_pen: return "ss-cmpe-pen";
  }
  return "unknown";
}

std::optional<LossKind> loss_kind_from_string(const std::string& name) {
  if (name == "mse") return LossKind::mse;
  if (name == "mae") return LossKind::mae;
  if (name == "sl-pen") return LossKind::sl_pen;
  if (name == "ssl-pen") return LossKind::ssl_pen;
  if (name == "pdl") return LossKind::pdl;
  if (name == "ss-cmpe") return LossKind::ss_cmpe;
  if (name == "ss-cmpe-pen") return LossKind::ss_cmpe_pen;
  return std::nullopt;
}

bool loss_is_supervised(LossKind k) {
  return k == LossKind::mse || k == LossKind::mae || k == LossKind::sl_pen;
}

bool loss_needs_bounds(LossKind k) {
  return k == LossKind::ss_cmpe || k == LossKind::ss_cmpe_pen;
}

double loss_mse(const LossContext& ctx, std::span<const double> yhat,
                std::span<double> grad) {
  require_label(ctx);
  const auto& y = *ctx.label;
  const double k = static_cast<double>(yhat.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < yhat.size(); ++i) {
    const double d = yhat[i] - y[i];
    acc += d * d;
    grad[i] = 2.0 * d / k;
  }
  return acc / k;
}

double loss_mae(const LossContext& ctx, std::span<const double> yhat,
                std::span<double> grad) {
  require_label(ctx);
  const auto& y = *ctx.label;
  const double k = static_cast<double>(yhat.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < yhat.size(); ++i) {
    const double d = yhat[i] - y[i];
    acc += std::abs(d);
    // subgradient at 0 fixed to 0
    grad[i] = (d > 0.0 ? 1.0 : d < 0.0 ? -1.0 : 0.0) / k;
  }
  return acc / k;
}

double loss_supervised_penalty(const LossContext& ctx,
                               std::span<const double> yhat,
                               std::span<double> grad) {
  require_instance(ctx);
  double value = loss_mse(ctx, yhat, grad);
  const double g = ctx.inst->g.evaluate(yhat);
  if (g > 0.0) {
    value += ctx.lambda * g;
    const auto dg = ctx.inst->g.gradient(yhat);
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += ctx.lambda * dg[i];
  }
  return value;
}

double loss_ssl_penalty(const LossContext& ctx, std::span<const double> yhat,
                        std::span<double> grad) {
  require_instance(ctx);
  const double f = ctx.inst->f.evaluate(yhat);
  const double g = ctx.inst->g.evaluate(yhat);
  const double hinge = std::max(0.0, g);
  ctx.inst->f.gradient(yhat, grad);
  if (hinge > 0.0) {
    const auto dg = ctx.inst->g.gradient(yhat);
    for (std::size_t i = 0; i < grad.size(); ++i)
      grad[i] += ctx.lambda * hinge * dg[i];
  }
  return f + 0.5 * ctx.lambda * hinge * hinge;
}

double loss_pdl_primal(const LossContext& ctx, std::span<const double> yhat,
                       std::span<double> grad) {
  require_instance(ctx);
  const double f = ctx.inst->f.evaluate(yhat);
  const double g = ctx.inst->g.evaluate(yhat);
  const double hinge = std::max(0.0, g);
  ctx.inst->f.gradient(yhat, grad);
  const auto dg = ctx.inst->g.gradient(yhat);
  for (std::size_t i = 0; i < grad.size(); ++i)
    grad[i] += (ctx.lambda * hinge + ctx.mu) * dg[i];
  return f + 0.5 * ctx.lambda * hinge * hinge + ctx.mu * g;
}

double loss_pdl_dual(double mu_hat, double target, double& grad) {
  const double d = mu_hat - target;
  grad = d > 0.0 ? 1.0 : d < 0.0 ? -1.0 : 0.0;
  return std::abs(d);
}

double loss_sscmpe(const LossContext& ctx, std::span<const double> yhat,
                   std::span<double> grad) {
  require_instance(ctx);
  const double f = ctx.inst->f.evaluate(yhat);
  const double g = ctx.inst->g.evaluate(yhat);
  if (g <= 0.0) {
    ctx.inst->f.gradient(yhat, grad);
    return f;
  }
  ctx.inst->f.gradient(yhat, grad);
  const auto dg = ctx.inst->g.gradient(yhat);
  for (std::size_t i = 0; i < grad.size(); ++i)
    grad[i] = ctx.alpha * (grad[i] + dg[i]);
  return ctx.alpha * (f + g);
}

double loss_sscmpe_smooth(const LossContext& ctx, std::span<const double> yhat,
                          std::span<double> grad) {
  require_instance(ctx);
  if (ctx.beta < 0.0) throw std::invalid_argument("beta must be >= 0");
  const double f = ctx.inst->f.evaluate(yhat);
  const double g = ctx.inst->g.evaluate(yhat);
  const double s = logistic(ctx.beta * g);
  const double hinge = std::max(0.0, g);
  const double infeasible_part = ctx.alpha * (f + hinge);

  ctx.inst->f.gradient(yhat, grad);
  const auto dg = ctx.inst->g.gradient(yhat);
  const double sprime = ctx.beta * s * (1.0 - s);
  for (std::size_t i = 0; i < grad.size(); ++i) {
    double gi = (1.0 - s) * grad[i];                       // (1-s) df
    gi += s * ctx.alpha * (grad[i] + (g > 0.0 ? dg[i] : 0.0));
    gi += sprime * dg[i] * (infeasible_part - f);          // sigma' term
    grad[i] = gi;
  }
  return (1.0 - s) * f + s * infeasible_part;
}

double loss_sscmpe_pen(const LossContext& ctx, std::span<const double> yhat,
                       std::span<double> grad) {
  require_instance(ctx);
  if (ctx.rho < 0.0) throw std::invalid_argument("rho must be >= 0");
  const double f = ctx.inst->f.evaluate(yhat);
  const double g = ctx.inst->g.evaluate(yhat);
  if (g <= 0.0) {
    ctx.inst->f.gradient(yhat, grad);
    return f;
  }
  ctx.inst->f.gradient(yhat, grad);
  const auto dg = ctx.inst->g.gradient(yhat);
  for (std::size_t i = 0; i < grad.size(); ++i)
    grad[i] = ctx.alpha * (grad[i] + dg[i]) + 2.0 * ctx.rho * g * dg[i];
  return ctx.alpha * (f + g) + ctx.rho * g * g;
}

double update_lambda_subgradient(const LossContext& ctx,
                                 std::span<const double> yhat) {
  require_instance(ctx);
  const double g = ctx.inst->g.evaluate(yhat);
  return std::min(ctx.lambda + ctx.rho * std::max(0.0, g), ctx.lambda_max);
}

double update_mu_alm(const LossContext& ctx, std::span<const double> y) {
  require_instance(ctx);
  const double g = ctx.inst->g.evaluate(y);
  return std::max(0.0, ctx.mu + ctx.lambda * g);
}

}  // namespace cmpe
