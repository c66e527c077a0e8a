#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cmpe/poly.hpp"

namespace cmpe {

// Training objective selector. The CLI names are the contract:
// mse, mae, sl-pen, ssl-pen, pdl, ss-cmpe, ss-cmpe-pen.
enum class LossKind { mse, mae, sl_pen, ssl_pen, pdl, ss_cmpe, ss_cmpe_pen };

std::string to_string(LossKind k);
std::optional<LossKind> loss_kind_from_string(const std::string& name);
bool loss_is_supervised(LossKind k);
bool loss_needs_bounds(LossKind k);

// Per-example state threaded through every loss. Gradients returned by the
// losses are with respect to the network output yhat; the trainer chains
// them through the network.
struct LossContext {
  const CmpeInstance* inst = nullptr;
  double alpha = 1.0;        // infeasible-branch scale of the consistent loss
  double beta = 0.0;         // sigmoid steepness of the smooth loss
  double rho = 0.0;          // penalty weight / Lagrangian step size
  double lambda = 0.0;       // per-example penalty coefficient, >= 0
  double lambda_max = 1e4;
  double mu = 0.0;           // per-example ALM multiplier
  const std::vector<double>* label = nullptr;  // y* for supervised losses
};

// Every loss returns its value and writes d(loss)/d(yhat) into grad
// (grad.size() == yhat.size()).

double loss_mse(const LossContext& ctx, std::span<const double> yhat,
                std::span<double> grad);
double loss_mae(const LossContext& ctx, std::span<const double> yhat,
                std::span<double> grad);

// MSE plus lambda * max(0, g(yhat)).
double loss_supervised_penalty(const LossContext& ctx,
                               std::span<const double> yhat,
                               std::span<double> grad);

// f(yhat) + (lambda/2) * max(0, g(yhat))^2.
double loss_ssl_penalty(const LossContext& ctx, std::span<const double> yhat,
                        std::span<double> grad);

// f + (lambda/2) max(0,g)^2 + mu g  (primal network objective).
double loss_pdl_primal(const LossContext& ctx, std::span<const double> yhat,
                       std::span<double> grad);

// |mu_hat - target| with the dual target max{0, mu_k + lambda g} computed by
// the caller from a frozen primal pass. Returns value, writes d/d(mu_hat).
double loss_pdl_dual(double mu_hat, double target, double& grad);

// Piecewise consistent loss: f when g <= 0, alpha (f + g) otherwise.
double loss_sscmpe(const LossContext& ctx, std::span<const double> yhat,
                   std::span<double> grad);

// Sigmoid-blended continuous relaxation of loss_sscmpe.
double loss_sscmpe_smooth(const LossContext& ctx, std::span<const double> yhat,
                          std::span<double> grad);

// loss_sscmpe with rho * max(0,g)^2 added to the infeasible branch.
double loss_sscmpe_pen(const LossContext& ctx, std::span<const double> yhat,
                       std::span<double> grad);

// lambda <- min(lambda + rho * max(0, g(yhat)), lambda_max); the subgradient
// update applied once per epoch per example encountered in a minibatch.
double update_lambda_subgradient(const LossContext& ctx,
                                 std::span<const double> yhat);

// mu <- max(0, mu + lambda * g(y)).
double update_mu_alm(const LossContext& ctx, std::span<const double> y);

}  // namespace cmpe
