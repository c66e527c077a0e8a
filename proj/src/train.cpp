#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "cmpe/pipeline.hpp"

namespace fs = std::filesystem;

namespace cmpe {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct ExampleState {
  CmpeInstance inst;
  std::vector<double> x;
  std::optional<std::vector<double>> target;  // y* for supervised losses
  double lambda = 0.0;
  double mu = 0.0;
  double p_upper = 0.0;
  double q_lower = 0.0;
  double alpha = 1.0;
  std::uint32_t lambda_epoch = UINT32_MAX;
};

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const std::size_t j = i + rng.uniform_int(n - i);
    std::swap(idx[i], idx[j]);
  }
  return idx;
}

}  // namespace

TrainOutput train_loop(const LoadedDataset& ds, const TrainOptions& opts,
                       const std::vector<LabelRecord>* labels,
                       const std::vector<BoundsRecord>* bounds) {
  if (opts.batch < 1) throw std::invalid_argument("train: batch must be >= 1");
  const auto t0 = Clock::now();
  const LossKind kind = opts.loss;

  if (loss_is_supervised(kind) && !labels)
    throw std::runtime_error("loss " + to_string(kind) +
                             " needs oracle labels; run `cmpe oracle` first");
  if (loss_needs_bounds(kind) && !bounds)
    throw std::runtime_error("loss " + to_string(kind) +
                             " needs the alpha cache; run `cmpe bounds` first");

  std::unordered_map<std::uint64_t, const LabelRecord*> label_by_id;
  if (labels)
    for (const auto& rec : *labels) label_by_id[rec.example_id] = &rec;
  std::unordered_map<std::uint64_t, const BoundsRecord*> bounds_by_id;
  if (bounds)
    for (const auto& rec : *bounds) bounds_by_id[rec.example_id] = &rec;

  const std::size_t n_train = std::min(ds.train_count(), ds.size());
  std::vector<ExampleState> st;
  std::vector<std::size_t> usable;
  st.reserve(n_train);
  for (std::size_t i = 0; i < n_train; ++i) {
    ExampleState e;
    e.inst = ds.instance(i);
    e.x.assign(ds.data.examples[i].x.begin(), ds.data.examples[i].x.end());
    e.lambda = opts.lambda_init;
    e.mu = opts.mu_init;
    const std::uint64_t id = ds.data.examples[i].example_id;
    if (loss_is_supervised(kind)) {
      const auto it = label_by_id.find(id);
      if (it == label_by_id.end())
        throw std::runtime_error("missing label for example " + std::to_string(id));
      // Non-optimal labels (infeasible / budget-exhausted) are filtered out
      // of supervised training.
      if (it->second->status == OracleStatus::optimal && it->second->y_star) {
        e.target = std::vector<double>(it->second->y_star->begin(),
                                       it->second->y_star->end());
      }
    }
    if (loss_needs_bounds(kind)) {
      const auto it = bounds_by_id.find(id);
      if (it == bounds_by_id.end())
        throw std::runtime_error("missing alpha cache entry for example " +
                                 std::to_string(id) +
                                 "; run `cmpe bounds` first");
      e.p_upper = it->second->p_upper;
      e.q_lower = it->second->q_lower;
      e.alpha = it->second->alpha;
    }
    const std::size_t slot = st.size();
    st.push_back(std::move(e));
    if (!loss_is_supervised(kind) || st[slot].target) usable.push_back(slot);
  }
  if (usable.empty()) throw std::runtime_error("no trainable examples");

  const auto n_in = static_cast<std::uint32_t>(ds.data.evidence_vars.size());
  const auto n_out = static_cast<std::uint32_t>(ds.m1.n_vars - n_in);
  std::vector<std::uint32_t> dims{n_in};
  dims.insert(dims.end(), opts.hidden.begin(), opts.hidden.end());
  dims.push_back(n_out);

  const Rng master(opts.seed);
  Rng init_rng = master.stream(rng_tag::mlp_init);
  Rng shuffle_rng = master.stream(rng_tag::shuffle);

  TrainOutput out;
  out.model = MlpModel::init(dims, /*logistic_output=*/true, init_rng);
  out.adam = AdamState::init(out.model, opts.lr);

  std::optional<MlpModel> dual;
  std::optional<AdamState> dual_adam;
  if (kind == LossKind::pdl) {
    Rng dual_rng = master.stream(rng_tag::dual_init);
    dual = MlpModel::init({n_in, 128, 1}, /*logistic_output=*/false, dual_rng);
    dual_adam = AdamState::init(*dual, opts.lr);
  }

  const bool self_supervised = !loss_is_supervised(kind);
  PlateauScheduler scheduler{opts.plateau_patience, opts.plateau_factor,
                             opts.plateau_rel_tol};

  MlpGradients grads = MlpGradients::zeros_like(out.model);
  MlpGradients dual_grads =
      dual ? MlpGradients::zeros_like(*dual) : MlpGradients{};
  BatchWorkspace ws, dual_ws;
  std::vector<double> xbatch, upstream, grad_buf(n_out);

  auto loss_of = [&](ExampleState& e, std::span<const double> yhat,
                     std::span<double> grad, double mu_pred) {
    LossContext ctx;
    ctx.inst = &e.inst;
    ctx.alpha = e.alpha;
    ctx.beta = opts.beta;
    ctx.rho = opts.rho;
    ctx.lambda = e.lambda;
    ctx.lambda_max = opts.lambda_max;
    ctx.mu = mu_pred;
    ctx.label = e.target ? &*e.target : nullptr;
    switch (kind) {
      case LossKind::mse: return loss_mse(ctx, yhat, grad);
      case LossKind::mae: return loss_mae(ctx, yhat, grad);
      case LossKind::sl_pen: return loss_supervised_penalty(ctx, yhat, grad);
      case LossKind::ssl_pen: return loss_ssl_penalty(ctx, yhat, grad);
      case LossKind::pdl: return loss_pdl_primal(ctx, yhat, grad);
      case LossKind::ss_cmpe:
        // beta = 0 trains the piecewise loss directly.
        return opts.beta > 0.0 ? loss_sscmpe_smooth(ctx, yhat, grad)
                               : loss_sscmpe(ctx, yhat, grad);
      case LossKind::ss_cmpe_pen: return loss_sscmpe_pen(ctx, yhat, grad);
    }
    throw std::logic_error("unhandled loss kind");
  };

  for (std::uint32_t epoch = 0; epoch < opts.epochs; ++epoch) {
    const auto epoch_t0 = Clock::now();
    const auto perm = shuffled_indices(usable.size(), shuffle_rng);
    double epoch_loss = 0.0;

    for (std::size_t start = 0; start < perm.size(); start += opts.batch) {
      const std::size_t bsz = std::min<std::size_t>(opts.batch, perm.size() - start);
      xbatch.resize(bsz * n_in);
      for (std::size_t b = 0; b < bsz; ++b) {
        const auto& e = st[usable[perm[start + b]]];
        std::copy(e.x.begin(), e.x.end(), xbatch.begin() + b * n_in);
      }
      forward_batch(out.model, xbatch, bsz, ws);
      const auto& yhat = ws.acts.back();

      upstream.assign(bsz * n_out, 0.0);
      for (std::size_t b = 0; b < bsz; ++b) {
        ExampleState& e = st[usable[perm[start + b]]];
        double mu_pred = e.mu;
        if (kind == LossKind::pdl)
          mu_pred = std::max(0.0, dual->forward({e.x.data(), e.x.size()})[0]);
        const std::span<const double> yb{yhat.data() + b * n_out, n_out};
        epoch_loss += loss_of(e, yb, {upstream.data() + b * n_out, n_out}, mu_pred);
      }
      const double inv = 1.0 / static_cast<double>(bsz);
      for (auto& u : upstream) u *= inv;

      grads.zero();
      backward_batch(out.model, ws, upstream, grads);
      adam_step(out.adam, out.model, grads);

      // Post-batch bookkeeping on the pre-update outputs.
      for (std::size_t b = 0; b < bsz; ++b) {
        ExampleState& e = st[usable[perm[start + b]]];
        const std::span<const double> yb{yhat.data() + b * n_out, n_out};
        if (loss_needs_bounds(kind)) {
          // Feasible rounded outputs tighten p_upper, which tightens alpha.
          const auto bits = round_half_up(yb);
          const auto y = bits_to_assignment(bits);
          if (e.inst.g.evaluate(y) <= 0.0) {
            const double fy = e.inst.f.evaluate(y);
            if (fy < e.p_upper) {
              e.p_upper = fy;
              e.alpha = compute_alpha(e.p_upper, e.q_lower, e.inst.u_f, e.inst.l_f);
            }
          }
        }
        if ((kind == LossKind::sl_pen || kind == LossKind::ssl_pen) &&
            e.lambda_epoch != epoch) {
          LossContext ctx;
          ctx.inst = &e.inst;
          ctx.rho = opts.rho;
          ctx.lambda = e.lambda;
          ctx.lambda_max = opts.lambda_max;
          e.lambda = update_lambda_subgradient(ctx, yb);
          e.lambda_epoch = epoch;
        }
      }
    }
    epoch_loss /= static_cast<double>(perm.size());

    if (kind == LossKind::pdl) {
      // Dual phase: primal frozen; the dual net regresses onto the ALM
      // multiplier update, which then becomes the stored mu for the next
      // epoch's targets.
      for (std::size_t start = 0; start < usable.size(); start += opts.batch) {
        const std::size_t bsz = std::min<std::size_t>(opts.batch, usable.size() - start);
        xbatch.resize(bsz * n_in);
        for (std::size_t b = 0; b < bsz; ++b) {
          const auto& e = st[usable[start + b]];
          std::copy(e.x.begin(), e.x.end(), xbatch.begin() + b * n_in);
        }
        forward_batch(out.model, xbatch, bsz, ws);
        forward_batch(*dual, xbatch, bsz, dual_ws);
        const auto& yhat = ws.acts.back();
        const auto& muhat = dual_ws.acts.back();
        upstream.assign(bsz, 0.0);
        for (std::size_t b = 0; b < bsz; ++b) {
          ExampleState& e = st[usable[start + b]];
          const std::span<const double> yb{yhat.data() + b * n_out, n_out};
          LossContext ctx;
          ctx.inst = &e.inst;
          ctx.lambda = e.lambda;
          ctx.mu = e.mu;
          const double target = update_mu_alm(ctx, yb);
          double dgrad = 0.0;
          loss_pdl_dual(muhat[b], target, dgrad);
          upstream[b] = dgrad / static_cast<double>(bsz);
          e.mu = target;
        }
        dual_grads.zero();
        backward_batch(*dual, dual_ws, upstream, dual_grads);
        adam_step(*dual_adam, *dual, dual_grads);
      }
      if (opts.pdl_growth_every > 0 && (epoch + 1) % opts.pdl_growth_every == 0)
        for (auto& e : st)
          e.lambda = std::min(e.lambda * opts.pdl_growth_factor, opts.lambda_max);
    }

    if (self_supervised) {
      scheduler.update(out.adam.lr, epoch_loss);
      if (dual_adam) dual_adam->lr = out.adam.lr;
    }
    out.log.push_back({epoch, epoch_loss, out.adam.lr, seconds_since(epoch_t0)});
  }

  out.dual = dual;
  out.rng_state = shuffle_rng.save();
  out.train_seconds = seconds_since(t0);
  return out;
}

void stage_train(const std::string& dir, const TrainOptions& opts) {
  const LoadedDataset ds = LoadedDataset::load(dir);
  std::vector<LabelRecord> labels;
  std::vector<BoundsRecord> bounds;
  const std::vector<LabelRecord>* labels_ptr = nullptr;
  const std::vector<BoundsRecord>* bounds_ptr = nullptr;
  if (loss_is_supervised(opts.loss)) {
    labels = load_labels(dir);
    labels_ptr = &labels;
  }
  if (loss_needs_bounds(opts.loss)) {
    bounds = load_bounds(dir);
    bounds_ptr = &bounds;
  }

  const TrainOutput res = train_loop(ds, opts, labels_ptr, bounds_ptr);

  Checkpoint ck;
  ck.model = res.model;
  ck.adam = res.adam;
  ck.dual = res.dual;
  ck.rng_state = res.rng_state;
  ck.loss_name = to_string(opts.loss);
  ck.train_seconds = res.train_seconds;
  ck.epochs = opts.epochs;
  ck.seed = opts.seed;
  const std::string name = to_string(opts.loss);
  save_checkpoint((fs::path(dir) / ("model-" + name + ".json")).string(), ck);

  std::ofstream log((fs::path(dir) / ("train-log-" + name + ".jsonl")).string());
  char buf[160];
  for (const auto& e : res.log) {
    std::snprintf(buf, sizeof buf,
                  "{\"epoch\":%u,\"loss\":%.17g,\"lr\":%.17g,\"seconds\":%.3f}\n",
                  e.epoch, e.loss, e.lr, e.seconds);
    log << buf;
  }
}

}  // namespace cmpe
