#include "cmpe/cli.hpp"

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "cmpe/pipeline.hpp"
#include "cmpe/uai.hpp"
#include "json.hpp"

using nlohmann::json;

namespace cmpe::cli {

namespace {

// Single-instance inputs shared by `oracle` and `bounds` when run without a
// dataset directory.
struct InstanceArgs {
  std::string model, model2, evid;
  double q = 0.0;
  bool prob_tables = false;

  CmpeInstance build() const {
    const MarkovNetwork m1 = parse_uai_file(model, prob_tables);
    const MarkovNetwork m2 = parse_uai_file(model2, prob_tables);
    Evidence ev;
    if (!evid.empty()) ev = parse_evidence_file(evid, m1.n_vars);
    return build_instance(m1, m2, ev, q);
  }
};

int dispatch(CLI::App& app, const std::vector<std::string>& args) {
  // CLI11 wants reversed argv without the program name.
  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"constrained most-probable-explanation toolkit"};
  app.require_subcommand(1);

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "generate a CMPE dataset");
  GenOptions gopt;
  gen->add_option("--model", gopt.model_path, "base network (UAI MARKOV)")->required();
  gen->add_option("--model2", gopt.model2_path,
                  "constraint network; omitted -> Gaussian perturbation of --model");
  gen->add_flag("--prob-tables", gopt.prob_tables,
                "tables hold probabilities; log-transform on load");
  gen->add_option("--q-percentile", gopt.spec.q_percentile,
                  "order statistic of 100 conditional samples (10/30/60/80/90)");
  gen->add_option("--evidence-frac", gopt.spec.evidence_frac, "evidence fraction");
  gen->add_option("--sigma2", gopt.spec.sigma2, "perturbation variance");
  gen->add_option("--n", gopt.spec.n_samples, "total samples");
  gen->add_option("--train-count", gopt.spec.train_count, "train split size");
  gen->add_option("--burn-in", gopt.spec.burn_in, "Gibbs burn-in sweeps");
  gen->add_option("--thinning", gopt.spec.thinning, "Gibbs thinning");
  gen->add_option("--seed", gopt.spec.seed, "master seed");
  gen->add_option("--out", gopt.out_dir, "output directory")->required();

  // ---- oracle ----
  auto* oracle = app.add_subcommand("oracle", "exact CMPE labels");
  OracleOptions oopt;
  InstanceArgs oinst;
  oracle->add_option("--out", oopt.dir, "dataset directory (labels.jsonl)");
  oracle->add_option("--workers", oopt.workers, "worker threads (0 = auto)");
  oracle->add_option("--node-budget", oopt.node_budget, "branch&bound node budget");
  oracle->add_option("--model", oinst.model, "single-instance: objective network");
  oracle->add_option("--model2", oinst.model2, "single-instance: constraint network");
  oracle->add_option("--evid", oinst.evid, "single-instance: UAI evidence file");
  oracle->add_option("--q", oinst.q, "single-instance: threshold");
  oracle->add_flag("--prob-tables", oinst.prob_tables, "tables hold probabilities");

  // ---- bounds ----
  auto* bounds = app.add_subcommand("bounds", "alpha bounds cache");
  BoundsOptions bopt;
  InstanceArgs binst;
  bounds->add_option("--out", bopt.dir, "dataset directory (bounds.jsonl)");
  bounds->add_option("--workers", bopt.workers, "worker threads (0 = auto)");
  bounds->add_option("--ibound", bopt.lagrangian.ibound, "elimination i-bound");
  bounds->add_option("--steps", bopt.lagrangian.steps, "subgradient steps");
  bounds->add_option("--model", binst.model, "single-instance: objective network");
  bounds->add_option("--model2", binst.model2, "single-instance: constraint network");
  bounds->add_option("--evid", binst.evid, "single-instance: UAI evidence file");
  bounds->add_option("--q", binst.q, "single-instance: threshold");
  bounds->add_flag("--prob-tables", binst.prob_tables, "tables hold probabilities");

  // ---- train ----
  auto* train = app.add_subcommand("train", "train a solver network");
  TrainOptions topt;
  std::string train_dir, loss_name = "ss-cmpe";
  train->add_option("--out", train_dir, "dataset directory")->required();
  train->add_option("--loss", loss_name,
                    "mse|mae|sl-pen|ssl-pen|pdl|ss-cmpe|ss-cmpe-pen");
  train->add_option("--beta", topt.beta, "sigmoid steepness (0 = piecewise loss)");
  train->add_option("--rho", topt.rho, "penalty weight / Lagrangian step size");
  train->add_option("--lr", topt.lr, "Adam learning rate");
  train->add_option("--epochs", topt.epochs, "training epochs");
  train->add_option("--batch", topt.batch, "minibatch size");
  train->add_option("--seed", topt.seed, "training seed");
  train->add_option("--lambda-init", topt.lambda_init, "initial per-example lambda");
  train->add_option("--lambda-max", topt.lambda_max, "lambda cap");
  train->add_option("--mu-init", topt.mu_init, "initial per-example mu (pdl)");
  train->add_option("--patience", topt.plateau_patience, "plateau patience");
  train->add_option("--hidden", topt.hidden, "hidden layer sizes");

  // ---- eval ----
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  EvalOptions eopt;
  eval->add_option("--out", eopt.dir, "dataset directory")->required();
  eval->add_option("--loss", eopt.loss_name, "checkpoint to evaluate")->required();
  eval->add_flag("--skip-nonoptimal", eopt.skip_nonoptimal,
                 "skip test examples whose label is not optimal");

  // ---- compare ----
  auto* compare = app.add_subcommand("compare", "merge reports into a CSV table");
  std::vector<std::string> report_paths;
  std::string csv_out;
  compare->add_option("--reports", report_paths, "report JSON paths")->required();
  compare->add_option("--out", csv_out, "CSV output path (default stdout)");

  if (const int rc = dispatch(app, args); rc != 0 || app.get_subcommands().empty())
    return rc;

  try {
    if (gen->parsed()) {
      gopt.spec.base_network_path = gopt.model_path;
      stage_gen(gopt);
    } else if (oracle->parsed()) {
      if (!oinst.model.empty()) {
        if (oinst.model2.empty())
          throw std::runtime_error("single-instance oracle needs --model2");
        const OracleResult r = brute_force_cmpe(oinst.build());
        json j{{"status", to_string(r.status)},
               {"nodes_expanded", r.nodes_expanded}};
        if (r.y_star) j["y"] = *r.y_star;
        if (r.p_star) j["p_star"] = *r.p_star;
        std::cout << j.dump() << "\n";
      } else if (!oopt.dir.empty()) {
        stage_oracle(oopt);
      } else {
        throw std::runtime_error("oracle needs --out DIR or --model/--model2");
      }
    } else if (bounds->parsed()) {
      if (!binst.model.empty()) {
        if (binst.model2.empty())
          throw std::runtime_error("single-instance bounds needs --model2");
        const AlphaBound b = compute_alpha_bound(binst.build(), bopt.lagrangian);
        json j{{"p_upper", b.p_upper},
               {"q_lower", b.q_lower},
               {"alpha", b.alpha},
               {"mu_star", b.mu_star},
               {"ratio_branch", b.ratio_branch}};
        std::cout << j.dump() << "\n";
      } else if (!bopt.dir.empty()) {
        stage_bounds(bopt);
      } else {
        throw std::runtime_error("bounds needs --out DIR or --model/--model2");
      }
    } else if (train->parsed()) {
      const auto kind = loss_kind_from_string(loss_name);
      if (!kind) throw std::runtime_error("unknown loss: " + loss_name);
      topt.loss = *kind;
      stage_train(train_dir, topt);
    } else if (eval->parsed()) {
      if (!loss_kind_from_string(eopt.loss_name))
        throw std::runtime_error("unknown loss: " + eopt.loss_name);
      stage_eval(eopt);
    } else if (compare->parsed()) {
      const std::string csv = compare_reports(report_paths);
      if (csv_out.empty()) {
        std::cout << csv;
      } else {
        std::ofstream out(csv_out, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + csv_out);
        out << csv;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace cmpe::cli
