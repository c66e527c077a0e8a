#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <unordered_map>

#include "cmpe/pipeline.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cmpe {

namespace {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

// Population statistics, matching the per-example +- spreads reported by
// the comparison tables.
MeanStd mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {};
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - m) * (x - m);
  var /= static_cast<double>(xs.size());
  return {m, std::sqrt(var)};
}

}  // namespace

EvalReport evaluate_model(const Predictor& predict, const LoadedDataset& ds,
                          const std::vector<LabelRecord>& labels,
                          const std::string& method, bool skip_nonoptimal) {
  std::unordered_map<std::uint64_t, const LabelRecord*> by_id;
  for (const auto& rec : labels) by_id[rec.example_id] = &rec;

  EvalReport rep;
  rep.method = method;
  std::vector<double> gaps, feasible_gaps, viols;

  for (std::size_t i = ds.train_count(); i < ds.size(); ++i) {
    const std::uint64_t id = ds.data.examples[i].example_id;
    const auto it = by_id.find(id);
    if (it == by_id.end())
      throw std::runtime_error("missing label for test example " + std::to_string(id));
    const LabelRecord& label = *it->second;
    if (label.status != OracleStatus::optimal || !label.h_value) {
      if (skip_nonoptimal) {
        ++rep.agg.n_skipped;
        continue;
      }
      throw std::runtime_error(
          "label for test example " + std::to_string(id) + " has status " +
          to_string(label.status) +
          "; re-run `cmpe oracle` or pass --skip-nonoptimal");
    }

    const CmpeInstance inst = ds.instance(i);
    std::vector<double> x(ds.data.examples[i].x.begin(), ds.data.examples[i].x.end());
    const std::vector<double> yhat = predict(x);
    const auto bits = round_half_up(yhat);
    const auto y = bits_to_assignment(bits);

    EvalRecordRow row;
    row.example_id = id;
    row.y = bits;
    row.g_value = inst.g.evaluate(y);
    row.violated = row.g_value > 0.0;
    row.h_value = inst.h_value(y);
    row.p_star_h = *label.h_value;
    const double denom = std::max(std::abs(row.p_star_h), 1e-12);
    row.gap = (row.p_star_h - row.h_value) / denom;

    gaps.push_back(row.gap);
    viols.push_back(row.violated ? 1.0 : 0.0);
    if (!row.violated) feasible_gaps.push_back(row.gap);
    rep.records.push_back(std::move(row));
  }

  const MeanStd g = mean_std(gaps);
  const MeanStd fg = mean_std(feasible_gaps);
  const MeanStd v = mean_std(viols);
  rep.agg.gap_mean = g.mean;
  rep.agg.gap_std = g.std;
  rep.agg.gap_feasible_mean = fg.mean;
  rep.agg.gap_feasible_std = fg.std;
  rep.agg.viol_mean = v.mean;
  rep.agg.viol_std = v.std;
  rep.agg.n = rep.records.size();
  rep.agg.n_feasible = feasible_gaps.size();
  return rep;
}

void stage_eval(const EvalOptions& opts) {
  const LoadedDataset ds = LoadedDataset::load(opts.dir);
  const auto labels = load_labels(opts.dir);
  const auto model_path =
      (fs::path(opts.dir) / ("model-" + opts.loss_name + ".json")).string();
  if (!fs::exists(model_path))
    throw std::runtime_error("checkpoint not found at " + model_path +
                             "; run `cmpe train --loss " + opts.loss_name +
                             "` first");
  const Checkpoint ck = load_checkpoint(model_path);

  double infer_seconds = 0.0;
  const Predictor predict = [&](std::span<const double> x) {
    const auto t0 = std::chrono::steady_clock::now();
    auto y = ck.model.forward(x);
    infer_seconds +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return y;
  };

  const EvalReport rep =
      evaluate_model(predict, ds, labels, opts.loss_name, opts.skip_nonoptimal);

  json records = json::array();
  for (const auto& r : rep.records) {
    records.push_back(json{{"example_id", r.example_id},
                           {"y", r.y},
                           {"h_value", r.h_value},
                           {"p_star_h", r.p_star_h},
                           {"gap", r.gap},
                           {"violated", r.violated},
                           {"g_value", r.g_value}});
  }
  const json j{{"version", 1},
               {"method", rep.method},
               {"examples", records},
               {"aggregates",
                json{{"gap_mean", rep.agg.gap_mean},
                     {"gap_std", rep.agg.gap_std},
                     {"gap_feasible_mean", rep.agg.gap_feasible_mean},
                     {"gap_feasible_std", rep.agg.gap_feasible_std},
                     {"viol_mean", rep.agg.viol_mean},
                     {"viol_std", rep.agg.viol_std},
                     {"n", rep.agg.n},
                     {"n_feasible", rep.agg.n_feasible},
                     {"n_skipped", rep.agg.n_skipped}}}};

  const auto report_path =
      (fs::path(opts.dir) / ("report-" + opts.loss_name + ".json")).string();
  std::ofstream out(report_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + report_path);
  out << j.dump(2) << "\n";
  out.close();

  // Wall-clock timings live outside the report so equal-seed runs stay
  // byte-identical.
  const json timing{{"train_seconds", ck.train_seconds},
                    {"infer_seconds", infer_seconds}};
  std::ofstream tout((fs::path(opts.dir) / ("report-" + opts.loss_name + ".timing.json")).string());
  tout << timing.dump(2) << "\n";
}

}  // namespace cmpe
