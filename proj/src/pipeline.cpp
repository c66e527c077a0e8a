#include "cmpe/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cmpe/parallel.hpp"
#include "cmpe/uai.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cmpe {

namespace {

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::vector<json> load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<json> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(json::parse(line));
  }
  return rows;
}

std::string resolve_relative(const std::string& dir, const std::string& path) {
  if (fs::exists(path)) return path;
  const auto joined = fs::path(dir) / path;
  if (fs::exists(joined)) return joined.string();
  throw std::runtime_error("cannot find file: " + path);
}

json manifest_to_json(const Manifest& m) {
  return json{{"version", m.version},
              {"model", m.model_path},
              {"model2", m.model2_path},
              {"prob_tables", m.prob_tables},
              {"sigma2", m.sigma2},
              {"evidence_frac", m.evidence_frac},
              {"percentile", m.percentile},
              {"q", m.q},
              {"n_samples", m.n_samples},
              {"train_count", m.train_count},
              {"seed", m.seed},
              {"burn_in", m.burn_in},
              {"thinning", m.thinning},
              {"evidence_vars", m.evidence_vars}};
}

Manifest manifest_from_json(const json& j) {
  Manifest m;
  m.version = j.at("version").get<int>();
  m.model_path = j.at("model").get<std::string>();
  m.model2_path = j.at("model2").get<std::string>();
  m.prob_tables = j.at("prob_tables").get<bool>();
  m.sigma2 = j.at("sigma2").get<double>();
  m.evidence_frac = j.at("evidence_frac").get<double>();
  m.percentile = j.at("percentile").get<int>();
  m.q = j.at("q").get<double>();
  m.n_samples = j.at("n_samples").get<std::size_t>();
  m.train_count = j.at("train_count").get<std::size_t>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.burn_in = j.at("burn_in").get<std::uint64_t>();
  m.thinning = j.at("thinning").get<std::uint32_t>();
  m.evidence_vars = j.at("evidence_vars").get<std::vector<VarIndex>>();
  return m;
}

json model_to_json(const MlpModel& m) {
  return json{{"dims", m.dims},
              {"logistic_output", m.logistic_output},
              {"weights", m.weights},
              {"biases", m.biases}};
}

MlpModel model_from_json(const json& j) {
  MlpModel m;
  m.dims = j.at("dims").get<std::vector<std::uint32_t>>();
  m.logistic_output = j.at("logistic_output").get<bool>();
  m.weights = j.at("weights").get<std::vector<std::vector<double>>>();
  m.biases = j.at("biases").get<std::vector<std::vector<double>>>();
  for (std::size_t l = 0; l + 1 < m.dims.size(); ++l) {
    if (m.weights.at(l).size() !=
            static_cast<std::size_t>(m.dims[l]) * m.dims[l + 1] ||
        m.biases.at(l).size() != m.dims[l + 1])
      throw std::runtime_error("checkpoint: inconsistent layer shapes");
  }
  return m;
}

}  // namespace

LoadedDataset LoadedDataset::load(const std::string& dir) {
  LoadedDataset ds;
  ds.dir = dir;
  ds.manifest = manifest_from_json(load_json_file((fs::path(dir) / "manifest.json").string()));
  ds.m1 = parse_uai_file(resolve_relative(dir, ds.manifest.model_path),
                         ds.manifest.prob_tables);
  ds.m2 = parse_uai_file(resolve_relative(dir, ds.manifest.model2_path), false);
  ds.h = to_polynomial(ds.m1);
  ds.t = to_polynomial(ds.m2);

  ds.data.evidence_vars = ds.manifest.evidence_vars;
  ds.data.q = ds.manifest.q;
  ds.data.percentile = ds.manifest.percentile;
  ds.data.train_count = ds.manifest.train_count;
  for (const auto& row : load_jsonl((fs::path(dir) / "dataset.jsonl").string())) {
    DatasetExample ex;
    ex.example_id = row.at("example_id").get<std::uint64_t>();
    ex.x = row.at("x").get<std::vector<std::uint8_t>>();
    if (ex.x.size() != ds.data.evidence_vars.size())
      throw std::runtime_error("dataset.jsonl: evidence width mismatch");
    ds.data.examples.push_back(std::move(ex));
  }
  return ds;
}

CmpeInstance LoadedDataset::instance(std::size_t i) const {
  return build_instance(h, t, data.evidence_of(i), data.q);
}

void stage_gen(const GenOptions& opts) {
  const MarkovNetwork m1 = parse_uai_file(opts.model_path, opts.prob_tables);
  fs::create_directories(opts.out_dir);

  Manifest man;
  man.model_path = opts.model_path;
  man.prob_tables = opts.prob_tables;
  man.sigma2 = opts.spec.sigma2;
  man.evidence_frac = opts.spec.evidence_frac;
  man.percentile = opts.spec.q_percentile;
  man.n_samples = opts.spec.n_samples;
  man.train_count = opts.spec.train_count;
  man.seed = opts.spec.seed;
  man.burn_in = opts.spec.burn_in;
  man.thinning = opts.spec.thinning;

  MarkovNetwork m2;
  if (!opts.model2_path.empty()) {
    m2 = parse_uai_file(opts.model2_path, opts.prob_tables);
    man.model2_path = opts.model2_path;
  } else {
    Rng master(opts.spec.seed);
    Rng stream = master.stream(rng_tag::perturb);
    m2 = perturb_model(m1, opts.spec.sigma2, stream);
    write_uai_file(m2, (fs::path(opts.out_dir) / "m2.uai").string());
    man.model2_path = "m2.uai";
  }

  const Dataset ds = build_dataset(opts.spec, m1, m2);
  man.q = ds.q;
  man.evidence_vars = ds.evidence_vars;

  write_text_file((fs::path(opts.out_dir) / "manifest.json").string(),
                  manifest_to_json(man).dump(2) + "\n");

  std::ostringstream lines;
  for (const auto& ex : ds.examples) {
    lines << json{{"example_id", ex.example_id},
                  {"x", ex.x},
                  {"q", ds.q},
                  {"percentile", ds.percentile}}
                 .dump()
          << "\n";
  }
  write_text_file((fs::path(opts.out_dir) / "dataset.jsonl").string(), lines.str());
}

void stage_oracle(const OracleOptions& opts) {
  const LoadedDataset ds = LoadedDataset::load(opts.dir);
  const std::size_t n = ds.size();
  std::vector<OracleResult> results(n);
  parallel_for(n, opts.workers, [&](std::size_t i) {
    const CmpeInstance inst = ds.instance(i);
    if (inst.n_query() <= opts.brute_force_limit) {
      results[i] = brute_force_cmpe(inst);
    } else {
      BnbConfig cfg;
      cfg.node_budget = opts.node_budget;
      results[i] = branch_and_bound_cmpe(inst, cfg);
    }
  });

  std::ostringstream lines;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = results[i];
    json row{{"example_id", ds.data.examples[i].example_id},
             {"status", to_string(r.status)}};
    if (r.y_star) row["y"] = *r.y_star;
    if (r.p_star) {
      row["p_star"] = *r.p_star;
      row["h_value"] = ds.instance(i).f_shift - *r.p_star;
    }
    lines << row.dump() << "\n";
  }
  write_text_file((fs::path(opts.dir) / "labels.jsonl").string(), lines.str());
}

void stage_bounds(const BoundsOptions& opts) {
  const LoadedDataset ds = LoadedDataset::load(opts.dir);
  const std::size_t n = ds.size();
  std::vector<AlphaBound> results(n);
  parallel_for(n, opts.workers, [&](std::size_t i) {
    results[i] = compute_alpha_bound(ds.instance(i), opts.lagrangian);
  });

  std::ostringstream lines;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& b = results[i];
    lines << json{{"example_id", ds.data.examples[i].example_id},
                  {"p_upper", b.p_upper},
                  {"q_lower", b.q_lower},
                  {"alpha", b.alpha},
                  {"mu_star", b.mu_star},
                  {"ratio_branch", b.ratio_branch}}
                 .dump()
          << "\n";
  }
  write_text_file((fs::path(opts.dir) / "bounds.jsonl").string(), lines.str());
}

std::vector<LabelRecord> load_labels(const std::string& dir) {
  const auto path = (fs::path(dir) / "labels.jsonl").string();
  if (!fs::exists(path))
    throw std::runtime_error("labels not found at " + path +
                             "; run `cmpe oracle --out " + dir + "` first");
  std::vector<LabelRecord> out;
  for (const auto& row : load_jsonl(path)) {
    LabelRecord rec;
    rec.example_id = row.at("example_id").get<std::uint64_t>();
    const auto status = oracle_status_from_string(row.at("status").get<std::string>());
    if (!status) throw std::runtime_error("labels.jsonl: unknown status");
    rec.status = *status;
    if (row.contains("y")) rec.y_star = row.at("y").get<std::vector<std::uint8_t>>();
    if (row.contains("p_star")) rec.p_star = row.at("p_star").get<double>();
    if (row.contains("h_value")) rec.h_value = row.at("h_value").get<double>();
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<BoundsRecord> load_bounds(const std::string& dir) {
  const auto path = (fs::path(dir) / "bounds.jsonl").string();
  if (!fs::exists(path))
    throw std::runtime_error("bounds cache not found at " + path +
                             "; run `cmpe bounds --out " + dir + "` first");
  std::vector<BoundsRecord> out;
  for (const auto& row : load_jsonl(path)) {
    BoundsRecord rec;
    rec.example_id = row.at("example_id").get<std::uint64_t>();
    rec.p_upper = row.at("p_upper").get<double>();
    rec.q_lower = row.at("q_lower").get<double>();
    rec.alpha = row.at("alpha").get<double>();
    rec.mu_star = row.at("mu_star").get<double>();
    rec.ratio_branch = row.at("ratio_branch").get<bool>();
    out.push_back(rec);
  }
  return out;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  json j{{"version", 1},
         {"loss", ck.loss_name},
         {"epochs", ck.epochs},
         {"seed", ck.seed},
         {"train_seconds", ck.train_seconds},
         {"model", model_to_json(ck.model)},
         {"adam",
          json{{"lr", ck.adam.lr},
               {"beta1", ck.adam.beta1},
               {"beta2", ck.adam.beta2},
               {"eps", ck.adam.eps},
               {"step_count", ck.adam.step_count},
               {"m_w", ck.adam.m_w},
               {"v_w", ck.adam.v_w},
               {"m_b", ck.adam.m_b},
               {"v_b", ck.adam.v_b}}},
         {"rng_state", ck.rng_state}};
  if (ck.dual) {
    j["dual"] = model_to_json(*ck.dual);
  }
  write_text_file(path, j.dump() + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
  const json j = load_json_file(path);
  if (j.at("version").get<int>() != 1)
    throw std::runtime_error("unsupported checkpoint version");
  Checkpoint ck;
  ck.loss_name = j.at("loss").get<std::string>();
  ck.epochs = j.at("epochs").get<std::uint32_t>();
  ck.seed = j.at("seed").get<std::uint64_t>();
  ck.train_seconds = j.at("train_seconds").get<double>();
  ck.model = model_from_json(j.at("model"));
  const auto& a = j.at("adam");
  ck.adam.lr = a.at("lr").get<double>();
  ck.adam.beta1 = a.at("beta1").get<double>();
  ck.adam.beta2 = a.at("beta2").get<double>();
  ck.adam.eps = a.at("eps").get<double>();
  ck.adam.step_count = a.at("step_count").get<std::uint64_t>();
  ck.adam.m_w = a.at("m_w").get<std::vector<std::vector<double>>>();
  ck.adam.v_w = a.at("v_w").get<std::vector<std::vector<double>>>();
  ck.adam.m_b = a.at("m_b").get<std::vector<std::vector<double>>>();
  ck.adam.v_b = a.at("v_b").get<std::vector<std::vector<double>>>();
  ck.rng_state = j.at("rng_state").get<std::array<std::uint64_t, 4>>();
  if (j.contains("dual")) ck.dual = model_from_json(j.at("dual"));
  return ck;
}

std::string compare_reports(const std::vector<std::string>& report_paths) {
  std::ostringstream csv;
  csv << "method,gap_mean,gap_std,viol_mean,viol_std,train_s,infer_s\n";
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
  };
  for (const auto& path : report_paths) {
    const json j = load_json_file(path);
    const auto& agg = j.at("aggregates");
    double train_s = 0.0, infer_s = 0.0;
    std::string timing_path = path;
    const std::string suffix = ".json";
    if (timing_path.size() > suffix.size() &&
        timing_path.ends_with(suffix))
      timing_path.resize(timing_path.size() - suffix.size());
    timing_path += ".timing.json";
    if (fs::exists(timing_path)) {
      const json tj = load_json_file(timing_path);
      train_s = tj.value("train_seconds", 0.0);
      infer_s = tj.value("infer_seconds", 0.0);
    }
    csv << j.at("method").get<std::string>() << ","
        << num(agg.at("gap_mean").get<double>()) << ","
        << num(agg.at("gap_std").get<double>()) << ","
        << num(agg.at("viol_mean").get<double>()) << ","
        << num(agg.at("viol_std").get<double>()) << "," << num(train_s) << ","
        << num(infer_s) << "\n";
  }
  return csv.str();
}

}  // namespace cmpe
