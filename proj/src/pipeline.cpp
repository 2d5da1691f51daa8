#include "mldp/pipeline.hpp"

#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "mldp/error.hpp"
#include "mldp/predict.hpp"

namespace mldp {
namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& block, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError("config block '" + block + "' must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items())
    if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in config block '" + block + "'");
}

template <class T>
void read(const json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

template <class T>
void read(const json& j, const char* key, std::optional<T>& into) {
  if (j.contains(key) && !j.at(key).is_null()) into = j.at(key).get<T>();
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

FactorConfig RunConfig::factor_config() const {
  return FactorConfig(model.factors_per_group, model.bases_per_group);
}

void RunConfig::validate() const {
  const auto cfg = factor_config();
  model.hyper.validate(cfg);
  sampler.validate();
  if (data.factors.size() != static_cast<std::size_t>(cfg.n_groups()))
    throw ConfigError("data.factor_columns must name one column per factor group (" +
                      std::to_string(cfg.n_groups()) + ")");
  if (data.schema.feature_columns.empty()) throw ConfigError("data.feature_columns is empty");
  if (data.schema.response_column.empty()) throw ConfigError("data.response_column is empty");
  for (std::size_t n = 0; n < data.factors.size(); ++n) {
    const auto& lv = data.factors[n].levels;
    if (!lv.empty() && static_cast<int>(lv.size()) != cfg.factors_per_group()[n])
      throw ConfigError("factor column '" + data.factors[n].column + "' lists " +
                        std::to_string(lv.size()) + " levels but J=" +
                        std::to_string(cfg.factors_per_group()[n]));
  }
  for (const auto& c : data.schema.categorical_columns)
    if (std::find(data.schema.feature_columns.begin(), data.schema.feature_columns.end(), c) ==
        data.schema.feature_columns.end())
      throw ConfigError("categorical column '" + c + "' is not a feature column");
  if (preprocess.pca_k < 0) throw ConfigError("preprocess.pca_k must be >= 0");
  if (!(experiment.fraction > 0.0 && experiment.fraction < 1.0))
    throw ConfigError("experiment.fraction must lie in (0, 1)");
  if (experiment.repetitions < 1) throw ConfigError("experiment.repetitions must be >= 1");
  if (experiment.metric != "rmse" && experiment.metric != "auc")
    throw ConfigError("experiment.metric must be rmse or auc");
  if (simulate.truncation < 1 || simulate.draws < 2)
    throw ConfigError("simulate.truncation must be >= 1 and simulate.draws >= 2");
  const auto& p = model.prior;
  if (p.v_scale <= 0 || p.psi_ridge < 0) throw ConfigError("prior.v_scale must be > 0 and psi_ridge >= 0");
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  try {
    check_keys(j, "<root>", {"data", "model", "sampler", "preprocess", "experiment", "simulate"});
    if (j.contains("data")) {
      const auto& d = j.at("data");
      check_keys(d, "data", {"path", "factor_columns", "factor_levels", "feature_columns",
                             "response_column", "categorical_columns"});
      read(d, "path", c.data.path);
      read(d, "factor_columns", c.data.schema.factor_columns);
      read(d, "feature_columns", c.data.schema.feature_columns);
      read(d, "response_column", c.data.schema.response_column);
      read(d, "categorical_columns", c.data.schema.categorical_columns);
      json levels = d.value("factor_levels", json::object());
      for (const auto& col : c.data.schema.factor_columns) {
        FactorMapping f{col, {}};
        if (levels.contains(col)) f.levels = levels.at(col).get<std::vector<std::string>>();
        c.data.factors.push_back(std::move(f));
      }
      for (const auto& [key, _] : levels.items())
        if (std::find(c.data.schema.factor_columns.begin(), c.data.schema.factor_columns.end(), key) ==
            c.data.schema.factor_columns.end())
          throw ConfigError("factor_levels names '" + key + "', which is not a factor column");
    }
    if (j.contains("model")) {
      const auto& m = j.at("model");
      check_keys(m, "model", {"factors_per_group", "bases_per_group", "alpha", "alpha_per_basis",
                              "sigma0", "prior"});
      read(m, "factors_per_group", c.model.factors_per_group);
      read(m, "bases_per_group", c.model.bases_per_group);
      read(m, "alpha", c.model.hyper.alpha);
      read(m, "sigma0", c.model.hyper.sigma0);
      if (m.contains("alpha_per_basis")) {
        c.model.hyper.alpha_per_basis = m.at("alpha_per_basis").get<std::vector<double>>();
        c.model.hyper.heterogeneous = true;
      }
      if (m.contains("prior")) {
        const auto& p = m.at("prior");
        check_keys(p, "model.prior", {"lambda0", "nu0", "a_y", "b_y", "v_scale", "psi_ridge"});
        read(p, "lambda0", c.model.prior.lambda0);
        read(p, "nu0", c.model.prior.nu0);
        read(p, "a_y", c.model.prior.a_y);
        read(p, "b_y", c.model.prior.b_y);
        read(p, "v_scale", c.model.prior.v_scale);
        read(p, "psi_ridge", c.model.prior.psi_ridge);
      }
    }
    if (c.model.bases_per_group.empty())
      c.model.bases_per_group.assign(c.model.factors_per_group.size(), 2);
    if (j.contains("sampler")) {
      const auto& s = j.at("sampler");
      check_keys(s, "sampler", {"aux", "iterations", "burn_in", "thin", "seed", "u_step",
                                "u_sampler", "slice_width", "permute_scan", "backend"});
      read(s, "aux", c.sampler.aux);
      read(s, "iterations", c.sampler.iterations);
      read(s, "burn_in", c.sampler.burn_in);
      read(s, "thin", c.sampler.thin);
      read(s, "seed", c.sampler.seed);
      read(s, "u_step", c.sampler.u_step);
      read(s, "slice_width", c.sampler.slice_width);
      read(s, "permute_scan", c.sampler.permute_scan);
      if (s.contains("u_sampler")) c.sampler.u_sampler = parse_u_sampler(s.at("u_sampler").get<std::string>());
      if (s.contains("backend")) c.sampler.backend = kernels::parse_backend(s.at("backend").get<std::string>());
    }
    if (j.contains("preprocess")) {
      const auto& p = j.at("preprocess");
      check_keys(p, "preprocess", {"pca_k", "pca_scale", "log1p_response", "coding"});
      read(p, "pca_k", c.preprocess.pca_k);
      read(p, "pca_scale", c.preprocess.pca_scale);
      read(p, "log1p_response", c.preprocess.log1p_response);
      if (p.contains("coding")) c.preprocess.coding = parse_coding(p.at("coding").get<std::string>());
    }
    if (j.contains("experiment")) {
      const auto& e = j.at("experiment");
      check_keys(e, "experiment", {"fraction", "repetitions", "metric", "baseline_dp"});
      read(e, "fraction", c.experiment.fraction);
      read(e, "repetitions", c.experiment.repetitions);
      read(e, "metric", c.experiment.metric);
      read(e, "baseline_dp", c.experiment.baseline_dp);
    }
    if (j.contains("simulate")) {
      const auto& s = j.at("simulate");
      check_keys(s, "simulate", {"truncation", "draws", "borel_upper"});
      read(s, "truncation", c.simulate.truncation);
      read(s, "draws", c.simulate.draws);
      read(s, "borel_upper", c.simulate.borel_upper);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  if (c.model.factors_per_group.empty()) throw ConfigError("model.factors_per_group is required");
  return c;
}

json RunConfig::to_json() const {
  json levels = json::object();
  for (const auto& f : data.factors)
    if (!f.levels.empty()) levels[f.column] = f.levels;
  json model_j = {{"factors_per_group", model.factors_per_group},
                  {"bases_per_group", model.bases_per_group},
                  {"alpha", model.hyper.alpha},
                  {"sigma0", model.hyper.sigma0}};
  if (model.hyper.heterogeneous) model_j["alpha_per_basis"] = model.hyper.alpha_per_basis;
  json prior = {{"v_scale", model.prior.v_scale}, {"psi_ridge", model.prior.psi_ridge}};
  if (model.prior.lambda0) prior["lambda0"] = *model.prior.lambda0;
  if (model.prior.nu0) prior["nu0"] = *model.prior.nu0;
  if (model.prior.a_y) prior["a_y"] = *model.prior.a_y;
  if (model.prior.b_y) prior["b_y"] = *model.prior.b_y;
  model_j["prior"] = prior;
  return {
      {"data",
       {{"path", data.path},
        {"factor_columns", data.schema.factor_columns},
        {"factor_levels", levels},
        {"feature_columns", data.schema.feature_columns},
        {"response_column", data.schema.response_column},
        {"categorical_columns", data.schema.categorical_columns}}},
      {"model", model_j},
      {"sampler",
       {{"aux", sampler.aux},
        {"iterations", sampler.iterations},
        {"burn_in", sampler.burn_in},
        {"thin", sampler.thin},
        {"seed", sampler.seed},
        {"u_step", sampler.u_step},
        {"u_sampler", std::string(u_sampler_name(sampler.u_sampler))},
        {"slice_width", sampler.slice_width},
        {"permute_scan", sampler.permute_scan},
        {"backend", std::string(kernels::backend_name(sampler.backend))}}},
      {"preprocess",
       {{"pca_k", preprocess.pca_k},
        {"pca_scale", preprocess.pca_scale},
        {"log1p_response", preprocess.log1p_response},
        {"coding", coding_name(preprocess.coding)}}},
      {"experiment",
       {{"fraction", experiment.fraction},
        {"repetitions", experiment.repetitions},
        {"metric", experiment.metric},
        {"baseline_dp", experiment.baseline_dp}}},
      {"simulate",
       {{"truncation", simulate.truncation},
        {"draws", simulate.draws},
        {"borel_upper", simulate.borel_upper}}}};
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  auto c = RunConfig::from_json(j);
  c.validate();
  return c;
}

ModelSpec build_model(const RunConfig& config, const GroupedDataset& train) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(train.total_rows()), train.dim());
  Eigen::Index r = 0;
  for (const auto& m : train.X) {
    X.middleRows(r, m.rows()) = m;
    r += m.rows();
  }
  if (X.rows() < 2) throw InputError("need at least two training rows to set the base prior");
  const auto& pc = config.model.prior;
  BasePrior H = BasePrior::defaults_from(X, pc.psi_ridge);
  if (pc.lambda0) H.lambda0 = *pc.lambda0;
  if (pc.nu0) H.nu0 = *pc.nu0;
  if (pc.a_y) H.a_y = *pc.a_y;
  if (pc.b_y) H.b_y = *pc.b_y;
  H.V *= pc.v_scale;
  H.validate();
  ModelSpec spec{config.factor_config(), config.model.hyper, {H}};
  spec.validate();
  return spec;
}

FitResult fit_table(const Table& table, const RunConfig& config, bool degenerate) {
  const auto cfg = config.factor_config();
  auto prep = Preprocessor::fit(table, config.data.schema, config.data.factors, cfg, config.preprocess);
  const auto data = prep.grouped(table);
  auto model = build_model(config, data);
  if (degenerate) model = model.degenerate();
  auto trace = run(data, model, config.sampler);
  trace.meta["preprocess"] = prep.to_json();
  return FitResult{std::move(trace), std::move(prep)};
}

std::vector<double> predict_rows(const Trace& trace, const Preprocessor& prep, const Table& table,
                                 kernels::Backend backend) {
  const auto rows = prep.apply(table, false);
  if (rows.X.cols() != trace.model.dim())
    throw ShapeError("input has " + std::to_string(rows.X.cols()) +
                     " features after preprocessing, the trace expects " +
                     std::to_string(trace.model.dim()));
  std::vector<PredictionRequest> requests;
  requests.reserve(rows.groups.size());
  for (std::size_t r = 0; r < rows.groups.size(); ++r)
    requests.push_back({rows.X.row(static_cast<Eigen::Index>(r)).transpose(), rows.groups[r]});
  std::vector<double> out;
  out.reserve(requests.size());
  if (requests.empty()) return out;
  const Predictor predictor(trace, 64, backend);
  for (const auto& p : predictor.predict(requests)) out.push_back(prep.response_from_model(p.mean));
  return out;
}

double score_metric(const std::string& metric, std::span<const double> y_true,
                    std::span<const double> y_pred) {
  if (metric == "rmse") return rmse(y_true, y_pred);
  if (metric == "auc") {
    std::vector<int> labels;
    labels.reserve(y_true.size());
    for (double v : y_true) {
      if (v != 0.0 && v != 1.0) throw InputError("auc needs 0/1 responses");
      labels.push_back(static_cast<int>(v));
    }
    return auc(labels, y_pred);
  }
  throw ConfigError("unknown metric '" + metric + "'");
}

int ExperimentResult::mldp_wins() const {
  if (!dp) return 0;
  const bool lower_better = mldp.metric == "rmse";
  int wins = 0;
  for (std::size_t r = 0; r < mldp.reps.size(); ++r)
    if (lower_better ? mldp.reps[r] < dp->reps[r] : mldp.reps[r] > dp->reps[r]) ++wins;
  return wins;
}

json ExperimentResult::to_json() const {
  json j = mldp.to_json();
  j["model"] = "mldp";
  j["n_train"] = n_train;
  j["n_test"] = n_test;
  if (dp) {
    auto b = dp->to_json();
    b["model"] = "dp";
    j["baseline"] = b;
    j["mldp_wins"] = mldp_wins();
  }
  return j;
}

ExperimentResult run_experiment(const Table& table, const RunConfig& config) {
  const int R = config.experiment.repetitions;
  const bool baseline = config.experiment.baseline_dp;
  std::vector<double> mldp_scores(static_cast<std::size_t>(R)), dp_scores(static_cast<std::size_t>(R));
  std::vector<std::size_t> n_train(static_cast<std::size_t>(R)), n_test(static_cast<std::size_t>(R));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(R));

#pragma omp parallel for schedule(dynamic, 1)
  for (int r = 0; r < R; ++r) {
    const auto ri = static_cast<std::size_t>(r);
    try {
      const std::uint64_t seed = config.sampler.seed + static_cast<std::uint64_t>(r);
      const auto parts = split(table.rows(), config.experiment.fraction, seed);
      const auto train = table.subset(parts.train);
      const auto test = table.subset(parts.test);
      n_train[ri] = train.rows();
      n_test[ri] = test.rows();
      RunConfig rc = config;
      rc.sampler.seed = seed;
      const auto y_true = test.numeric(config.data.schema.response_column);
      const auto fit = fit_table(train, rc);
      mldp_scores[ri] = score_metric(config.experiment.metric, y_true,
                                     predict_rows(fit.trace, fit.preprocessor, test, rc.sampler.backend));
      if (baseline) {
        const auto dp = fit_table(train, rc, true);
        dp_scores[ri] = score_metric(config.experiment.metric, y_true,
                                     predict_rows(dp.trace, dp.preprocessor, test, rc.sampler.backend));
      }
    } catch (...) {
      errors[ri] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  ExperimentResult res{EvalReport::from(config.experiment.metric, mldp_scores, n_test), std::nullopt,
                       n_train, n_test};
  if (baseline) res.dp = EvalReport::from(config.experiment.metric, dp_scores, n_test);
  return res;
}

SimulationResult simulate(const RunConfig& config) {
  const auto cfg = config.factor_config();
  SimulationResult sim;
  Rng latent_rng = make_stream(config.sampler.seed, kLatentStream);
  sim.latent = sample_latent_factors(config.model.hyper, cfg, latent_rng);
  for (const auto& g : enumerate_groups(cfg)) sim.weights.push_back(compute_weights(sim.latent, g));
  Rng mc_rng = make_stream(config.sampler.seed, 3);
  sim.moments = check_moments(sim.latent, config.model.hyper, cfg, config.simulate.truncation,
                              config.simulate.draws, config.simulate.borel_upper, mc_rng);
  return sim;
}

void write_weights_csv(const SimulationResult& sim, const FactorConfig& cfg, std::ostream& os) {
  os << "group_flat_index,basis_flat_index,weight\n";
  for (const auto& wt : sim.weights) {
    const auto g = flat_index(wt.group, cfg);
    for (std::size_t b = 0; b < wt.w.size(); ++b) os << g << ',' << b << ',' << format_double(wt.w[b]) << '\n';
  }
}

json moments_json(const MomentSummary& m) {
  json groups = json::array();
  for (const auto& g : m.groups)
    groups.push_back({{"group_flat_index", g.group},
                      {"weight_concentration", g.concentration},
                      {"mean", g.mean},
                      {"mean_se", g.mean_se},
                      {"expected_mean", g.expected_mean},
                      {"var", g.var},
                      {"var_se", g.var_se},
                      {"expected_var", g.expected_var},
                      {"mean_ok", g.mean_ok},
                      {"var_ok", g.var_ok}});
  return {{"draws", m.draws},
          {"truncation", m.truncation},
          {"borel_upper", m.borel_upper},
          {"base_mass", m.base_mass},
          {"max_residual", m.max_residual},
          {"tolerance_se", m.tolerance_se},
          {"passed", m.passed()},
          {"groups", groups}};
}

void write_trace_file(const Trace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write trace file '" + path + "'");
  write_trace_ndjson(trace, out);
}

Trace read_trace_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open trace file '" + path + "'");
  return read_trace_ndjson(in);
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

void cmd_fit(const RunConfig& config, const std::string& trace_path,
             const std::string& sweeps_path, std::ostream& out) {
  const auto table = load_csv(config.data.path, config.data.schema);
  const auto fit = fit_table(table, config);
  write_trace_file(fit.trace, trace_path);
  if (!sweeps_path.empty()) {
    std::ofstream csv(sweeps_path, std::ios::binary);
    if (!csv) throw InputError("cannot write '" + sweeps_path + "'");
    write_sweeps_csv(fit.trace, csv);
  }
  const auto& last = fit.trace.sweeps.back();
  out << "rows " << table.rows() << ", features " << fit.preprocessor.dim() << ", sweeps "
      << fit.trace.sweeps.size() << ", snapshots " << fit.trace.snapshots.size() << '\n'
      << "final log joint " << last.log_joint << ", live clusters " << last.live_clusters
      << ", U acceptance " << fit.trace.meta.value("u_acceptance_rate", 0.0) << '\n';
}

void cmd_predict(const std::string& trace_path, const std::string& input_path,
                 const std::string& output_path, kernels::Backend backend, std::ostream& out) {
  const auto trace = read_trace_file(trace_path);
  if (!trace.meta.contains("preprocess"))
    throw InputError("trace '" + trace_path + "' carries no preprocessing record");
  const auto prep = Preprocessor::from_json(trace.meta.at("preprocess"));
  std::ifstream in(input_path);
  if (!in) throw DataError("cannot open data file '" + input_path + "'");
  auto table = parse_csv(in, input_path);
  const auto yhat = predict_rows(trace, prep, table, backend);
  std::vector<std::string> col;
  col.reserve(yhat.size());
  for (double v : yhat) col.push_back(format_double(v));
  table.add_column("y_hat", col);
  std::ofstream os(output_path, std::ios::binary);
  if (!os) throw InputError("cannot write '" + output_path + "'");
  write_csv(table, os);
  out << "predicted " << yhat.size() << " rows from " << trace.snapshots.size() << " snapshots\n";
}

void cmd_experiment(const RunConfig& config, const std::string& report_path, std::ostream& out) {
  const auto table = load_csv(config.data.path, config.data.schema);
  const auto res = run_experiment(table, config);
  write_json_file(res.to_json(), report_path);
  std::vector<std::pair<std::string, EvalReport>> rows{{"MLDP-MRM", res.mldp}};
  if (res.dp) rows.emplace_back("DP-MRM", *res.dp);
  print_table(out, rows);
  if (res.dp)
    out << "MLDP-MRM better in " << res.mldp_wins() << " of " << res.mldp.reps.size()
        << " repetitions\n";
}

void cmd_simulate(const RunConfig& config, const std::string& weights_path,
                  const std::string& moments_path, std::ostream& out) {
  const auto sim = simulate(config);
  {
    std::ofstream csv(weights_path, std::ios::binary);
    if (!csv) throw InputError("cannot write '" + weights_path + "'");
    write_weights_csv(sim, config.factor_config(), csv);
  }
  write_json_file(moments_json(sim.moments), moments_path);
  out << "groups " << sim.weights.size() << ", bases " << config.factor_config().num_bases()
      << ", moment checks " << (sim.moments.passed() ? "passed" : "FAILED") << '\n';
}

}  // namespace mldp
