#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mldp/data.hpp"
#include "mldp/eval.hpp"
#include "mldp/gibbs.hpp"
#include "mldp/model.hpp"
#include "mldp/prior.hpp"
#include "mldp/trace.hpp"

namespace mldp {

struct DataConfig {
  std::string path;
  CsvSchema schema;
  std::vector<FactorMapping> factors;
};

/// Base-prior settings. mu0 and Psi0 always come from the training features;
/// the rest default to BasePrior::defaults_from.
struct PriorConfig {
  std::optional<double> lambda0;
  std::optional<double> nu0;
  std::optional<double> a_y;
  std::optional<double> b_y;
  double v_scale = 1.0;
  double psi_ridge = 1e-6;
};

struct ModelConfig {
  Dims factors_per_group;
  Dims bases_per_group;
  Hyperparams hyper;
  PriorConfig prior;
};

struct ExperimentConfig {
  double fraction = 0.5;
  int repetitions = 10;
  std::string metric = "rmse";
  bool baseline_dp = false;
};

struct SimulateConfig {
  int truncation = 200;
  int draws = 10000;
  double borel_upper = 0.0;
};

struct RunConfig {
  DataConfig data;
  ModelConfig model;
  SamplerConfig sampler;
  PreprocessOptions preprocess;
  ExperimentConfig experiment;
  SimulateConfig simulate;

  FactorConfig factor_config() const;
  void validate() const;

  /// Unknown keys are rejected so that typos surface as ConfigError.
  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

RunConfig load_config(const std::string& path);

ModelSpec build_model(const RunConfig& config, const GroupedDataset& train);

struct FitResult {
  Trace trace;
  Preprocessor preprocessor;
};

/// ingest -> preprocess -> group -> sample. The preprocessing record is
/// stored in trace.meta["preprocess"].
FitResult fit_table(const Table& table, const RunConfig& config, bool degenerate = false);

/// Predictions on the response scale, one per table row, in row order.
std::vector<double> predict_rows(const Trace& trace, const Preprocessor& prep, const Table& table,
                                 kernels::Backend backend = kernels::Backend::serial);

double score_metric(const std::string& metric, std::span<const double> y_true,
                    std::span<const double> y_pred);

struct ExperimentResult {
  EvalReport mldp;
  std::optional<EvalReport> dp;
  std::vector<std::size_t> n_train;
  std::vector<std::size_t> n_test;

  /// Repetitions in which MLDP scored better than the DP baseline.
  int mldp_wins() const;
  nlohmann::json to_json() const;
};

/// Repeated random splits: repetition r splits with seed + r, fits on the
/// training part with sampler seed seed + r, and scores the test part.
/// Repetitions run concurrently.
ExperimentResult run_experiment(const Table& table, const RunConfig& config);

struct SimulationResult {
  LatentFactors latent;
  std::vector<WeightTensor> weights;
  MomentSummary moments;
};

/// U from its prior, the weight tensor of every factor combination, and the
/// Monte-Carlo moment check.
SimulationResult simulate(const RunConfig& config);
void write_weights_csv(const SimulationResult& sim, const FactorConfig& cfg, std::ostream& os);
nlohmann::json moments_json(const MomentSummary& m);

void write_trace_file(const Trace& trace, const std::string& path);
Trace read_trace_file(const std::string& path);
void write_json_file(const nlohmann::json& j, const std::string& path);

// Command entry points used by the CLI. Each writes its files and a
// human-readable summary to out.
void cmd_fit(const RunConfig& config, const std::string& trace_path,
             const std::string& sweeps_path, std::ostream& out);
void cmd_predict(const std::string& trace_path, const std::string& input_path,
                 const std::string& output_path, kernels::Backend backend, std::ostream& out);
void cmd_experiment(const RunConfig& config, const std::string& report_path, std::ostream& out);
void cmd_simulate(const RunConfig& config, const std::string& weights_path,
                  const std::string& moments_path, std::ostream& out);

}  // namespace mldp
