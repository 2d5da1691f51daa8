#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mldp/dataset.hpp"
#include "mldp/kernels.hpp"
#include "mldp/model.hpp"
#include "mldp/rng.hpp"
#include "mldp/trace.hpp"

namespace mldp {

enum class USampler { random_walk, gradient };

USampler parse_u_sampler(std::string_view name);
std::string_view u_sampler_name(USampler s);

struct SamplerConfig {
  int aux = 3;
  int iterations = 2000;
  int burn_in = 1000;
  int thin = 5;
  std::uint64_t seed = 1;
  double u_step = 0.2;
  USampler u_sampler = USampler::random_walk;
  double slice_width = 1.0;
  bool permute_scan = false;
  kernels::Backend backend = kernels::Backend::serial;

  void validate() const;
  /// floor((iterations - burn_in) / thin)
  int expected_snapshots() const { return (iterations - burn_in) / thin; }
};

// Stream ids for make_stream(seed, id).
inline constexpr std::uint64_t kAssignStream = 1;
inline constexpr std::uint64_t kLatentStream = 2;

/// Canonical flat view of a grouped dataset: groups in row-major order, rows
/// in order within a group.
struct FlatSamples {
  std::vector<LabeledSample> samples;
  std::vector<std::size_t> group;
  std::vector<std::size_t> row;

  std::size_t size() const { return samples.size(); }
};

FlatSamples flatten(const GroupedDataset& data);

struct Cluster {
  RegressionComponent phi;
  /// Sample ids, ascending.
  std::vector<int> members;
};

struct ClusterRegistry {
  std::vector<std::vector<Cluster>> bases;
  std::vector<int> occupancy;

  int live_clusters() const;
};

struct Assignments {
  std::vector<int> basis;
  std::vector<int> cluster;
};

/// counts[g][b]: samples of flat group g currently on flat basis b.
using CountTable = std::vector<std::vector<int>>;
using LatentGradient = std::vector<std::vector<Eigen::VectorXd>>;

struct MoveStats {
  long proposed = 0;
  long accepted = 0;
  double rate() const { return proposed ? static_cast<double>(accepted) / proposed : 0.0; }
};

struct SamplerState {
  Assignments assign;
  ClusterRegistry registry;
  LatentFactors latent;
  CountTable counts;
  Rng assign_rng;
  Rng latent_rng;
  int sweep = 0;
  MoveStats u_moves;
};

// ---- Latent-factor target: log p(b | U) + log p(U | sigma_u) ----

/// sum_g sum_b counts[g][b] log w_b^g(U) + sum log N(u; 0, sigma_u^2).
double logpost_U(const LatentFactors& U, const CountTable& counts, const FactorConfig& cfg);
/// Gradient of logpost_U with respect to every latent entry.
LatentGradient grad_U(const LatentFactors& U, const CountTable& counts, const FactorConfig& cfg);
/// The terms of logpost_U that depend on u^{n,j} (0-based n, j).
double logpost_u_vector(const LatentFactors& U, const CountTable& counts, const FactorConfig& cfg,
                        int n, int j);
Eigen::VectorXd grad_u_vector(const LatentFactors& U, const CountTable& counts,
                              const FactorConfig& cfg, int n, int j);

/// Log density (up to a constant) of t = log sigma_u^2 given count latent
/// entries with squared sum sum_sq and prior t ~ N(0, sigma0^2).
double log_sigma_posterior(double t, double sum_sq, long count, double sigma0);

// ---- Assignment scores ----

double existing_log_score(double log_w, int size, int occupancy, double alpha, double loglik);
double auxiliary_log_score(double log_w, int aux, int occupancy, double alpha, double loglik);
/// exp-normalize in log space; throws NumericError if nothing is finite.
std::vector<double> normalize_log_scores(std::span<const double> log_scores);
/// Smallest k with u < p_0 + ... + p_k (last index on round-off).
std::size_t draw_categorical(std::span<const double> probs, double u);

struct Candidate {
  std::size_t basis = 0;
  /// Index of an existing cluster, or -(a+1) for auxiliary a.
  int cluster = 0;
  double log_score = 0.0;
};

class GibbsSampler {
 public:
  using Observer = std::function<void(const GibbsSampler&)>;

  /// Initial state: every sample on basis (1,...,1) in one cluster whose
  /// parameters are drawn from the posterior given all data; U and sigma_u
  /// drawn from the prior.
  GibbsSampler(ModelSpec model, const GroupedDataset& data, SamplerConfig config);

  const ModelSpec& model() const { return model_; }
  const SamplerConfig& config() const { return config_; }
  const FlatSamples& samples() const { return samples_; }
  const SamplerState& state() const { return state_; }
  /// Direct access for tests; callers must keep the state consistent.
  SamplerState& mutable_state() { return state_; }

  /// Removes sample s from its cluster, then draws a new (basis, cluster)
  /// jointly over all bases' existing and auxiliary clusters.
  void assignment_step(std::size_t s);
  void update_phi();
  void update_U();
  void update_sigma_u();
  /// Assignments in scan order, then Phi, U and sigma_u.
  void sweep();

  /// Scores of every candidate for sample s, which must be detached, given
  /// explicit auxiliary parameters aux[b * config.aux + a].
  std::vector<Candidate> score_candidates(std::size_t s,
                                          const std::vector<RegressionComponent>& aux) const;

  double log_joint() const;
  /// Empty when the bookkeeping is consistent; otherwise one message per problem.
  std::vector<std::string> check_invariants() const;
  Snapshot snapshot() const;

 private:
  std::size_t detach(std::size_t s, std::optional<RegressionComponent>& reused);
  void attach(std::size_t s, std::size_t basis, int cluster);

  ModelSpec model_;
  SamplerConfig config_;
  FlatSamples samples_;
  SamplerState state_;
};

/// Full chain: initializes, runs config.iterations sweeps, and keeps every
/// thin-th post-burn-in state. observer (if set) runs after every sweep.
Trace run(const GroupedDataset& data, const ModelSpec& model, const SamplerConfig& config,
          const GibbsSampler::Observer& observer = {});

}  // namespace mldp
