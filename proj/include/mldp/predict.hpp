#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "mldp/kernels.hpp"
#include "mldp/multiindex.hpp"
#include "mldp/trace.hpp"

namespace mldp {

struct PredictionRequest {
  Eigen::VectorXd x;
  GroupIndex g;
};

struct Prediction {
  double mean = 0.0;
  std::vector<double> per_snapshot;
};

/// Candidate weights for one request under one snapshot. cluster == -1 marks
/// the basis' unoccupied-mass candidate, whose response is the prior mean 0.
struct Responsibilities {
  std::vector<std::size_t> basis;
  std::vector<int> cluster;
  std::vector<double> prob;
  std::vector<double> response;

  double predicted() const;
};

/// Posterior-predictive point predictions from a fitted trace. For each
/// snapshot the responsibilities over (basis, cluster) are proportional to
///   w_b^g * l_k / (L_b + alpha_b) * N(x; mu_k, Sigma_k)
/// plus one candidate per basis with weight w_b^g * alpha_b / (L_b + alpha_b)
/// times a Monte-Carlo estimate of the prior predictive density of x (from
/// prior_draws base-prior draws seeded by the snapshot's sweep number). The
/// prediction is sum(resp * x'beta), averaged over snapshots.
/// Holds a reference to the trace, which must outlive the predictor.
class Predictor {
 public:
  explicit Predictor(const Trace& trace, int prior_draws = 64,
                     kernels::Backend backend = kernels::Backend::serial);

  std::vector<Prediction> predict(std::span<const PredictionRequest> requests) const;
  Prediction predict(const PredictionRequest& request) const;
  Responsibilities responsibilities(std::size_t snapshot, const PredictionRequest& request) const;

  kernels::Backend backend() const { return backend_; }
  void set_backend(kernels::Backend b) { backend_ = b; }

 private:
  struct SnapshotContext;
  SnapshotContext context(std::size_t snapshot) const;
  Responsibilities score(std::size_t snapshot, const SnapshotContext& ctx,
                         const PredictionRequest& request) const;
  void check(const PredictionRequest& request) const;

  const Trace* trace_;
  int prior_draws_;
  kernels::Backend backend_;
};

Prediction predict_y(const Trace& trace, const PredictionRequest& request);

}  // namespace mldp
