#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mldp/dataset.hpp"
#include "mldp/multiindex.hpp"
#include "mldp/prior.hpp"
#include "mldp/rng.hpp"

namespace mldp::testkit {

struct TrueComponent {
  Eigen::VectorXd mu;
  Eigen::MatrixXd Sigma;
  Eigen::VectorXd beta;
  double s2 = 1.0;
};

/// Ground truth for forward simulation. Group weights come from latent when
/// set, otherwise from weights (one simplex per group, flat order).
/// components[b] are basis b's atoms with mixing proportions proportions[b]
/// (uniform when empty).
struct SyntheticSpec {
  FactorConfig cfg{{1}, {1}};
  std::optional<LatentFactors> latent;
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<TrueComponent>> components;
  std::vector<std::vector<double>> proportions;
  int samples_per_group = 40;

  std::vector<double> group_weights(std::size_t group) const;
  std::vector<double> basis_proportions(std::size_t basis) const;
  int dim() const { return static_cast<int>(components.front().front().mu.size()); }
};

struct SyntheticData {
  GroupedDataset data;
  /// Per sample in canonical order (groups row-major, then row).
  std::vector<int> basis;
  std::vector<int> component;
  std::vector<std::size_t> group;

  /// Joint (basis, component) label per sample.
  std::vector<int> labels() const;
};

SyntheticData generate_synthetic(const SyntheticSpec& spec, Rng& rng);

/// Two factor groups of two levels, 2 x 2 bases, P = 2. Group (j1, j2) puts
/// weight e^4 / (e^4 + 3) on basis (j1, j2). Bases sharing i1 share the
/// covariate distribution (means (5,0) or (0,5), identity covariance) and
/// differ in the sign of the regression slope; sigma_y^2 = 0.25.
SyntheticSpec grid2x2_spec(int samples_per_group = 40);

/// E[y | x, g] under the generating truth.
double bayes_optimal_prediction(const SyntheticSpec& spec, std::size_t group,
                                const Eigen::VectorXd& x);

/// Standard CSV schema: factor columns f1..fN (1-based levels), features
/// x1..xP, response y.
void write_synthetic_csv(const GroupedDataset& data, std::ostream& os);

}  // namespace mldp::testkit
