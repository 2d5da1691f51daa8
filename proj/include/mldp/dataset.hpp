#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mldp/multiindex.hpp"

namespace mldp {

/// Samples partitioned by factor combination. X[g] and y[g] belong to the
/// group at flat offset g; empty groups are allowed.
struct GroupedDataset {
  explicit GroupedDataset(FactorConfig config, int dim = 0)
      : cfg(std::move(config)),
        X(cfg.num_cells(), Eigen::MatrixXd(0, dim)),
        y(cfg.num_cells(), Eigen::VectorXd(0)) {}

  FactorConfig cfg;
  std::vector<Eigen::MatrixXd> X;
  std::vector<Eigen::VectorXd> y;
  std::vector<std::string> feature_names;
  /// Source row of every sample, per group; optional bookkeeping.
  std::vector<std::vector<std::size_t>> source_rows;

  int dim() const { return X.empty() ? 0 : static_cast<int>(X.front().cols()); }
  std::size_t total_rows() const {
    std::size_t n = 0;
    for (const auto& m : X) n += static_cast<std::size_t>(m.rows());
    return n;
  }
  /// Throws ShapeError / NumericError on inconsistent or non-finite contents.
  void validate() const;
};

}  // namespace mldp
