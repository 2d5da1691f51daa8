#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace mldp {

double rmse(std::span<const double> y_true, std::span<const double> y_pred);

/// Mann-Whitney estimate of P(score of a positive > score of a negative),
/// ties counted as one half. labels must be 0/1 with both classes present.
double auc(std::span<const int> labels, std::span<const double> scores);

/// Metric values over repetitions; std is the sample standard deviation
/// (0 for a single repetition).
struct EvalReport {
  std::string metric;
  std::vector<double> reps;
  std::vector<std::size_t> n;
  double mean = 0.0;
  double std = 0.0;

  static EvalReport from(std::string metric, std::vector<double> reps,
                         std::vector<std::size_t> n = {});
  nlohmann::json to_json() const;
};

void print_table(std::ostream& os, const std::vector<std::pair<std::string, EvalReport>>& rows);

double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

/// Fraction of labelings in which samples i and j share a label.
Eigen::MatrixXd similarity_matrix(const std::vector<std::vector<int>>& labelings);

/// Least-squares clustering: the labeling closest, in squared Frobenius
/// distance between co-clustering matrices, to the similarity matrix.
/// Returns its position in labelings.
std::size_t dahl_point_estimate(const std::vector<std::vector<int>>& labelings);

}  // namespace mldp
