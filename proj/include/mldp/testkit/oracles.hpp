#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

namespace mldp::testkit {

/// Central differences, one coordinate at a time.
Eigen::VectorXd finite_diff(const std::function<double(const Eigen::VectorXd&)>& fn,
                            const Eigen::VectorXd& point, double h);

/// Density on an even grid, normalized by the trapezoid rule.
struct GridDensity {
  std::vector<double> x;
  std::vector<double> density;
  /// The density at an end point exceeds 1e-8 of its maximum.
  bool coverage_warning = false;

  double step() const { return x[1] - x[0]; }
  double total_mass() const;
  double mean() const;
  double variance() const;
  /// Trapezoid-integrated mass below t (linear within a cell).
  double cdf(double t) const;
  double quantile(double p) const;
};

GridDensity grid_density(const std::function<double(double)>& logpdf, double lo, double hi,
                         std::size_t n_points);

/// Total-variation distance between the histogram of samples and the grid
/// density, over bins equal-width between the 0.0005 and 0.9995 quantiles
/// plus one open bin at each end.
double histogram_tv_distance(std::span<const double> samples, const GridDensity& ref, int bins);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Asymptotic Kolmogorov distribution, P(sqrt(n) D > lambda).
double kolmogorov_survival(double lambda);
KsResult ks_one_sample(std::vector<double> samples, const std::function<double(double)>& cdf);
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

struct MeanEstimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;

  /// |mean - target| < k standard errors.
  bool within(double target, double k = 3.0) const;
};

MeanEstimate mc_mean(std::span<const double> values);
/// Monte-Carlo variance with the delta-method standard error
/// sqrt((m4 - m2^2) / n).
MeanEstimate mc_variance(std::span<const double> values);

}  // namespace mldp::testkit
