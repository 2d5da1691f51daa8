#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "mldp/rng.hpp"

namespace mldp {

/// Base distribution H over (mu_x, Sigma_x, beta, sigma_y^2):
///   (mu_x, Sigma_x) ~ NIW(mu0, lambda0, Psi0, nu0)
///   sigma_y^2 ~ IG(a_y, b_y),  beta | sigma_y^2 ~ N(beta0, sigma_y^2 V)
/// beta0 is zero for user-facing priors; it is carried so that a conjugate
/// posterior can itself serve as a prior.
struct BasePrior {
  Eigen::VectorXd mu0;
  double lambda0 = 1.0;
  Eigen::MatrixXd Psi0;
  double nu0 = 0.0;
  Eigen::MatrixXd V;
  double a_y = 1.0;
  double b_y = 1.0;
  Eigen::VectorXd beta0;

  int dim() const { return static_cast<int>(mu0.size()); }
  /// Throws ConfigError on inconsistent shapes, non-SPD matrices or bad scalars.
  void validate() const;

  /// Data-scaled defaults: mu0 = mean of X's rows, Psi0 = sample covariance
  /// (+ ridge on the diagonal), lambda0 = 1, nu0 = P + 2, V = I, a_y = b_y = 1.
  static BasePrior defaults_from(const Eigen::MatrixXd& X, double ridge = 1e-6);
};

/// One mixture atom: x ~ N(mu_x, Sigma_x), y | x ~ N(x'beta, sigma_y2).
class RegressionComponent {
 public:
  RegressionComponent(Eigen::VectorXd mu_x, Eigen::MatrixXd Sigma_x, Eigen::VectorXd beta,
                      double sigma_y2);

  const Eigen::VectorXd& mu_x() const { return mu_x_; }
  const Eigen::MatrixXd& Sigma_x() const { return Sigma_x_; }
  const Eigen::VectorXd& beta() const { return beta_; }
  double sigma_y2() const { return sigma_y2_; }
  int dim() const { return static_cast<int>(mu_x_.size()); }

  /// Lower Cholesky factor of Sigma_x and log|Sigma_x|.
  const Eigen::MatrixXd& chol() const { return chol_; }
  double log_det() const { return log_det_; }

 private:
  Eigen::VectorXd mu_x_;
  Eigen::MatrixXd Sigma_x_;
  Eigen::VectorXd beta_;
  double sigma_y2_;
  Eigen::MatrixXd chol_;
  double log_det_;
};

struct LabeledSample {
  Eigen::VectorXd x;
  double y = 0.0;
};

/// Running sums for the conjugate update.
struct SufficientStats {
  explicit SufficientStats(int dim);

  void add(const Eigen::VectorXd& x, double y);
  void add(const LabeledSample& s) { add(s.x, s.y); }

  long n = 0;
  Eigen::VectorXd sum_x;
  Eigen::MatrixXd sum_xx;
  Eigen::VectorXd sum_xy;
  double sum_yy = 0.0;
};

/// Parameters of the exact posterior of H given data (same family as H).
struct ConjugatePosterior {
  Eigen::VectorXd mu_n;
  double lambda_n = 0.0;
  Eigen::MatrixXd Psi_n;
  double nu_n = 0.0;
  Eigen::VectorXd beta_n;
  Eigen::MatrixXd V_n;
  double a_n = 0.0;
  double b_n = 0.0;

  BasePrior as_prior() const;
};

ConjugatePosterior conjugate_posterior(const BasePrior& H, const SufficientStats& stats);
ConjugatePosterior conjugate_posterior(const BasePrior& H, std::span<const LabeledSample> data);

RegressionComponent sample_prior(const BasePrior& H, Rng& rng);
RegressionComponent posterior_draw(const BasePrior& H, const SufficientStats& stats, Rng& rng);
RegressionComponent posterior_draw(const BasePrior& H, std::span<const LabeledSample> data,
                                   Rng& rng);

/// Sigma ~ IW(Psi, nu), via the Bartlett decomposition.
Eigen::MatrixXd draw_inverse_wishart(const Eigen::MatrixXd& Psi, double nu, Rng& rng);

double log_likelihood(const RegressionComponent& phi, const Eigen::VectorXd& x, double y);
inline double log_likelihood(const RegressionComponent& phi, const LabeledSample& s) {
  return log_likelihood(phi, s.x, s.y);
}
double predictive_log_density_x(const RegressionComponent& phi, const Eigen::VectorXd& x);
double log_density_y(const RegressionComponent& phi, const Eigen::VectorXd& x, double y);

/// log H(phi).
double log_prior_density(const BasePrior& H, const RegressionComponent& phi);

}  // namespace mldp
