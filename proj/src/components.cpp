#include "mldp/components.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "mldp/error.hpp"

namespace mldp {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

// Lower Cholesky factor or nothing.
bool cholesky(const Eigen::MatrixXd& m, Eigen::MatrixXd& lower) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) return false;
  lower = llt.matrixL();
  return lower.diagonal().minCoeff() > 0.0 && lower.allFinite();
}

double log_det_from_chol(const Eigen::MatrixXd& lower) {
  return 2.0 * lower.diagonal().array().log().sum();
}

double log_mv_gamma(int p, double a) {
  double out = 0.25 * p * (p - 1) * std::log(std::numbers::pi);
  for (int j = 1; j <= p; ++j) out += std::lgamma(a + 0.5 * (1 - j));
  return out;
}

Eigen::VectorXd standard_normal_vector(int dim, Rng& rng) {
  Eigen::VectorXd z(dim);
  for (int i = 0; i < dim; ++i) z[i] = std_normal(rng);
  return z;
}

double draw_inverse_gamma(double shape, double scale, Rng& rng) {
  return 1.0 / std::gamma_distribution<double>(shape, 1.0 / scale)(rng);
}

// Shared sampler for prior and posterior parameter sets.
RegressionComponent draw_component(const Eigen::VectorXd& mu, double lambda,
                                   const Eigen::MatrixXd& Psi, double nu,
                                   const Eigen::VectorXd& beta_mean, const Eigen::MatrixXd& V,
                                   double a, double b, Rng& rng) {
  const int P = static_cast<int>(mu.size());
  Eigen::MatrixXd Sigma = draw_inverse_wishart(Psi, nu, rng);
  Eigen::MatrixXd L;
  if (!cholesky(Sigma, L)) throw NumericError("inverse-Wishart draw is not positive definite");
  Eigen::VectorXd mu_x = mu + L * standard_normal_vector(P, rng) / std::sqrt(lambda);
  const double s2 = draw_inverse_gamma(a, b, rng);
  Eigen::MatrixXd LV;
  if (!cholesky(V, LV)) throw NumericError("regression covariance is not positive definite");
  Eigen::VectorXd beta = beta_mean + std::sqrt(s2) * (LV * standard_normal_vector(P, rng));
  return RegressionComponent(std::move(mu_x), std::move(Sigma), std::move(beta), s2);
}

}  // namespace

void BasePrior::validate() const {
  const Eigen::Index P = mu0.size();
  if (P < 1) throw ConfigError("base prior: empty mean vector");
  if (Psi0.rows() != P || Psi0.cols() != P)
    throw ConfigError("base prior: Psi0 must be " + std::to_string(P) + "x" + std::to_string(P));
  if (V.rows() != P || V.cols() != P)
    throw ConfigError("base prior: V must be " + std::to_string(P) + "x" + std::to_string(P));
  if (beta0.size() != 0 && beta0.size() != P) throw ConfigError("base prior: beta0 has wrong length");
  if (!mu0.allFinite() || !all_finite(Psi0) || !all_finite(V))
    throw ConfigError("base prior: non-finite entries");
  if (!(lambda0 > 0.0)) throw ConfigError("base prior: lambda0 must be positive");
  if (!(nu0 > static_cast<double>(P) - 1.0))
    throw ConfigError("base prior: nu0 must exceed P - 1");
  if (!(a_y > 0.0) || !(b_y > 0.0)) throw ConfigError("base prior: a_y and b_y must be positive");
  Eigen::MatrixXd L;
  if (!cholesky(symmetrized(Psi0), L)) throw ConfigError("base prior: Psi0 is not positive definite");
  if (!cholesky(symmetrized(V), L)) throw ConfigError("base prior: V is not positive definite");
}

BasePrior BasePrior::defaults_from(const Eigen::MatrixXd& X, double ridge) {
  const Eigen::Index P = X.cols();
  if (P < 1) throw ConfigError("cannot derive prior defaults from zero features");
  BasePrior H;
  H.mu0 = X.rows() > 0 ? Eigen::VectorXd(X.colwise().mean().transpose())
                       : Eigen::VectorXd::Zero(P);
  if (X.rows() >= 2) {
    const Eigen::MatrixXd centered = X.rowwise() - H.mu0.transpose();
    H.Psi0 = centered.transpose() * centered / static_cast<double>(X.rows() - 1);
  } else {
    H.Psi0 = Eigen::MatrixXd::Identity(P, P);
  }
  H.Psi0.diagonal().array() += ridge;
  H.lambda0 = 1.0;
  H.nu0 = static_cast<double>(P) + 2.0;
  H.V = Eigen::MatrixXd::Identity(P, P);
  H.a_y = 1.0;
  H.b_y = 1.0;
  return H;
}

RegressionComponent::RegressionComponent(Eigen::VectorXd mu_x, Eigen::MatrixXd Sigma_x,
                                         Eigen::VectorXd beta, double sigma_y2)
    : mu_x_(std::move(mu_x)),
      Sigma_x_(symmetrized(Sigma_x)),
      beta_(std::move(beta)),
      sigma_y2_(sigma_y2) {
  const Eigen::Index P = mu_x_.size();
  if (Sigma_x_.rows() != P || Sigma_x_.cols() != P || beta_.size() != P)
    throw ShapeError("regression component: inconsistent dimensions");
  if (!(sigma_y2_ > 0.0) || !std::isfinite(sigma_y2_))
    throw NumericError("regression component: sigma_y2 must be positive and finite");
  if (!mu_x_.allFinite() || !beta_.allFinite())
    throw NumericError("regression component: non-finite parameters");
  if (!cholesky(Sigma_x_, chol_))
    throw NumericError("regression component: Sigma_x is not positive definite");
  log_det_ = log_det_from_chol(chol_);
}

SufficientStats::SufficientStats(int dim)
    : sum_x(Eigen::VectorXd::Zero(dim)),
      sum_xx(Eigen::MatrixXd::Zero(dim, dim)),
      sum_xy(Eigen::VectorXd::Zero(dim)) {}

void SufficientStats::add(const Eigen::VectorXd& x, double y) {
  if (x.size() != sum_x.size()) throw ShapeError("sample dimension does not match statistics");
  ++n;
  sum_x += x;
  sum_xx.noalias() += x * x.transpose();
  sum_xy += y * x;
  sum_yy += y * y;
}

BasePrior ConjugatePosterior::as_prior() const {
  BasePrior H;
  H.mu0 = mu_n;
  H.lambda0 = lambda_n;
  H.Psi0 = Psi_n;
  H.nu0 = nu_n;
  H.V = V_n;
  H.a_y = a_n;
  H.b_y = b_n;
  H.beta0 = beta_n;
  return H;
}

ConjugatePosterior conjugate_posterior(const BasePrior& H, const SufficientStats& stats) {
  const int P = H.dim();
  if (stats.sum_x.size() != P) throw ShapeError("statistics dimension does not match prior");
  const Eigen::VectorXd beta0 = H.beta0.size() ? H.beta0 : Eigen::VectorXd::Zero(P);
  ConjugatePosterior post;
  if (stats.n == 0) {
    post.mu_n = H.mu0;
    post.lambda_n = H.lambda0;
    post.Psi_n = H.Psi0;
    post.nu_n = H.nu0;
    post.beta_n = beta0;
    post.V_n = H.V;
    post.a_n = H.a_y;
    post.b_n = H.b_y;
    return post;
  }

  const auto n = static_cast<double>(stats.n);
  const Eigen::VectorXd xbar = stats.sum_x / n;
  const Eigen::MatrixXd scatter = stats.sum_xx - n * xbar * xbar.transpose();
  post.lambda_n = H.lambda0 + n;
  post.mu_n = (H.lambda0 * H.mu0 + stats.sum_x) / post.lambda_n;
  post.nu_n = H.nu0 + n;
  const Eigen::VectorXd d = xbar - H.mu0;
  post.Psi_n = symmetrized(H.Psi0 + scatter + (H.lambda0 * n / post.lambda_n) * d * d.transpose());

  const Eigen::MatrixXd prior_prec = H.V.llt().solve(Eigen::MatrixXd::Identity(P, P));
  const Eigen::MatrixXd prec = symmetrized(prior_prec + stats.sum_xx);
  Eigen::LLT<Eigen::MatrixXd> llt(prec);
  if (llt.info() != Eigen::Success)
    throw NumericError("posterior regression precision is not positive definite");
  post.V_n = symmetrized(llt.solve(Eigen::MatrixXd::Identity(P, P)));
  post.beta_n = llt.solve(prior_prec * beta0 + stats.sum_xy);
  post.a_n = H.a_y + 0.5 * n;
  post.b_n = H.b_y + 0.5 * (stats.sum_yy + beta0.dot(prior_prec * beta0) -
                            post.beta_n.dot(prec * post.beta_n));
  if (!(post.b_n > 0.0) || !std::isfinite(post.b_n))
    throw NumericError("posterior inverse-gamma scale is not positive");
  Eigen::MatrixXd L;
  if (!cholesky(post.Psi_n, L))
    throw NumericError("posterior NIW scale matrix is not positive definite");
  return post;
}

ConjugatePosterior conjugate_posterior(const BasePrior& H, std::span<const LabeledSample> data) {
  SufficientStats stats(H.dim());
  for (const auto& s : data) stats.add(s);
  return conjugate_posterior(H, stats);
}

Eigen::MatrixXd draw_inverse_wishart(const Eigen::MatrixXd& Psi, double nu, Rng& rng) {
  const auto P = static_cast<int>(Psi.rows());
  Eigen::MatrixXd C;
  if (!cholesky(symmetrized(Psi), C))
    throw NumericError("inverse-Wishart scale is not positive definite");
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(P, P);
  for (int i = 0; i < P; ++i) {
    A(i, i) = std::sqrt(std::chi_squared_distribution<double>(nu - i)(rng));
    for (int j = 0; j < i; ++j) A(i, j) = std_normal(rng);
  }
  // Sigma = C (A A')^{-1} C' = T T' with T = C A^{-T}.
  const Eigen::MatrixXd A_inv_t =
      A.transpose().triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(P, P));
  const Eigen::MatrixXd T = C * A_inv_t;
  return symmetrized(T * T.transpose());
}

RegressionComponent sample_prior(const BasePrior& H, Rng& rng) {
  Eigen::MatrixXd L;
  if (H.Psi0.rows() != H.dim() || !cholesky(symmetrized(H.Psi0), L))
    throw ConfigError("base prior: Psi0 is not positive definite");
  if (H.V.rows() != H.dim() || !cholesky(symmetrized(H.V), L))
    throw ConfigError("base prior: V is not positive definite");
  const Eigen::VectorXd beta0 = H.beta0.size() ? H.beta0 : Eigen::VectorXd::Zero(H.dim());
  return draw_component(H.mu0, H.lambda0, H.Psi0, H.nu0, beta0, H.V, H.a_y, H.b_y, rng);
}

RegressionComponent posterior_draw(const BasePrior& H, const SufficientStats& stats, Rng& rng) {
  const auto post = conjugate_posterior(H, stats);
  return draw_component(post.mu_n, post.lambda_n, post.Psi_n, post.nu_n, post.beta_n, post.V_n,
                        post.a_n, post.b_n, rng);
}

RegressionComponent posterior_draw(const BasePrior& H, std::span<const LabeledSample> data,
                                   Rng& rng) {
  SufficientStats stats(H.dim());
  for (const auto& s : data) stats.add(s);
  return posterior_draw(H, stats, rng);
}

double predictive_log_density_x(const RegressionComponent& phi, const Eigen::VectorXd& x) {
  if (x.size() != phi.dim())
    throw ShapeError("feature vector has length " + std::to_string(x.size()) + ", expected " +
                     std::to_string(phi.dim()));
  const Eigen::VectorXd z =
      phi.chol().triangularView<Eigen::Lower>().solve(x - phi.mu_x());
  return -0.5 * (phi.dim() * kLog2Pi + phi.log_det() + z.squaredNorm());
}

double log_density_y(const RegressionComponent& phi, const Eigen::VectorXd& x, double y) {
  if (x.size() != phi.dim()) throw ShapeError("feature vector length mismatch");
  const double r = y - x.dot(phi.beta());
  return -0.5 * (kLog2Pi + std::log(phi.sigma_y2()) + r * r / phi.sigma_y2());
}

double log_likelihood(const RegressionComponent& phi, const Eigen::VectorXd& x, double y) {
  return predictive_log_density_x(phi, x) + log_density_y(phi, x, y);
}

double log_prior_density(const BasePrior& H, const RegressionComponent& phi) {
  const int P = H.dim();
  if (phi.dim() != P) throw ShapeError("component dimension does not match prior");
  const Eigen::MatrixXd& L = phi.chol();
  // mu_x | Sigma_x ~ N(mu0, Sigma_x / lambda0)
  const Eigen::VectorXd zm = L.triangularView<Eigen::Lower>().solve(phi.mu_x() - H.mu0);
  double out = -0.5 * (P * kLog2Pi + phi.log_det() - P * std::log(H.lambda0) +
                       H.lambda0 * zm.squaredNorm());
  // Sigma_x ~ IW(Psi0, nu0)
  Eigen::MatrixXd Lpsi;
  if (!cholesky(symmetrized(H.Psi0), Lpsi)) throw ConfigError("base prior: Psi0 is not positive definite");
  const Eigen::MatrixXd sigma_inv_psi = phi.Sigma_x().llt().solve(H.Psi0);
  out += 0.5 * H.nu0 * log_det_from_chol(Lpsi) - 0.5 * H.nu0 * P * std::log(2.0) -
         log_mv_gamma(P, 0.5 * H.nu0) - 0.5 * (H.nu0 + P + 1.0) * phi.log_det() -
         0.5 * sigma_inv_psi.trace();
  // sigma_y^2 ~ IG(a, b)
  const double s2 = phi.sigma_y2();
  out += H.a_y * std::log(H.b_y) - std::lgamma(H.a_y) - (H.a_y + 1.0) * std::log(s2) - H.b_y / s2;
  // beta ~ N(beta0, s2 V)
  Eigen::MatrixXd LV;
  if (!cholesky(symmetrized(H.V), LV)) throw ConfigError("base prior: V is not positive definite");
  const Eigen::VectorXd beta0 = H.beta0.size() ? H.beta0 : Eigen::VectorXd::Zero(P);
  const Eigen::VectorXd zb = LV.triangularView<Eigen::Lower>().solve(phi.beta() - beta0);
  out += -0.5 * (P * kLog2Pi + P * std::log(s2) + log_det_from_chol(LV) + zb.squaredNorm() / s2);
  return out;
}

}  // namespace mldp
