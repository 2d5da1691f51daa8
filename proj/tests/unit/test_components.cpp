#include <cmath>
#include <numbers>

#include "doctest.h"
#include "mldp/components.hpp"
#include "mldp/error.hpp"
#include "mldp/testkit/oracles.hpp"

using namespace mldp;
using doctest::Approx;

namespace {

BasePrior unit_prior(int P, double nu_extra = 3.0) {
  BasePrior H;
  H.mu0 = Eigen::VectorXd::Zero(P);
  H.lambda0 = 1.0;
  H.Psi0 = Eigen::MatrixXd::Identity(P, P);
  H.nu0 = P + nu_extra;
  H.V = Eigen::MatrixXd::Identity(P, P);
  H.a_y = 2.0;
  H.b_y = 1.0;
  H.beta0 = Eigen::VectorXd::Zero(P);
  return H;
}

Eigen::MatrixXd random_spd(int P, Rng& rng) {
  Eigen::MatrixXd A(P, P);
  for (int i = 0; i < P; ++i)
    for (int j = 0; j < P; ++j) A(i, j) = std_normal(rng);
  return A * A.transpose() + 0.5 * Eigen::MatrixXd::Identity(P, P);
}

// Textbook Gaussian log density via explicit inverse and determinant.
double brute_log_normal(const Eigen::VectorXd& x, const Eigen::VectorXd& mu, const Eigen::MatrixXd& S) {
  const Eigen::VectorXd d = x - mu;
  const double quad = d.dot(S.inverse() * d);
  return -0.5 * (x.size() * std::log(2 * std::numbers::pi) + std::log(S.determinant()) + quad);
}

}  // namespace

TEST_CASE("log_likelihood of the standard example") {
  const RegressionComponent phi(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1),
                                Eigen::VectorXd::Zero(1), 1.0);
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(1);
  CHECK(log_likelihood(phi, x, 0.0) == Approx(-1.8378770664).epsilon(1e-9));
  CHECK(predictive_log_density_x(phi, x) == Approx(-0.9189385332).epsilon(1e-9));
  CHECK(log_density_y(phi, x, 0.0) == Approx(-0.9189385332).epsilon(1e-9));
}

TEST_CASE("log_likelihood matches a brute-force density") {
  Rng rng = make_stream(41, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const int P = 1 + trial % 4;
    Eigen::VectorXd mu(P), beta(P), x(P);
    for (int i = 0; i < P; ++i) {
      mu(i) = std_normal(rng);
      beta(i) = std_normal(rng);
      x(i) = std_normal(rng);
    }
    const Eigen::MatrixXd S = random_spd(P, rng);
    const double s2 = 0.1 + uniform01(rng);
    const double y = std_normal(rng);
    const RegressionComponent phi(mu, S, beta, s2);
    const double r = y - x.dot(beta);
    const double expect = brute_log_normal(x, mu, S) - 0.5 * std::log(2 * std::numbers::pi * s2) -
                          0.5 * r * r / s2;
    CHECK(std::abs(log_likelihood(phi, x, y) - expect) < 1e-10);
  }
}

TEST_CASE("property: log_likelihood is invariant to translating x and mu together") {
  Rng rng = make_stream(43, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const int P = 2;
    const Eigen::MatrixXd S = random_spd(P, rng);
    Eigen::VectorXd mu(P), x(P), c(P), beta = Eigen::VectorXd::Zero(P);
    for (int i = 0; i < P; ++i) {
      mu(i) = std_normal(rng);
      x(i) = std_normal(rng);
      c(i) = 5 * std_normal(rng);
    }
    const RegressionComponent a(mu, S, beta, 1.0), b(mu + c, S, beta, 1.0);
    CHECK(std::abs(predictive_log_density_x(a, x) - predictive_log_density_x(b, x + c)) < 1e-9);
  }
}

TEST_CASE("zero residual gives the Gaussian normalizer") {
  const Eigen::Vector2d beta(1.5, -2.0), x(0.3, 0.7);
  const RegressionComponent phi(Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity(), beta, 0.5);
  CHECK(log_density_y(phi, x, x.dot(beta)) == Approx(-0.5 * std::log(2 * std::numbers::pi * 0.5)));
}

TEST_CASE("the joint density integrates to one (P = 1)") {
  const RegressionComponent phi(Eigen::VectorXd::Constant(1, 0.4), Eigen::MatrixXd::Constant(1, 1, 0.8),
                                Eigen::VectorXd::Constant(1, 1.3), 0.6);
  const int n = 801;
  const double lo = -8, hi = 8, h = (hi - lo) / (n - 1);
  double total = 0;
  Eigen::VectorXd x(1);
  for (int i = 0; i < n; ++i) {
    x(0) = lo + i * h;
    for (int j = 0; j < n; ++j) total += std::exp(log_likelihood(phi, x, lo + j * h)) * h * h;
  }
  CHECK(total == Approx(1.0).epsilon(1e-6));
}

TEST_CASE("component construction rejects bad parameters") {
  CHECK_THROWS(RegressionComponent(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2),
                                   Eigen::VectorXd::Zero(2), 0.0));
  Eigen::Matrix2d bad;
  bad << 1, 2, 2, 1;
  CHECK_THROWS(RegressionComponent(Eigen::VectorXd::Zero(2), bad, Eigen::VectorXd::Zero(2), 1.0));
}

TEST_CASE("sample_prior is deterministic and always gives SPD covariances") {
  const auto H = unit_prior(3);
  Rng a = make_stream(47, 0), b = make_stream(47, 0);
  for (int d = 0; d < 1000; ++d) {
    const auto p = sample_prior(H, a);
    const auto q = sample_prior(H, b);
    CHECK(p.mu_x() == q.mu_x());
    CHECK(p.beta() == q.beta());
    CHECK(p.sigma_y2() > 0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.Sigma_x());
    CHECK(es.eigenvalues().minCoeff() > 0);
  }
}

TEST_CASE("prior mean of mu_x is mu0") {
  auto H = unit_prior(2, 5.0);
  H.mu0 = Eigen::Vector2d(1.0, -3.0);
  Rng rng = make_stream(53, 0);
  std::vector<double> m0, m1;
  for (int d = 0; d < 20000; ++d) {
    const auto p = sample_prior(H, rng);
    m0.push_back(p.mu_x()(0));
    m1.push_back(p.mu_x()(1));
  }
  CHECK(testkit::mc_mean(m0).within(1.0, 3.0));
  CHECK(testkit::mc_mean(m1).within(-3.0, 3.0));
}

TEST_CASE("inverse-Wishart mean is Psi / (nu - P - 1)") {
  const int P = 3;
  const double nu = 1e6;
  const Eigen::MatrixXd Psi = nu * Eigen::MatrixXd::Identity(P, P);
  Rng rng = make_stream(59, 0);
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(P, P);
  for (int d = 0; d < 100; ++d) mean += draw_inverse_wishart(Psi, nu, rng) / 100.0;
  const Eigen::MatrixXd expect = Psi / (nu - P - 1);
  CHECK((mean - expect).cwiseAbs().maxCoeff() < 0.01);

  // Moderate nu: first-moment check on the diagonal by Monte Carlo.
  Eigen::MatrixXd Psi2(2, 2);
  Psi2 << 2.0, 0.5, 0.5, 1.0;
  std::vector<double> d00;
  for (int d = 0; d < 20000; ++d) d00.push_back(draw_inverse_wishart(Psi2, 9.0, rng)(0, 0));
  CHECK(testkit::mc_mean(d00).within(2.0 / (9.0 - 3.0), 3.0));
}

TEST_CASE("posterior_draw with no data follows the prior") {
  const auto H = unit_prior(2);
  const SufficientStats none(2);
  Rng a = make_stream(61, 0), b = make_stream(61, 1);
  std::vector<double> post_mu, prior_mu, post_s2, prior_s2;
  for (int d = 0; d < 4000; ++d) {
    const auto p = posterior_draw(H, none, a);
    const auto q = sample_prior(H, b);
    post_mu.push_back(p.mu_x()(0));
    prior_mu.push_back(q.mu_x()(0));
    post_s2.push_back(p.sigma_y2());
    prior_s2.push_back(q.sigma_y2());
  }
  CHECK(testkit::ks_two_sample(post_mu, prior_mu).p_value > 0.01);
  CHECK(testkit::ks_two_sample(post_s2, prior_s2).p_value > 0.01);
}

TEST_CASE("conjugate posterior: single observation and symmetric pair") {
  auto H = unit_prior(2);
  H.mu0 = Eigen::Vector2d(1.0, 2.0);
  H.lambda0 = 2.0;
  const Eigen::Vector2d x(4.0, -1.0);
  const std::vector<LabeledSample> one{{x, 0.5}};
  const auto post = conjugate_posterior(H, one);
  const Eigen::Vector2d expect = (H.lambda0 * H.mu0 + x) / (H.lambda0 + 1);
  CHECK((post.mu_n - expect).norm() < 1e-12);
  CHECK(post.lambda_n == 3.0);
  CHECK(post.nu_n == H.nu0 + 1);

  const auto H0 = unit_prior(1);
  const std::vector<LabeledSample> pair{{Eigen::VectorXd::Constant(1, 1.0), 1.0},
                                        {Eigen::VectorXd::Constant(1, 1.0), -1.0}};
  CHECK(std::abs(conjugate_posterior(H0, pair).beta_n(0)) < 1e-12);
  const std::vector<LabeledSample> sym{{Eigen::VectorXd::Constant(1, 1.0), 0.0},
                                       {Eigen::VectorXd::Constant(1, -1.0), 0.0}};
  CHECK(std::abs(conjugate_posterior(H0, sym).mu_n(0)) < 1e-12);
}

TEST_CASE("property: sequential conjugate updates equal the batch update") {
  Rng rng = make_stream(67, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const int P = 1 + trial % 3;
    const auto H = unit_prior(P);
    std::vector<LabeledSample> all;
    for (int i = 0; i < 12; ++i) {
      Eigen::VectorXd x(P);
      for (int k = 0; k < P; ++k) x(k) = std_normal(rng);
      all.push_back({x, std_normal(rng)});
    }
    const std::span<const LabeledSample> first(all.data(), 5), rest(all.data() + 5, 7);
    const auto seq = conjugate_posterior(conjugate_posterior(H, first).as_prior(), rest);
    const auto batch = conjugate_posterior(H, all);
    CHECK((seq.mu_n - batch.mu_n).norm() < 1e-9);
    CHECK((seq.Psi_n - batch.Psi_n).norm() < 1e-9);
    CHECK((seq.beta_n - batch.beta_n).norm() < 1e-9);
    CHECK((seq.V_n - batch.V_n).norm() < 1e-9);
    CHECK(seq.a_n == Approx(batch.a_n));
    CHECK(seq.b_n == Approx(batch.b_n));
    CHECK(seq.lambda_n == Approx(batch.lambda_n));
    CHECK(seq.nu_n == Approx(batch.nu_n));
  }
}

TEST_CASE("posterior draws concentrate on the generating regression") {
  const auto H = unit_prior(2);
  Rng rng = make_stream(71, 0);
  const Eigen::Vector2d beta(2.0, -1.0);
  SufficientStats stats(2);
  for (int i = 0; i < 5000; ++i) {
    const Eigen::Vector2d x(std_normal(rng), std_normal(rng));
    stats.add(x, x.dot(beta) + 0.1 * std_normal(rng));
  }
  const auto phi = posterior_draw(H, stats, rng);
  CHECK((phi.beta() - beta).norm() < 0.05);
  CHECK(phi.sigma_y2() == Approx(0.01).epsilon(0.1));
}

TEST_CASE("base prior validation and data-scaled defaults") {
  auto H = unit_prior(2);
  CHECK_NOTHROW(H.validate());
  H.nu0 = 0.5;
  CHECK_THROWS_AS(H.validate(), ConfigError);
  Eigen::MatrixXd X(4, 2);
  X << 1, 2, 3, 4, 5, 7, 7, 6;
  const auto D = BasePrior::defaults_from(X);
  CHECK(D.mu0(0) == Approx(4.0));
  CHECK(D.nu0 == 4.0);
  CHECK_NOTHROW(D.validate());
}
