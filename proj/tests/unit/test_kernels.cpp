#include <memory>

#include "doctest.h"
#include "mldp/kernels.hpp"
#include "mldp/error.hpp"

using namespace mldp;

namespace {

std::vector<RegressionComponent> random_components(int K, int P, Rng& rng) {
  std::vector<RegressionComponent> out;
  for (int k = 0; k < K; ++k) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Random(P, P);
    Eigen::VectorXd mu(P), beta(P);
    for (int i = 0; i < P; ++i) {
      mu(i) = std_normal(rng);
      beta(i) = std_normal(rng);
    }
    out.emplace_back(mu, A * A.transpose() + Eigen::MatrixXd::Identity(P, P), beta, 0.2 + uniform01(rng));
  }
  return out;
}

}  // namespace

TEST_CASE("serial and OpenMP kernels agree bitwise") {
  Rng rng = make_stream(73, 0);
  for (int K : {1, 7, 64, 513}) {
    const auto comps = random_components(K, 3, rng);
    std::vector<const RegressionComponent*> ptrs;
    for (const auto& c : comps) ptrs.push_back(&c);
    const Eigen::Vector3d x(std_normal(rng), std_normal(rng), std_normal(rng));
    const double y = std_normal(rng);
    std::vector<double> a(ptrs.size()), b(ptrs.size()), c(ptrs.size()), d(ptrs.size());
    kernels::log_likelihoods_serial(ptrs, x, y, a);
    kernels::log_likelihoods_omp(ptrs, x, y, b);
    kernels::log_densities_x_serial(ptrs, x, c);
    kernels::log_densities_x_omp(ptrs, x, d);
    CHECK(a == b);
    CHECK(c == d);
    for (std::size_t k = 0; k < ptrs.size(); ++k) {
      CHECK(a[k] == log_likelihood(comps[k], x, y));
      CHECK(c[k] == predictive_log_density_x(comps[k], x));
    }
  }
}

TEST_CASE("backend names round-trip") {
  CHECK(kernels::parse_backend("serial") == kernels::Backend::serial);
  CHECK(kernels::parse_backend("openmp") == kernels::Backend::openmp);
  CHECK(kernels::backend_name(kernels::Backend::openmp) == "openmp");
  CHECK_THROWS_AS(kernels::parse_backend("cuda"), ConfigError);
}
