#include "mldp/kernels.hpp"

#include <omp.h>

#include <string>

#include "mldp/error.hpp"

namespace mldp::kernels {
namespace {

// Below this many candidates the thread start-up costs more than the work.
constexpr std::ptrdiff_t kParallelThreshold = 32;

void check_sizes(std::size_t n_phis, std::size_t n_out) {
  if (n_phis != n_out) throw ShapeError("kernel output span has the wrong length");
}

}  // namespace

Backend parse_backend(std::string_view name) {
  if (name == "serial") return Backend::serial;
  if (name == "openmp") return Backend::openmp;
  throw ConfigError("unknown kernel backend '" + std::string(name) + "'");
}

std::string_view backend_name(Backend b) { return b == Backend::openmp ? "openmp" : "serial"; }

void log_likelihoods_serial(std::span<const RegressionComponent* const> phis,
                            const Eigen::VectorXd& x, double y, std::span<double> out) {
  check_sizes(phis.size(), out.size());
  for (std::size_t k = 0; k < phis.size(); ++k) out[k] = log_likelihood(*phis[k], x, y);
}

void log_likelihoods_omp(std::span<const RegressionComponent* const> phis,
                         const Eigen::VectorXd& x, double y, std::span<double> out) {
  check_sizes(phis.size(), out.size());
  const auto n = static_cast<std::ptrdiff_t>(phis.size());
  for (const auto* phi : phis)
    if (phi->dim() != x.size()) throw ShapeError("feature vector length mismatch");
#pragma omp parallel for schedule(static) if (n >= kParallelThreshold)
  for (std::ptrdiff_t k = 0; k < n; ++k) out[k] = log_likelihood(*phis[k], x, y);
}

void log_densities_x_serial(std::span<const RegressionComponent* const> phis,
                            const Eigen::VectorXd& x, std::span<double> out) {
  check_sizes(phis.size(), out.size());
  for (std::size_t k = 0; k < phis.size(); ++k) out[k] = predictive_log_density_x(*phis[k], x);
}

void log_densities_x_omp(std::span<const RegressionComponent* const> phis,
                         const Eigen::VectorXd& x, std::span<double> out) {
  check_sizes(phis.size(), out.size());
  const auto n = static_cast<std::ptrdiff_t>(phis.size());
  for (const auto* phi : phis)
    if (phi->dim() != x.size()) throw ShapeError("feature vector length mismatch");
#pragma omp parallel for schedule(static) if (n >= kParallelThreshold)
  for (std::ptrdiff_t k = 0; k < n; ++k) out[k] = predictive_log_density_x(*phis[k], x);
}

}  // namespace mldp::kernels
