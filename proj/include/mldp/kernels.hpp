#pragma once

#include <Eigen/Dense>
#include <span>
#include <string_view>

#include "mldp/components.hpp"

// Data-parallel inner loops. Each kernel has a serial reference and an OpenMP
// version; both write results slot-by-slot with no cross-thread reduction, so
// their outputs are bitwise identical.
namespace mldp::kernels {

enum class Backend { serial, openmp };

Backend parse_backend(std::string_view name);
std::string_view backend_name(Backend b);

/// out[k] = log f(x, y | phis[k]).
void log_likelihoods_serial(std::span<const RegressionComponent* const> phis,
                            const Eigen::VectorXd& x, double y, std::span<double> out);
void log_likelihoods_omp(std::span<const RegressionComponent* const> phis,
                         const Eigen::VectorXd& x, double y, std::span<double> out);

/// out[k] = log N(x | mu_x, Sigma_x) of phis[k].
void log_densities_x_serial(std::span<const RegressionComponent* const> phis,
                            const Eigen::VectorXd& x, std::span<double> out);
void log_densities_x_omp(std::span<const RegressionComponent* const> phis,
                         const Eigen::VectorXd& x, std::span<double> out);

inline void log_likelihoods(Backend b, std::span<const RegressionComponent* const> phis,
                            const Eigen::VectorXd& x, double y, std::span<double> out) {
  if (b == Backend::openmp)
    log_likelihoods_omp(phis, x, y, out);
  else
    log_likelihoods_serial(phis, x, y, out);
}

inline void log_densities_x(Backend b, std::span<const RegressionComponent* const> phis,
                            const Eigen::VectorXd& x, std::span<double> out) {
  if (b == Backend::openmp)
    log_densities_x_omp(phis, x, out);
  else
    log_densities_x_serial(phis, x, out);
}

}  // namespace mldp::kernels
