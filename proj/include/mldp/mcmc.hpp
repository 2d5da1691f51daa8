#pragma once

#include <cmath>
#include <functional>
#include <random>

#include "mldp/rng.hpp"

namespace mldp::mcmc {

/// Metropolis-Hastings log acceptance ratio including proposal asymmetry.
inline double mh_log_ratio(double logp_current, double logp_proposed, double log_q_reverse,
                           double log_q_forward) {
  return (logp_proposed - logp_current) + (log_q_reverse - log_q_forward);
}

inline double mh_accept_probability(double log_ratio) {
  return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

/// Always consumes exactly one uniform so the stream stays aligned.
inline bool mh_accept(double log_ratio, Rng& rng) {
  return std::log(uniform01(rng)) < log_ratio;
}

struct SliceOptions {
  double width = 1.0;
  int max_doublings = 20;
};

/// One univariate slice-sampling update with the doubling procedure and
/// shrinkage (including the acceptance test that keeps doubling reversible).
/// Leaves the density exp(logf) invariant.
double slice_sample_doubling(double x0, const std::function<double(double)>& logf,
                             const SliceOptions& opt, Rng& rng);

}  // namespace mldp::mcmc
