#pragma once

#include <vector>

#include "mldp/components.hpp"
#include "mldp/multiindex.hpp"
#include "mldp/prior.hpp"

namespace mldp {

/// Everything that defines the MLDP mixture of regressions apart from data:
/// the factor layout, DP hyperparameters and the base prior(s). priors holds
/// a single shared H, or one H per basis for the heterogeneous variant.
struct ModelSpec {
  FactorConfig cfg;
  Hyperparams hyper;
  std::vector<BasePrior> priors;

  const BasePrior& prior_for(std::size_t basis) const {
    return priors.size() == 1 ? priors.front() : priors[basis];
  }
  double alpha_for(std::size_t basis) const { return hyper.alpha_for(basis); }
  int dim() const { return priors.front().dim(); }

  void validate() const;
  /// The DP baseline: same data layout and priors, a single basis measure.
  ModelSpec degenerate() const;
};

}  // namespace mldp
