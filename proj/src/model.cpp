#include "mldp/model.hpp"

#include "mldp/error.hpp"

namespace mldp {

void ModelSpec::validate() const {
  hyper.validate(cfg);
  if (priors.empty()) throw ConfigError("model needs a base prior");
  if (priors.size() != 1 && priors.size() != cfg.num_bases())
    throw ConfigError("model needs one shared base prior or one per basis (" +
                      std::to_string(cfg.num_bases()) + ")");
  for (const auto& H : priors) {
    H.validate();
    if (H.dim() != priors.front().dim()) throw ConfigError("base priors disagree on dimension");
  }
}

ModelSpec ModelSpec::degenerate() const {
  ModelSpec out{cfg.degenerate(), hyper, {priors.front()}};
  if (hyper.heterogeneous) {
    out.hyper.heterogeneous = false;
    out.hyper.alpha_per_basis.clear();
  }
  return out;
}

}  // namespace mldp
