#include "mldp/multiindex.hpp"

#include "mldp/error.hpp"

namespace mldp {

std::size_t product(const Dims& dims) {
  std::size_t p = 1;
  for (int d : dims) p *= static_cast<std::size_t>(d);
  return p;
}

FactorConfig::FactorConfig(Dims factors_per_group, Dims bases_per_group)
    : factors_(std::move(factors_per_group)), bases_(std::move(bases_per_group)) {
  if (factors_.empty()) throw ConfigError("factor config needs at least one group");
  if (factors_.size() != bases_.size())
    throw ConfigError("factor config: " + std::to_string(factors_.size()) +
                      " factor counts but " + std::to_string(bases_.size()) +
                      " basis dimensions");
  for (std::size_t n = 0; n < factors_.size(); ++n) {
    if (factors_[n] < 1)
      throw ConfigError("factor group " + std::to_string(n + 1) + " has no factors");
    if (bases_[n] < 1)
      throw ConfigError("factor group " + std::to_string(n + 1) +
                        " has no basis dimensions");
  }
  num_cells_ = product(factors_);
  num_bases_ = product(bases_);
}

FactorConfig FactorConfig::degenerate() const {
  return FactorConfig(factors_, Dims(factors_.size(), 1));
}

std::size_t flat_index(std::span<const int> idx, const Dims& dims) {
  if (idx.size() != dims.size())
    throw RangeError("index has " + std::to_string(idx.size()) +
                     " entries, expected " + std::to_string(dims.size()));
  std::size_t offset = 0;
  for (std::size_t n = 0; n < dims.size(); ++n) {
    if (idx[n] < 1 || idx[n] > dims[n])
      throw RangeError("index entry " + std::to_string(n + 1) + " = " +
                       std::to_string(idx[n]) + " outside [1, " +
                       std::to_string(dims[n]) + "]");
    offset = offset * static_cast<std::size_t>(dims[n]) +
             static_cast<std::size_t>(idx[n] - 1);
  }
  return offset;
}

std::vector<int> unflatten(std::size_t offset, const Dims& dims) {
  if (offset >= product(dims))
    throw RangeError("flat offset " + std::to_string(offset) + " out of range");
  std::vector<int> idx(dims.size());
  for (std::size_t n = dims.size(); n-- > 0;) {
    const auto d = static_cast<std::size_t>(dims[n]);
    idx[n] = static_cast<int>(offset % d) + 1;
    offset /= d;
  }
  return idx;
}

std::size_t flat_index(const GroupIndex& g, const FactorConfig& cfg) {
  return flat_index(g.span(), cfg.factors_per_group());
}

std::size_t flat_index(const BasisIndex& b, const FactorConfig& cfg) {
  return flat_index(b.span(), cfg.bases_per_group());
}

GroupIndex group_at(std::size_t offset, const FactorConfig& cfg) {
  return GroupIndex(unflatten(offset, cfg.factors_per_group()));
}

BasisIndex basis_at(std::size_t offset, const FactorConfig& cfg) {
  return BasisIndex(unflatten(offset, cfg.bases_per_group()));
}

std::vector<GroupIndex> enumerate_groups(const FactorConfig& cfg) {
  std::vector<GroupIndex> out;
  out.reserve(cfg.num_cells());
  for (std::size_t s = 0; s < cfg.num_cells(); ++s) out.push_back(group_at(s, cfg));
  return out;
}

std::vector<BasisIndex> enumerate_bases(const FactorConfig& cfg) {
  std::vector<BasisIndex> out;
  out.reserve(cfg.num_bases());
  for (std::size_t b = 0; b < cfg.num_bases(); ++b) out.push_back(basis_at(b, cfg));
  return out;
}

}  // namespace mldp
