#pragma once

#include <compare>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace mldp {

using Dims = std::vector<int>;

/// Shape of a factor layout: N factor groups, J_n observed factors and I_n
/// basis dimensions per group.
class FactorConfig {
 public:
  FactorConfig(Dims factors_per_group, Dims bases_per_group);

  int n_groups() const { return static_cast<int>(factors_.size()); }
  const Dims& factors_per_group() const { return factors_; }
  const Dims& bases_per_group() const { return bases_; }

  /// S, the number of factor combinations (sample sets).
  std::size_t num_cells() const { return num_cells_; }
  /// I, the number of basis measures.
  std::size_t num_bases() const { return num_bases_; }

  /// Same factor layout with every I_n set to one.
  FactorConfig degenerate() const;

  friend bool operator==(const FactorConfig&, const FactorConfig&) = default;

 private:
  Dims factors_;
  Dims bases_;
  std::size_t num_cells_ = 0;
  std::size_t num_bases_ = 0;
};

/// 1-based multi-index. The tag keeps group and basis indices apart.
template <class Tag>
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> indices) : idx_(std::move(indices)) {}
  MultiIndex(std::initializer_list<int> indices) : idx_(indices) {}

  int operator[](std::size_t n) const { return idx_[n]; }
  std::size_t size() const { return idx_.size(); }
  const std::vector<int>& values() const { return idx_; }
  std::span<const int> span() const { return idx_; }

  std::string str() const {
    std::string out = "(";
    for (std::size_t n = 0; n < idx_.size(); ++n) {
      if (n) out += ",";
      out += std::to_string(idx_[n]);
    }
    return out + ")";
  }

  friend auto operator<=>(const MultiIndex&, const MultiIndex&) = default;

 private:
  std::vector<int> idx_;
};

struct GroupTag {};
struct BasisTag {};
using GroupIndex = MultiIndex<GroupTag>;
using BasisIndex = MultiIndex<BasisTag>;

/// Row-major offset (last index fastest) of a 1-based index into dims.
/// Throws RangeError on a length mismatch or an out-of-range entry.
std::size_t flat_index(std::span<const int> idx, const Dims& dims);
/// Inverse of flat_index; returns 1-based entries.
std::vector<int> unflatten(std::size_t offset, const Dims& dims);

std::size_t flat_index(const GroupIndex& g, const FactorConfig& cfg);
std::size_t flat_index(const BasisIndex& b, const FactorConfig& cfg);
GroupIndex group_at(std::size_t offset, const FactorConfig& cfg);
BasisIndex basis_at(std::size_t offset, const FactorConfig& cfg);

std::vector<GroupIndex> enumerate_groups(const FactorConfig& cfg);
std::vector<BasisIndex> enumerate_bases(const FactorConfig& cfg);

std::size_t product(const Dims& dims);

}  // namespace mldp
