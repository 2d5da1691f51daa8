#pragma once

#include <iosfwd>
#include <vector>

#include "json.hpp"
#include "mldp/components.hpp"
#include "mldp/model.hpp"
#include "mldp/prior.hpp"

namespace mldp {

struct ClusterSnapshot {
  RegressionComponent phi;
  int size = 0;
};

/// One recorded state of the chain. basis/cluster are per sample in canonical
/// order (groups in row-major order, then row); clusters[b] lists the live
/// clusters of basis b in registry order.
struct Snapshot {
  int sweep = 0;
  std::vector<int> basis;
  std::vector<int> cluster;
  LatentFactors latent;
  std::vector<std::vector<ClusterSnapshot>> clusters;
  double log_joint = 0.0;

  /// L_b, the number of samples on basis b.
  int occupancy(std::size_t b) const;
};

struct SweepRecord {
  int sweep = 0;
  double log_joint = 0.0;
  int live_clusters = 0;
};

struct Trace {
  ModelSpec model;
  std::vector<Snapshot> snapshots;
  std::vector<SweepRecord> sweeps;
  /// Free-form run metadata (sampler settings, preprocessing) carried in the
  /// trace header.
  nlohmann::json meta = nlohmann::json::object();
};

/// Newline-delimited JSON: a header line ({"type":"header", ...}) followed by
/// one {"type":"snapshot", ...} line per snapshot. Doubles are written with
/// round-trip precision.
void write_trace_ndjson(const Trace& trace, std::ostream& os);
Trace read_trace_ndjson(std::istream& is);

/// CSV with columns sweep,log_joint,n_live_clusters_total.
void write_sweeps_csv(const Trace& trace, std::ostream& os);

nlohmann::json to_json(const BasePrior& H);
BasePrior base_prior_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LatentFactors& U);
LatentFactors latent_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RegressionComponent& phi);
RegressionComponent component_from_json(const nlohmann::json& j);

}  // namespace mldp
