#include "mldp/trace.hpp"

#include <istream>
#include <ostream>
#include <string>

#include "mldp/error.hpp"

namespace mldp {
namespace {

using nlohmann::json;

json vec_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

// Row-major flattening.
json mat_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  return out;
}

Eigen::VectorXd vec_from(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Eigen::MatrixXd mat_from(const json& j, Eigen::Index dim) {
  if (static_cast<Eigen::Index>(j.size()) != dim * dim)
    throw InputError("trace: flattened matrix has " + std::to_string(j.size()) +
                     " entries, expected " + std::to_string(dim * dim));
  Eigen::MatrixXd m(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r)
    for (Eigen::Index c = 0; c < dim; ++c) m(r, c) = j[static_cast<std::size_t>(r * dim + c)].get<double>();
  return m;
}

}  // namespace

int Snapshot::occupancy(std::size_t b) const {
  int L = 0;
  for (const auto& c : clusters[b]) L += c.size;
  return L;
}

json to_json(const BasePrior& H) {
  json j{{"mu0", vec_json(H.mu0)}, {"lambda0", H.lambda0}, {"Psi0", mat_json(H.Psi0)},
         {"nu0", H.nu0},           {"V", mat_json(H.V)},     {"a_y", H.a_y},
         {"b_y", H.b_y}};
  if (H.beta0.size()) j["beta0"] = vec_json(H.beta0);
  return j;
}

BasePrior base_prior_from_json(const json& j) {
  BasePrior H;
  H.mu0 = vec_from(j.at("mu0"));
  H.lambda0 = j.at("lambda0").get<double>();
  H.Psi0 = mat_from(j.at("Psi0"), H.mu0.size());
  H.nu0 = j.at("nu0").get<double>();
  H.V = mat_from(j.at("V"), H.mu0.size());
  H.a_y = j.at("a_y").get<double>();
  H.b_y = j.at("b_y").get<double>();
  if (j.contains("beta0")) H.beta0 = vec_from(j.at("beta0"));
  return H;
}

json to_json(const LatentFactors& U) {
  json u = json::array();
  for (const auto& group : U.u) {
    json g = json::array();
    for (const auto& v : group) g.push_back(vec_json(v));
    u.push_back(std::move(g));
  }
  return json{{"u", std::move(u)}, {"sigma_u", U.sigma_u}};
}

LatentFactors latent_from_json(const json& j) {
  LatentFactors U;
  for (const auto& g : j.at("u")) {
    std::vector<Eigen::VectorXd> group;
    for (const auto& v : g) group.push_back(vec_from(v));
    U.u.push_back(std::move(group));
  }
  U.sigma_u = j.at("sigma_u").get<std::vector<double>>();
  return U;
}

json to_json(const RegressionComponent& phi) {
  return json{{"mu_x", vec_json(phi.mu_x())},
              {"Sigma_x", mat_json(phi.Sigma_x())},
              {"beta", vec_json(phi.beta())},
              {"sigma_y2", phi.sigma_y2()}};
}

RegressionComponent component_from_json(const json& j) {
  Eigen::VectorXd mu = vec_from(j.at("mu_x"));
  Eigen::MatrixXd Sigma = mat_from(j.at("Sigma_x"), mu.size());
  return RegressionComponent(std::move(mu), std::move(Sigma), vec_from(j.at("beta")),
                             j.at("sigma_y2").get<double>());
}

void write_trace_ndjson(const Trace& trace, std::ostream& os) {
  const auto& m = trace.model;
  json priors = json::array();
  for (const auto& H : m.priors) priors.push_back(to_json(H));
  json header{{"type", "header"},
              {"format", "mldp-trace"},
              {"version", 1},
              {"factors_per_group", m.cfg.factors_per_group()},
              {"bases_per_group", m.cfg.bases_per_group()},
              {"hyper",
               {{"alpha", m.hyper.alpha},
                {"sigma0", m.hyper.sigma0},
                {"heterogeneous", m.hyper.heterogeneous},
                {"alpha_per_basis", m.hyper.alpha_per_basis}}},
              {"priors", std::move(priors)},
              {"n_snapshots", trace.snapshots.size()},
              {"meta", trace.meta}};
  os << header.dump() << '\n';
  for (const auto& snap : trace.snapshots) {
    json clusters = json::array();
    for (const auto& basis : snap.clusters) {
      json b = json::array();
      for (const auto& c : basis) {
        json cj = to_json(c.phi);
        cj["size"] = c.size;
        b.push_back(std::move(cj));
      }
      clusters.push_back(std::move(b));
    }
    json line{{"type", "snapshot"},       {"sweep", snap.sweep},
              {"log_joint", snap.log_joint}, {"basis", snap.basis},
              {"cluster", snap.cluster},   {"latent", to_json(snap.latent)},
              {"clusters", std::move(clusters)}};
    os << line.dump() << '\n';
  }
}

Trace read_trace_ndjson(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InputError("trace: empty file");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw InputError(std::string("trace: malformed header: ") + e.what());
  }
  if (header.value("type", "") != "header" || header.value("format", "") != "mldp-trace")
    throw InputError("trace: first line is not an mldp-trace header");

  try {
    FactorConfig cfg(header.at("factors_per_group").get<Dims>(),
                     header.at("bases_per_group").get<Dims>());
    Hyperparams hyper;
    const auto& h = header.at("hyper");
    hyper.alpha = h.at("alpha").get<double>();
    hyper.sigma0 = h.at("sigma0").get<double>();
    hyper.heterogeneous = h.at("heterogeneous").get<bool>();
    hyper.alpha_per_basis = h.at("alpha_per_basis").get<std::vector<double>>();
    std::vector<BasePrior> priors;
    for (const auto& p : header.at("priors")) priors.push_back(base_prior_from_json(p));
    Trace trace{ModelSpec{cfg, hyper, std::move(priors)}, {}, {}, header.value("meta", json::object())};
    trace.model.validate();

    std::size_t lineno = 1;
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty()) continue;
      const json j = json::parse(line);
      if (j.value("type", "") != "snapshot")
        throw InputError("trace: line " + std::to_string(lineno) + " is not a snapshot");
      Snapshot snap;
      snap.sweep = j.at("sweep").get<int>();
      snap.log_joint = j.at("log_joint").get<double>();
      snap.basis = j.at("basis").get<std::vector<int>>();
      snap.cluster = j.at("cluster").get<std::vector<int>>();
      snap.latent = latent_from_json(j.at("latent"));
      snap.latent.validate(cfg);
      for (const auto& b : j.at("clusters")) {
        std::vector<ClusterSnapshot> cs;
        for (const auto& c : b) cs.push_back(ClusterSnapshot{component_from_json(c), c.at("size").get<int>()});
        snap.clusters.push_back(std::move(cs));
      }
      if (snap.clusters.size() != cfg.num_bases())
        throw InputError("trace: snapshot at line " + std::to_string(lineno) +
                         " has the wrong number of bases");
      trace.snapshots.push_back(std::move(snap));
    }
    return trace;
  } catch (const json::exception& e) {
    throw InputError(std::string("trace: ") + e.what());
  }
}

void write_sweeps_csv(const Trace& trace, std::ostream& os) {
  os << "sweep,log_joint,n_live_clusters_total\n";
  for (const auto& r : trace.sweeps) {
    json lj = r.log_joint;
    os << r.sweep << ',' << lj.dump() << ',' << r.live_clusters << '\n';
  }
}

}  // namespace mldp
