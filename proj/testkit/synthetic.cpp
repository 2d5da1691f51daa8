#include "mldp/testkit/synthetic.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <stdexcept>

namespace mldp::testkit {
namespace {

const double kLogTwoPi = std::log(2.0 * 3.14159265358979323846);

std::size_t draw_index(const std::vector<double>& p, Rng& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double cum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    cum += p[k];
    if (u < cum) return k;
  }
  return p.size() - 1;
}

Eigen::VectorXd gaussian(const Eigen::VectorXd& mu, const Eigen::MatrixXd& Sigma, Rng& rng) {
  Eigen::VectorXd z(mu.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = std::normal_distribution<double>(0.0, 1.0)(rng);
  return mu + Eigen::MatrixXd(Sigma.llt().matrixL()) * z;
}

double log_gaussian(const Eigen::VectorXd& x, const Eigen::VectorXd& mu, const Eigen::MatrixXd& Sigma) {
  const Eigen::VectorXd r = x - mu;
  return -0.5 * (static_cast<double>(x.size()) * kLogTwoPi + std::log(Sigma.determinant()) +
                 r.dot(Sigma.inverse() * r));
}

// Row-major digits (0-based) of a flat offset.
std::vector<int> digits(std::size_t offset, const Dims& dims) {
  std::vector<int> out(dims.size());
  for (std::size_t n = dims.size(); n-- > 0;) {
    out[n] = static_cast<int>(offset % static_cast<std::size_t>(dims[n]));
    offset /= static_cast<std::size_t>(dims[n]);
  }
  return out;
}

}  // namespace

std::vector<double> SyntheticSpec::group_weights(std::size_t group) const {
  if (!latent) return weights.at(group);
  const auto g = digits(group, cfg.factors_per_group());
  std::vector<double> logits(cfg.num_bases());
  for (std::size_t b = 0; b < logits.size(); ++b) {
    const auto i = digits(b, cfg.bases_per_group());
    double prod = 1.0;
    for (std::size_t n = 0; n < g.size(); ++n)
      prod *= latent->u[n][static_cast<std::size_t>(g[n])](i[n]);
    logits[b] = prod;
  }
  double top = logits[0];
  for (double l : logits) top = std::max(top, l);
  double total = 0.0;
  for (double& l : logits) total += (l = std::exp(l - top));
  for (double& l : logits) l /= total;
  return logits;
}

std::vector<double> SyntheticSpec::basis_proportions(std::size_t basis) const {
  if (basis < proportions.size() && !proportions[basis].empty()) return proportions[basis];
  const auto K = components.at(basis).size();
  return std::vector<double>(K, 1.0 / static_cast<double>(K));
}

std::vector<int> SyntheticData::labels() const {
  std::vector<int> out(basis.size());
  for (std::size_t s = 0; s < basis.size(); ++s) out[s] = basis[s] * 1000 + component[s];
  return out;
}

SyntheticData generate_synthetic(const SyntheticSpec& spec, Rng& rng) {
  if (spec.components.size() != spec.cfg.num_bases())
    throw std::invalid_argument("synthetic spec needs components for every basis");
  const int P = spec.dim();
  SyntheticData out{GroupedDataset(spec.cfg, P), {}, {}, {}};
  out.data.source_rows.assign(spec.cfg.num_cells(), {});
  std::size_t row = 0;
  for (std::size_t g = 0; g < spec.cfg.num_cells(); ++g) {
    const auto w = spec.group_weights(g);
    const auto M = static_cast<Eigen::Index>(spec.samples_per_group);
    out.data.X[g].resize(M, P);
    out.data.y[g].resize(M);
    for (Eigen::Index m = 0; m < M; ++m) {
      const auto b = draw_index(w, rng);
      const auto k = draw_index(spec.basis_proportions(b), rng);
      const auto& c = spec.components[b][k];
      const Eigen::VectorXd x = gaussian(c.mu, c.Sigma, rng);
      const double y = x.dot(c.beta) + std::sqrt(c.s2) * std::normal_distribution<double>(0.0, 1.0)(rng);
      out.data.X[g].row(m) = x.transpose();
      out.data.y[g](m) = y;
      out.data.source_rows[g].push_back(row++);
      out.basis.push_back(static_cast<int>(b));
      out.component.push_back(static_cast<int>(k));
      out.group.push_back(g);
    }
  }
  for (int p = 0; p < P; ++p) out.data.feature_names.push_back("x" + std::to_string(p + 1));
  return out;
}

SyntheticSpec grid2x2_spec(int samples_per_group) {
  SyntheticSpec spec;
  spec.cfg = FactorConfig({2, 2}, {2, 2});
  LatentFactors U;
  for (int n = 0; n < 2; ++n) {
    U.u.emplace_back();
    for (int j = 0; j < 2; ++j) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(2);
      v(j) = 2.0;
      U.u[static_cast<std::size_t>(n)].push_back(v);
    }
    U.sigma_u.push_back(1.0);
  }
  spec.latent = U;
  const auto comp = [](double m1, double m2, double b1, double b2) {
    return TrueComponent{Eigen::Vector2d(m1, m2), Eigen::Matrix2d::Identity(), Eigen::Vector2d(b1, b2), 0.25};
  };
  // Flat basis order: (1,1), (1,2), (2,1), (2,2).
  spec.components = {{comp(5, 0, 1, 0)}, {comp(5, 0, -1, 0)}, {comp(0, 5, 0, 1)}, {comp(0, 5, 0, -1)}};
  spec.samples_per_group = samples_per_group;
  return spec;
}

double bayes_optimal_prediction(const SyntheticSpec& spec, std::size_t group,
                                const Eigen::VectorXd& x) {
  const auto w = spec.group_weights(group);
  std::vector<double> logr, mean;
  for (std::size_t b = 0; b < spec.components.size(); ++b) {
    const auto pi = spec.basis_proportions(b);
    for (std::size_t k = 0; k < spec.components[b].size(); ++k) {
      const auto& c = spec.components[b][k];
      if (w[b] <= 0.0 || pi[k] <= 0.0) continue;
      logr.push_back(std::log(w[b]) + std::log(pi[k]) + log_gaussian(x, c.mu, c.Sigma));
      mean.push_back(x.dot(c.beta));
    }
  }
  double top = logr[0];
  for (double l : logr) top = std::max(top, l);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < logr.size(); ++i) {
    const double r = std::exp(logr[i] - top);
    num += r * mean[i];
    den += r;
  }
  return num / den;
}

void write_synthetic_csv(const GroupedDataset& data, std::ostream& os) {
  const auto& J = data.cfg.factors_per_group();
  for (std::size_t n = 0; n < J.size(); ++n) os << "f" << n + 1 << ',';
  for (int p = 0; p < data.dim(); ++p) os << "x" << p + 1 << ',';
  os << "y\n";
  os << std::setprecision(17);
  for (std::size_t g = 0; g < data.X.size(); ++g) {
    const auto idx = digits(g, J);
    for (Eigen::Index m = 0; m < data.X[g].rows(); ++m) {
      for (int d : idx) os << d + 1 << ',';
      for (Eigen::Index p = 0; p < data.X[g].cols(); ++p) os << data.X[g](m, p) << ',';
      os << data.y[g](m) << '\n';
    }
  }
}

}  // namespace mldp::testkit
