#include "mldp/prior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mldp/error.hpp"

namespace mldp {

Dims LatentFactors::bases_dims() const {
  Dims dims;
  for (const auto& group : u) dims.push_back(group.empty() ? 0 : static_cast<int>(group.front().size()));
  return dims;
}

Dims LatentFactors::factor_dims() const {
  Dims dims;
  for (const auto& group : u) dims.push_back(static_cast<int>(group.size()));
  return dims;
}

void LatentFactors::validate(const FactorConfig& cfg) const {
  if (n_groups() != cfg.n_groups() || sigma_u.size() != u.size())
    throw ShapeError("latent factors: group count does not match factor config");
  for (int n = 0; n < cfg.n_groups(); ++n) {
    if (static_cast<int>(u[n].size()) != cfg.factors_per_group()[n])
      throw ShapeError("latent factors: group " + std::to_string(n + 1) +
                       " has the wrong number of factors");
    for (const auto& v : u[n])
      if (v.size() != cfg.bases_per_group()[n])
        throw ShapeError("latent factors: group " + std::to_string(n + 1) +
                         " vector length differs from I_n");
    if (!(sigma_u[n] > 0.0) || !std::isfinite(sigma_u[n]))
      throw ConfigError("latent factors: sigma_u must be positive and finite");
  }
}

LatentFactors LatentFactors::zeros(const FactorConfig& cfg, double sigma_u) {
  LatentFactors U;
  for (int n = 0; n < cfg.n_groups(); ++n) {
    U.u.emplace_back(static_cast<std::size_t>(cfg.factors_per_group()[n]),
                     Eigen::VectorXd::Zero(cfg.bases_per_group()[n]));
    U.sigma_u.push_back(sigma_u);
  }
  return U;
}

void Hyperparams::validate(const FactorConfig& cfg) const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be positive");
  if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) throw ConfigError("sigma0 must be positive");
  if (heterogeneous) {
    if (alpha_per_basis.size() != cfg.num_bases())
      throw ConfigError("heterogeneous model needs one alpha per basis (" +
                        std::to_string(cfg.num_bases()) + ")");
    for (double a : alpha_per_basis)
      if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("per-basis alpha must be positive");
  }
}

std::vector<double> basis_logits(const LatentFactors& U, const GroupIndex& g) {
  if (g.size() != U.u.size())
    throw RangeError("group index " + g.str() + " has the wrong number of entries");
  std::vector<double> logits{1.0};
  for (std::size_t n = 0; n < U.u.size(); ++n) {
    const int j = g[n];
    if (j < 1 || j > static_cast<int>(U.u[n].size()))
      throw RangeError("group index " + g.str() + " out of range");
    const Eigen::VectorXd& v = U.u[n][static_cast<std::size_t>(j - 1)];
    std::vector<double> next;
    next.reserve(logits.size() * static_cast<std::size_t>(v.size()));
    for (double head : logits)
      for (Eigen::Index i = 0; i < v.size(); ++i) next.push_back(head * v[i]);
    logits = std::move(next);
  }
  for (double t : logits)
    if (!std::isfinite(t)) throw NumericError("non-finite latent factor entry in group " + g.str());
  return logits;
}

std::vector<double> log_weights(const LatentFactors& U, const GroupIndex& g) {
  auto t = basis_logits(U, g);
  const double top = *std::max_element(t.begin(), t.end());
  double sum = 0.0;
  for (double v : t) sum += std::exp(v - top);
  const double lse = top + std::log(sum);
  for (double& v : t) v -= lse;
  return t;
}

WeightTensor compute_weights(const LatentFactors& U, const GroupIndex& g) {
  auto t = basis_logits(U, g);
  const double top = *std::max_element(t.begin(), t.end());
  double sum = 0.0;
  for (double& v : t) {
    v = std::exp(v - top);
    sum += v;
  }
  for (double& v : t) v /= sum;
  return WeightTensor{g, std::move(t)};
}

double weight_concentration(const WeightTensor& wt) {
  double s = 0.0;
  for (double w : wt.w) s += w * w;
  return s;
}

LatentFactors sample_latent_factors(const Hyperparams& h, const FactorConfig& cfg, Rng& rng) {
  LatentFactors U;
  for (int n = 0; n < cfg.n_groups(); ++n) {
    const double log_var = h.sigma0 * std_normal(rng);
    const double sigma = std::exp(0.5 * log_var);
    U.sigma_u.push_back(sigma);
    std::vector<Eigen::VectorXd> vecs;
    for (int j = 0; j < cfg.factors_per_group()[n]; ++j) {
      Eigen::VectorXd v(cfg.bases_per_group()[n]);
      for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = sigma * std_normal(rng);
      vecs.push_back(std::move(v));
    }
    U.u.push_back(std::move(vecs));
  }
  return U;
}

StickWeights stick_breaking_weights(std::span<const double> fractions) {
  StickWeights out;
  out.weights.reserve(fractions.size());
  double remaining = 1.0;
  for (double v : fractions) {
    out.weights.push_back(v * remaining);
    remaining *= 1.0 - v;
  }
  out.residual = remaining;
  return out;
}

bool MomentSummary::passed() const {
  return std::all_of(groups.begin(), groups.end(),
                     [](const GroupMoments& m) { return m.mean_ok && m.var_ok; });
}

MomentSummary check_moments(const LatentFactors& U, const Hyperparams& h,
                            const FactorConfig& cfg, int truncation, int draws,
                            double borel_upper, Rng& rng) {
  if (draws < 2) throw ConfigError("moment check needs at least two draws");
  if (truncation < 1) throw ConfigError("truncation level must be at least 1");
  U.validate(cfg);
  h.validate(cfg);

  MomentSummary summary;
  summary.draws = draws;
  summary.truncation = truncation;
  summary.borel_upper = borel_upper;
  summary.base_mass = 0.5 * std::erfc(-borel_upper / std::sqrt(2.0));

  const std::size_t S = cfg.num_cells();
  std::vector<std::vector<double>> values(S, std::vector<double>(static_cast<std::size_t>(draws)));
  auto base = [](std::size_t, Rng& r) { return std_normal(r); };
  for (int d = 0; d < draws; ++d) {
    auto sim = simulate_dependent_measures<double>(U, h, cfg, base, truncation, rng);
    summary.max_residual = std::max(summary.max_residual, sim.max_residual);
    for (std::size_t g = 0; g < S; ++g) {
      const auto& m = sim.groups[g];
      double mass = 0.0;
      for (std::size_t k = 0; k < m.atoms.size(); ++k)
        if (m.atoms[k] <= borel_upper) mass += m.weights[k];
      values[g][static_cast<std::size_t>(d)] = mass;
    }
  }

  const double H = summary.base_mass;
  const auto n = static_cast<double>(draws);
  for (std::size_t g = 0; g < S; ++g) {
    const auto wt = compute_weights(U, group_at(g, cfg));
    GroupMoments gm;
    gm.group = g;
    gm.concentration = weight_concentration(wt);
    gm.expected_mean = H;
    for (std::size_t b = 0; b < wt.w.size(); ++b)
      gm.expected_var += wt.w[b] * wt.w[b] * H * (1.0 - H) / (1.0 + h.alpha_for(b));

    const auto& xs = values[g];
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double m2 = 0.0, m4 = 0.0;
    for (double x : xs) {
      const double d2 = (x - mean) * (x - mean);
      m2 += d2;
      m4 += d2 * d2;
    }
    const double var = m2 / (n - 1.0);
    m4 /= n;
    gm.mean = mean;
    gm.mean_se = std::sqrt(var / n);
    gm.var = var;
    gm.var_se = std::sqrt(std::max(m4 - (m2 / n) * (m2 / n), 0.0) / n);
    gm.mean_ok = std::abs(gm.mean - gm.expected_mean) < summary.tolerance_se * gm.mean_se;
    gm.var_ok = std::abs(gm.var - gm.expected_var) < summary.tolerance_se * gm.var_se;
    summary.groups.push_back(gm);
  }
  return summary;
}

}  // namespace mldp
