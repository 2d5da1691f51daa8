#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <vector>

#include "mldp/multiindex.hpp"
#include "mldp/rng.hpp"

namespace mldp {

/// Per-factor latent vectors. u[n][j] is the vector of factor j (0-based) in
/// group n and has length I_n; sigma_u[n] is the prior scale of group n.
struct LatentFactors {
  std::vector<std::vector<Eigen::VectorXd>> u;
  std::vector<double> sigma_u;

  int n_groups() const { return static_cast<int>(u.size()); }
  Dims bases_dims() const;
  Dims factor_dims() const;
  /// Throws ShapeError / ConfigError unless shapes match cfg and scales are positive.
  void validate(const FactorConfig& cfg) const;

  static LatentFactors zeros(const FactorConfig& cfg, double sigma_u = 1.0);
};

struct Hyperparams {
  double alpha = 1.0;
  double sigma0 = 1.0;
  /// Per-basis concentrations (and base priors, see ModelSpec) instead of a
  /// single shared DP.
  bool heterogeneous = false;
  std::vector<double> alpha_per_basis;

  double alpha_for(std::size_t basis) const {
    return heterogeneous ? alpha_per_basis[basis] : alpha;
  }
  void validate(const FactorConfig& cfg) const;
};

/// Mixing weights of one factor combination over the basis measures, flat in
/// row-major basis order.
struct WeightTensor {
  GroupIndex group;
  std::vector<double> w;
};

WeightTensor compute_weights(const LatentFactors& U, const GroupIndex& g);
std::vector<double> log_weights(const LatentFactors& U, const GroupIndex& g);
/// Multilinear logits prod_n u^{n,g_n}_{i_n} for every basis, row-major.
std::vector<double> basis_logits(const LatentFactors& U, const GroupIndex& g);

/// Sum of squared weights; scales the conditional variance of G(B).
double weight_concentration(const WeightTensor& wt);

LatentFactors sample_latent_factors(const Hyperparams& h, const FactorConfig& cfg,
                                    Rng& rng);

struct StickWeights {
  std::vector<double> weights;
  double residual = 1.0;
};

/// pi_k = v_k prod_{l<k} (1 - v_l); residual = prod_k (1 - v_k).
StickWeights stick_breaking_weights(std::span<const double> fractions);

/// Draw from Beta(1, alpha) by inversion.
inline double draw_stick_fraction(double alpha, Rng& rng) {
  return 1.0 - std::pow(1.0 - uniform01(rng), 1.0 / alpha);
}

template <class Atom>
struct TruncatedMeasure {
  std::vector<Atom> atoms;
  std::vector<double> weights;
  std::vector<double> fractions;
  double residual = 1.0;

  int truncation_level() const { return static_cast<int>(weights.size()); }
};

/// Truncated stick-breaking draw of DP(alpha, base) with K atoms. The
/// residual mass is reported, not folded back into the weights.
template <class Atom, class BaseDraw>
TruncatedMeasure<Atom> stick_breaking_draw(double alpha, BaseDraw&& base, int K, Rng& rng) {
  TruncatedMeasure<Atom> out;
  out.fractions.reserve(static_cast<std::size_t>(K));
  out.atoms.reserve(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    out.fractions.push_back(draw_stick_fraction(alpha, rng));
    out.atoms.push_back(base(rng));
  }
  auto sw = stick_breaking_weights(out.fractions);
  out.weights = std::move(sw.weights);
  out.residual = sw.residual;
  return out;
}

template <class Atom>
struct MixedMeasure {
  std::vector<Atom> atoms;
  std::vector<double> weights;
  std::vector<std::size_t> source_basis;
};

template <class Atom>
struct DependentMeasures {
  std::vector<TruncatedMeasure<Atom>> bases;
  /// One mixed measure per factor combination, flat group order.
  std::vector<MixedMeasure<Atom>> groups;
  /// Largest truncation residual over the basis draws; this mass was
  /// renormalized away when forming the group measures.
  double max_residual = 0.0;
};

/// Draws the I basis measures and forms, for every factor combination, the
/// weighted mixture over the union of their atoms. base(basis, rng) draws one
/// atom of the given basis' base distribution.
template <class Atom, class BaseFor>
DependentMeasures<Atom> simulate_dependent_measures(const LatentFactors& U,
                                                    const Hyperparams& h,
                                                    const FactorConfig& cfg,
                                                    BaseFor&& base, int K, Rng& rng) {
  DependentMeasures<Atom> out;
  out.bases.reserve(cfg.num_bases());
  for (std::size_t b = 0; b < cfg.num_bases(); ++b) {
    auto draw = [&](Rng& r) { return base(b, r); };
    out.bases.push_back(stick_breaking_draw<Atom>(h.alpha_for(b), draw, K, rng));
    out.max_residual = std::max(out.max_residual, out.bases.back().residual);
  }
  out.groups.reserve(cfg.num_cells());
  for (const auto& g : enumerate_groups(cfg)) {
    const auto wt = compute_weights(U, g);
    MixedMeasure<Atom> mixed;
    for (std::size_t b = 0; b < out.bases.size(); ++b) {
      const auto& basis = out.bases[b];
      const double scale = wt.w[b] / (1.0 - basis.residual);
      for (std::size_t k = 0; k < basis.atoms.size(); ++k) {
        mixed.atoms.push_back(basis.atoms[k]);
        mixed.weights.push_back(scale * basis.weights[k]);
        mixed.source_basis.push_back(b);
      }
    }
    out.groups.push_back(std::move(mixed));
  }
  return out;
}

/// Monte-Carlo check of E{G(B)|U} = H(B) and
/// V{G(B)|U} = sum_i w_i^2 H(B)(1-H(B)) / (1+alpha_i) with H standard normal
/// and B = (-inf, borel_upper].
struct GroupMoments {
  std::size_t group = 0;
  double concentration = 0.0;
  double mean = 0.0;
  double mean_se = 0.0;
  double expected_mean = 0.0;
  double var = 0.0;
  double var_se = 0.0;
  double expected_var = 0.0;
  bool mean_ok = false;
  bool var_ok = false;
};

struct MomentSummary {
  int draws = 0;
  int truncation = 0;
  double borel_upper = 0.0;
  double base_mass = 0.0;
  double max_residual = 0.0;
  double tolerance_se = 3.0;
  std::vector<GroupMoments> groups;

  bool passed() const;
};

MomentSummary check_moments(const LatentFactors& U, const Hyperparams& h,
                            const FactorConfig& cfg, int truncation, int draws,
                            double borel_upper, Rng& rng);

}  // namespace mldp
