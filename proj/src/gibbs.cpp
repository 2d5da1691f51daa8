#include "mldp/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "mldp/error.hpp"
#include "mldp/mcmc.hpp"

namespace mldp {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double log_normal_density(double x, double var) {
  return -0.5 * (kLog2Pi + std::log(var) + x * x / var);
}

// 0-based per-group digits of every flat basis offset.
std::vector<std::vector<int>> basis_digits(const FactorConfig& cfg) {
  std::vector<std::vector<int>> out;
  out.reserve(cfg.num_bases());
  for (std::size_t b = 0; b < cfg.num_bases(); ++b) {
    auto idx = unflatten(b, cfg.bases_per_group());
    for (int& v : idx) --v;
    out.push_back(std::move(idx));
  }
  return out;
}

double group_data_term(const LatentFactors& U, const std::vector<int>& counts,
                       const GroupIndex& g) {
  const long total = std::accumulate(counts.begin(), counts.end(), 0L);
  if (total == 0) return 0.0;
  const auto lw = log_weights(U, g);
  double out = 0.0;
  for (std::size_t b = 0; b < lw.size(); ++b)
    if (counts[b]) out += counts[b] * lw[b];
  return out;
}

double vector_prior_term(const Eigen::VectorXd& u, double sigma) {
  const double var = sigma * sigma;
  double out = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) out += log_normal_density(u[i], var);
  return out;
}

// Accumulates the data-term gradient of one group into grad.
void add_group_gradient(const LatentFactors& U, const std::vector<int>& counts,
                        const GroupIndex& g, const std::vector<std::vector<int>>& digits,
                        LatentGradient& grad, int only_group = -1) {
  const long total = std::accumulate(counts.begin(), counts.end(), 0L);
  if (total == 0) return;
  const auto lw = log_weights(U, g);
  const int N = U.n_groups();
  for (std::size_t b = 0; b < lw.size(); ++b) {
    const double coef = counts[b] - static_cast<double>(total) * std::exp(lw[b]);
    if (coef == 0.0) continue;
    for (int n = 0; n < N; ++n) {
      if (only_group >= 0 && n != only_group) continue;
      double other = 1.0;
      for (int m = 0; m < N; ++m)
        if (m != n) other *= U.u[m][g[m] - 1][digits[b][m]];
      grad[n][g[n] - 1][digits[b][n]] += coef * other;
    }
  }
}

}  // namespace

USampler parse_u_sampler(std::string_view name) {
  if (name == "random-walk") return USampler::random_walk;
  if (name == "gradient") return USampler::gradient;
  throw ConfigError("unknown u_sampler '" + std::string(name) +
                    "' (expected random-walk or gradient)");
}

std::string_view u_sampler_name(USampler s) {
  return s == USampler::gradient ? "gradient" : "random-walk";
}

void SamplerConfig::validate() const {
  if (aux < 1) throw ConfigError("sampler: aux must be at least 1");
  if (iterations < 1) throw ConfigError("sampler: iterations must be at least 1");
  if (burn_in < 0 || burn_in >= iterations)
    throw ConfigError("sampler: burn_in must be in [0, iterations)");
  if (thin < 1) throw ConfigError("sampler: thin must be at least 1");
  if (!(u_step > 0.0)) throw ConfigError("sampler: u_step must be positive");
  if (!(slice_width > 0.0)) throw ConfigError("sampler: slice_width must be positive");
}

FlatSamples flatten(const GroupedDataset& data) {
  FlatSamples out;
  for (std::size_t g = 0; g < data.X.size(); ++g) {
    for (Eigen::Index m = 0; m < data.X[g].rows(); ++m) {
      out.samples.push_back(LabeledSample{data.X[g].row(m).transpose(), data.y[g][m]});
      out.group.push_back(g);
      out.row.push_back(static_cast<std::size_t>(m));
    }
  }
  return out;
}

int ClusterRegistry::live_clusters() const {
  int n = 0;
  for (const auto& b : bases) n += static_cast<int>(b.size());
  return n;
}

double logpost_U(const LatentFactors& U, const CountTable& counts, const FactorConfig& cfg) {
  double out = 0.0;
  for (std::size_t g = 0; g < cfg.num_cells(); ++g)
    out += group_data_term(U, counts[g], group_at(g, cfg));
  for (int n = 0; n < U.n_groups(); ++n)
    for (const auto& u : U.u[n]) out += vector_prior_term(u, U.sigma_u[n]);
  return out;
}

LatentGradient grad_U(const LatentFactors& U, const CountTable& counts, const FactorConfig& cfg) {
  LatentGradient grad;
  for (int n = 0; n < U.n_groups(); ++n) {
    std::vector<Eigen::VectorXd> g;
    for (const auto& u : U.u[n]) g.push_back(-u / (U.sigma_u[n] * U.sigma_u[n]));
    grad.push_back(std::move(g));
  }
  const auto digits = basis_digits(cfg);
  for (std::size_t g = 0; g < cfg.num_cells(); ++g)
    add_group_gradient(U, counts[g], group_at(g, cfg), digits, grad);
  return grad;
}

double logpost_u_vector(const LatentFactors& U, const CountTable& counts, const FactorConfig& cfg,
                        int n, int j) {
  double out = vector_prior_term(U.u[n][j], U.sigma_u[n]);
  for (std::size_t g = 0; g < cfg.num_cells(); ++g) {
    const auto gi = group_at(g, cfg);
    if (gi[n] - 1 != j) continue;
    out += group_data_term(U, counts[g], gi);
  }
  return out;
}

Eigen::VectorXd grad_u_vector(const LatentFactors& U, const CountTable& counts,
                              const FactorConfig& cfg, int n, int j) {
  LatentGradient grad;
  for (int m = 0; m < U.n_groups(); ++m) {
    std::vector<Eigen::VectorXd> g;
    for (const auto& u : U.u[m]) g.push_back(Eigen::VectorXd::Zero(u.size()));
    grad.push_back(std::move(g));
  }
  const auto digits = basis_digits(cfg);
  for (std::size_t g = 0; g < cfg.num_cells(); ++g) {
    const auto gi = group_at(g, cfg);
    if (gi[n] - 1 != j) continue;
    add_group_gradient(U, counts[g], gi, digits, grad, n);
  }
  const double var = U.sigma_u[n] * U.sigma_u[n];
  return grad[n][j] - U.u[n][j] / var;
}

double log_sigma_posterior(double t, double sum_sq, long count, double sigma0) {
  return -0.5 * static_cast<double>(count) * t - 0.5 * sum_sq * std::exp(-t) -
         0.5 * t * t / (sigma0 * sigma0);
}

double existing_log_score(double log_w, int size, int occupancy, double alpha, double loglik) {
  return log_w + std::log(static_cast<double>(size)) - std::log(occupancy + alpha) + loglik;
}

double auxiliary_log_score(double log_w, int aux, int occupancy, double alpha, double loglik) {
  return log_w + std::log(alpha / aux) - std::log(occupancy + alpha) + loglik;
}

std::vector<double> normalize_log_scores(std::span<const double> log_scores) {
  double top = -std::numeric_limits<double>::infinity();
  for (double v : log_scores)
    if (!std::isnan(v)) top = std::max(top, v);
  if (!std::isfinite(top)) throw NumericError("all assignment scores are zero or non-finite");
  std::vector<double> p(log_scores.size());
  double total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = std::isnan(log_scores[k]) ? 0.0 : std::exp(log_scores[k] - top);
    total += p[k];
  }
  for (double& v : p) v /= total;
  return p;
}

std::size_t draw_categorical(std::span<const double> probs, double u) {
  double cum = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    cum += probs[k];
    if (u < cum) return k;
  }
  return probs.size() - 1;
}

GibbsSampler::GibbsSampler(ModelSpec model, const GroupedDataset& data, SamplerConfig config)
    : model_(std::move(model)),
      config_(config),
      samples_(flatten(data)),
      state_{Assignments{}, ClusterRegistry{}, LatentFactors{}, CountTable{},
             make_stream(config.seed, kAssignStream), make_stream(config.seed, kLatentStream), 0,
             MoveStats{}} {
  model_.validate();
  config_.validate();
  data.validate();
  if (data.cfg.factors_per_group() != model_.cfg.factors_per_group())
    throw ShapeError("dataset factor layout differs from the model's");
  if (samples_.size() == 0) throw InputError("cannot fit an empty dataset");
  if (data.dim() != model_.dim())
    throw ShapeError("dataset has " + std::to_string(data.dim()) + " features, prior expects " +
                     std::to_string(model_.dim()));

  const auto& cfg = model_.cfg;
  state_.latent = sample_latent_factors(model_.hyper, cfg, state_.latent_rng);
  state_.registry.bases.resize(cfg.num_bases());
  state_.registry.occupancy.assign(cfg.num_bases(), 0);
  state_.counts.assign(cfg.num_cells(), std::vector<int>(cfg.num_bases(), 0));

  SufficientStats stats(model_.dim());
  for (const auto& s : samples_.samples) stats.add(s);
  Cluster first{posterior_draw(model_.prior_for(0), stats, state_.assign_rng), {}};
  const auto N = static_cast<int>(samples_.size());
  first.members.resize(samples_.size());
  std::iota(first.members.begin(), first.members.end(), 0);
  state_.registry.bases[0].push_back(std::move(first));
  state_.registry.occupancy[0] = N;
  state_.assign.basis.assign(samples_.size(), 0);
  state_.assign.cluster.assign(samples_.size(), 0);
  for (std::size_t s = 0; s < samples_.size(); ++s) ++state_.counts[samples_.group[s]][0];
}

std::size_t GibbsSampler::detach(std::size_t s, std::optional<RegressionComponent>& reused) {
  auto& st = state_;
  const int b = st.assign.basis[s];
  const int c = st.assign.cluster[s];
  if (b < 0 || c < 0) throw StateError("sample " + std::to_string(s) + " is already detached");
  auto& clusters = st.registry.bases[static_cast<std::size_t>(b)];
  auto& members = clusters[static_cast<std::size_t>(c)].members;
  const auto it = std::lower_bound(members.begin(), members.end(), static_cast<int>(s));
  if (it == members.end() || *it != static_cast<int>(s))
    throw StateError("sample " + std::to_string(s) + " missing from its cluster");
  members.erase(it);
  --st.registry.occupancy[static_cast<std::size_t>(b)];
  --st.counts[samples_.group[s]][static_cast<std::size_t>(b)];
  if (members.empty()) {
    reused.emplace(std::move(clusters[static_cast<std::size_t>(c)].phi));
    clusters.erase(clusters.begin() + c);
    for (std::size_t k = static_cast<std::size_t>(c); k < clusters.size(); ++k)
      for (int m : clusters[k].members) st.assign.cluster[static_cast<std::size_t>(m)] = static_cast<int>(k);
  }
  st.assign.basis[s] = -1;
  st.assign.cluster[s] = -1;
  return static_cast<std::size_t>(b);
}

void GibbsSampler::attach(std::size_t s, std::size_t basis, int cluster) {
  auto& members = state_.registry.bases[basis][static_cast<std::size_t>(cluster)].members;
  members.insert(std::lower_bound(members.begin(), members.end(), static_cast<int>(s)),
                 static_cast<int>(s));
  ++state_.registry.occupancy[basis];
  ++state_.counts[samples_.group[s]][basis];
  state_.assign.basis[s] = static_cast<int>(basis);
  state_.assign.cluster[s] = cluster;
}

std::vector<Candidate> GibbsSampler::score_candidates(
    std::size_t s, const std::vector<RegressionComponent>& aux) const {
  if (state_.assign.basis[s] >= 0) throw StateError("score_candidates needs a detached sample");
  const auto& cfg = model_.cfg;
  const auto n_aux = static_cast<std::size_t>(config_.aux);
  if (aux.size() != cfg.num_bases() * n_aux)
    throw ShapeError("expected " + std::to_string(cfg.num_bases() * n_aux) + " auxiliary components");
  const auto lw = log_weights(state_.latent, group_at(samples_.group[s], cfg));

  std::vector<const RegressionComponent*> phis;
  std::vector<Candidate> cands;
  for (std::size_t b = 0; b < cfg.num_bases(); ++b) {
    const auto& clusters = state_.registry.bases[b];
    for (std::size_t k = 0; k < clusters.size(); ++k) {
      phis.push_back(&clusters[k].phi);
      cands.push_back(Candidate{b, static_cast<int>(k), 0.0});
    }
    for (std::size_t a = 0; a < n_aux; ++a) {
      phis.push_back(&aux[b * n_aux + a]);
      cands.push_back(Candidate{b, -static_cast<int>(a) - 1, 0.0});
    }
  }
  std::vector<double> loglik(phis.size());
  const auto& x = samples_.samples[s];
  kernels::log_likelihoods(config_.backend, phis, x.x, x.y, loglik);

  for (std::size_t k = 0; k < cands.size(); ++k) {
    auto& c = cands[k];
    const int L = state_.registry.occupancy[c.basis];
    const double alpha = model_.alpha_for(c.basis);
    if (c.cluster >= 0) {
      const auto size = static_cast<int>(
          state_.registry.bases[c.basis][static_cast<std::size_t>(c.cluster)].members.size());
      c.log_score = existing_log_score(lw[c.basis], size, L, alpha, loglik[k]);
    } else {
      c.log_score = auxiliary_log_score(lw[c.basis], config_.aux, L, alpha, loglik[k]);
    }
  }
  return cands;
}

void GibbsSampler::assignment_step(std::size_t s) {
  std::optional<RegressionComponent> reused;
  const std::size_t old_basis = detach(s, reused);

  const auto& cfg = model_.cfg;
  const auto n_aux = static_cast<std::size_t>(config_.aux);
  std::vector<RegressionComponent> aux;
  aux.reserve(cfg.num_bases() * n_aux);
  for (std::size_t b = 0; b < cfg.num_bases(); ++b) {
    for (std::size_t a = 0; a < n_aux; ++a) {
      // A sample that was alone keeps its parameters as the first auxiliary of its basis.
      if (a == 0 && b == old_basis && reused) {
        aux.push_back(std::move(*reused));
        reused.reset();
      } else {
        aux.push_back(sample_prior(model_.prior_for(b), state_.assign_rng));
      }
    }
  }

  const auto cands = score_candidates(s, aux);
  std::vector<double> scores(cands.size());
  std::transform(cands.begin(), cands.end(), scores.begin(),
                 [](const Candidate& c) { return c.log_score; });
  const auto probs = normalize_log_scores(scores);
  const auto& pick = cands[draw_categorical(probs, uniform01(state_.assign_rng))];

  int cluster = pick.cluster;
  if (cluster < 0) {
    const std::size_t a = static_cast<std::size_t>(-cluster - 1);
    auto& clusters = state_.registry.bases[pick.basis];
    clusters.push_back(Cluster{std::move(aux[pick.basis * n_aux + a]), {}});
    cluster = static_cast<int>(clusters.size()) - 1;
  }
  attach(s, pick.basis, cluster);
}

void GibbsSampler::update_phi() {
  for (std::size_t b = 0; b < state_.registry.bases.size(); ++b) {
    for (auto& cluster : state_.registry.bases[b]) {
      if (cluster.members.empty())
        throw StateError("internal invariant violated: empty live cluster on basis " +
                         std::to_string(b));
      SufficientStats stats(model_.dim());
      for (int m : cluster.members) stats.add(samples_.samples[static_cast<std::size_t>(m)]);
      cluster.phi = posterior_draw(model_.prior_for(b), stats, state_.assign_rng);
    }
  }
}

void GibbsSampler::update_U() {
  const auto& cfg = model_.cfg;
  auto& U = state_.latent;
  auto& rng = state_.latent_rng;
  const double eps = config_.u_step;
  const bool langevin = config_.u_sampler == USampler::gradient;
  for (int n = 0; n < cfg.n_groups(); ++n) {
    for (int j = 0; j < cfg.factors_per_group()[n]; ++j) {
      const Eigen::VectorXd current = U.u[n][j];
      const double lp_current = logpost_u_vector(U, state_.counts, cfg, n, j);
      Eigen::VectorXd noise(current.size());
      for (Eigen::Index i = 0; i < noise.size(); ++i) noise[i] = std_normal(rng);

      Eigen::VectorXd forward_mean = current;
      if (langevin)
        forward_mean += 0.5 * eps * eps * grad_u_vector(U, state_.counts, cfg, n, j);
      const Eigen::VectorXd proposal = forward_mean + eps * noise;
      U.u[n][j] = proposal;
      const double lp_proposal = logpost_u_vector(U, state_.counts, cfg, n, j);

      double log_q_forward = 0.0, log_q_reverse = 0.0;
      if (langevin) {
        const Eigen::VectorXd reverse_mean =
            proposal + 0.5 * eps * eps * grad_u_vector(U, state_.counts, cfg, n, j);
        log_q_forward = -(proposal - forward_mean).squaredNorm() / (2.0 * eps * eps);
        log_q_reverse = -(current - reverse_mean).squaredNorm() / (2.0 * eps * eps);
      }
      const double ratio =
          mcmc::mh_log_ratio(lp_current, lp_proposal, log_q_reverse, log_q_forward);
      ++state_.u_moves.proposed;
      if (mcmc::mh_accept(ratio, rng))
        ++state_.u_moves.accepted;
      else
        U.u[n][j] = current;
    }
  }
}

void GibbsSampler::update_sigma_u() {
  auto& U = state_.latent;
  const double sigma0 = model_.hyper.sigma0;
  for (int n = 0; n < U.n_groups(); ++n) {
    double sum_sq = 0.0;
    long count = 0;
    for (const auto& u : U.u[n]) {
      sum_sq += u.squaredNorm();
      count += u.size();
    }
    auto logf = [&](double t) { return log_sigma_posterior(t, sum_sq, count, sigma0); };
    const double t0 = 2.0 * std::log(U.sigma_u[n]);
    const double t1 = mcmc::slice_sample_doubling(
        t0, logf, mcmc::SliceOptions{config_.slice_width, 20}, state_.latent_rng);
    U.sigma_u[n] = std::exp(0.5 * t1);
  }
}

void GibbsSampler::sweep() {
  std::vector<std::size_t> order(samples_.size());
  std::iota(order.begin(), order.end(), 0);
  if (config_.permute_scan) std::shuffle(order.begin(), order.end(), state_.assign_rng);
  for (std::size_t s : order) assignment_step(s);
  update_phi();
  update_U();
  update_sigma_u();
  ++state_.sweep;
}

double GibbsSampler::log_joint() const {
  const auto& reg = state_.registry;
  double out = 0.0;
  for (std::size_t s = 0; s < samples_.size(); ++s) {
    const auto& c = reg.bases[static_cast<std::size_t>(state_.assign.basis[s])]
                            [static_cast<std::size_t>(state_.assign.cluster[s])];
    out += log_likelihood(c.phi, samples_.samples[s]);
  }
  out += logpost_U(state_.latent, state_.counts, model_.cfg);
  for (std::size_t b = 0; b < reg.bases.size(); ++b) {
    const int L = reg.occupancy[b];
    const double alpha = model_.alpha_for(b);
    if (L > 0) {
      out += static_cast<double>(reg.bases[b].size()) * std::log(alpha) + std::lgamma(alpha) -
             std::lgamma(alpha + L);
      for (const auto& c : reg.bases[b]) out += std::lgamma(static_cast<double>(c.members.size()));
    }
    for (const auto& c : reg.bases[b]) out += log_prior_density(model_.prior_for(b), c.phi);
  }
  const double var0 = model_.hyper.sigma0 * model_.hyper.sigma0;
  for (double sigma : state_.latent.sigma_u)
    out += log_normal_density(2.0 * std::log(sigma), var0);
  return out;
}

std::vector<std::string> GibbsSampler::check_invariants() const {
  std::vector<std::string> issues;
  const auto& reg = state_.registry;
  const auto& cfg = model_.cfg;
  const auto N = samples_.size();

  long total = 0;
  std::vector<int> seen(N, 0);
  for (std::size_t b = 0; b < reg.bases.size(); ++b) {
    long in_basis = 0;
    for (std::size_t k = 0; k < reg.bases[b].size(); ++k) {
      const auto& members = reg.bases[b][k].members;
      if (members.empty())
        issues.push_back("empty live cluster " + std::to_string(k) + " on basis " + std::to_string(b));
      if (!std::is_sorted(members.begin(), members.end()))
        issues.push_back("unsorted members in basis " + std::to_string(b));
      in_basis += static_cast<long>(members.size());
      for (int m : members) {
        if (m < 0 || static_cast<std::size_t>(m) >= N) {
          issues.push_back("member id out of range");
          continue;
        }
        ++seen[static_cast<std::size_t>(m)];
        if (state_.assign.basis[static_cast<std::size_t>(m)] != static_cast<int>(b) ||
            state_.assign.cluster[static_cast<std::size_t>(m)] != static_cast<int>(k))
          issues.push_back("sample " + std::to_string(m) + " registry/assignment mismatch");
      }
    }
    if (in_basis != reg.occupancy[b])
      issues.push_back("basis " + std::to_string(b) + " occupancy " +
                       std::to_string(reg.occupancy[b]) + " != member count " +
                       std::to_string(in_basis));
    total += reg.occupancy[b];
  }
  if (total != static_cast<long>(N))
    issues.push_back("total occupancy " + std::to_string(total) + " != sample count " +
                     std::to_string(N));
  for (std::size_t s = 0; s < N; ++s)
    if (seen[s] != 1) issues.push_back("sample " + std::to_string(s) + " appears " +
                                       std::to_string(seen[s]) + " times in the registry");

  CountTable expected(cfg.num_cells(), std::vector<int>(cfg.num_bases(), 0));
  for (std::size_t s = 0; s < N; ++s)
    if (state_.assign.basis[s] >= 0)
      ++expected[samples_.group[s]][static_cast<std::size_t>(state_.assign.basis[s])];
  if (expected != state_.counts) issues.push_back("group/basis count table out of sync");
  return issues;
}

Snapshot GibbsSampler::snapshot() const {
  Snapshot snap;
  snap.sweep = state_.sweep;
  snap.basis = state_.assign.basis;
  snap.cluster = state_.assign.cluster;
  snap.latent = state_.latent;
  for (const auto& basis : state_.registry.bases) {
    std::vector<ClusterSnapshot> cs;
    for (const auto& c : basis)
      cs.push_back(ClusterSnapshot{c.phi, static_cast<int>(c.members.size())});
    snap.clusters.push_back(std::move(cs));
  }
  snap.log_joint = log_joint();
  return snap;
}

Trace run(const GroupedDataset& data, const ModelSpec& model, const SamplerConfig& config,
          const GibbsSampler::Observer& observer) {
  if (data.total_rows() == 0) throw InputError("cannot fit an empty dataset");
  GibbsSampler sampler(model, data, config);
  Trace trace{model, {}, {}, nlohmann::json::object()};
  trace.meta["sampler"] = {{"aux", config.aux},
                           {"iterations", config.iterations},
                           {"burn_in", config.burn_in},
                           {"thin", config.thin},
                           {"seed", config.seed},
                           {"u_step", config.u_step},
                           {"u_sampler", std::string(u_sampler_name(config.u_sampler))},
                           {"slice_width", config.slice_width},
                           {"permute_scan", config.permute_scan}};
  for (int t = 1; t <= config.iterations; ++t) {
    sampler.sweep();
    const double lj = sampler.log_joint();
    if (!std::isfinite(lj))
      throw NumericError("log joint became non-finite at sweep " + std::to_string(t));
    trace.sweeps.push_back(SweepRecord{t, lj, sampler.state().registry.live_clusters()});
    if (t > config.burn_in && (t - config.burn_in) % config.thin == 0) {
      trace.snapshots.push_back(sampler.snapshot());
    }
    if (observer) observer(sampler);
  }
  trace.meta["u_acceptance_rate"] = sampler.state().u_moves.rate();
  return trace;
}

}  // namespace mldp
