#include "mldp/predict.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>

#include "mldp/error.hpp"
#include "mldp/gibbs.hpp"

namespace mldp {
namespace {

constexpr std::uint64_t kPriorPredictiveStream = 0x7072656469637400ULL;

double log_sum_exp(std::span<const double> v) {
  const double top = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(top)) return top;
  double s = 0.0;
  for (double x : v) s += std::exp(x - top);
  return top + std::log(s);
}

}  // namespace

struct Predictor::SnapshotContext {
  // prior_draws[b]: base-prior draws for basis b.
  std::vector<std::vector<RegressionComponent>> prior_draws;
  // log_w[g][b] for every group.
  std::vector<std::vector<double>> log_w;
};

double Responsibilities::predicted() const {
  double y = 0.0;
  for (std::size_t k = 0; k < prob.size(); ++k) y += prob[k] * response[k];
  return y;
}

Predictor::Predictor(const Trace& trace, int prior_draws, kernels::Backend backend)
    : trace_(&trace), prior_draws_(prior_draws), backend_(backend) {
  if (trace.snapshots.empty()) throw StateError("cannot predict from a trace with no snapshots");
  if (prior_draws < 1) throw ConfigError("prior_draws must be at least 1");
}

void Predictor::check(const PredictionRequest& request) const {
  const auto& model = trace_->model;
  if (request.x.size() != model.dim())
    throw ShapeError("prediction input has " + std::to_string(request.x.size()) +
                     " features, model expects " + std::to_string(model.dim()));
  (void)flat_index(request.g, model.cfg);
}

Predictor::SnapshotContext Predictor::context(std::size_t snapshot) const {
  const auto& model = trace_->model;
  const auto& snap = trace_->snapshots.at(snapshot);
  SnapshotContext ctx;
  for (std::size_t b = 0; b < model.cfg.num_bases(); ++b) {
    Rng rng = make_stream(static_cast<std::uint64_t>(snap.sweep), kPriorPredictiveStream + b);
    std::vector<RegressionComponent> draws;
    draws.reserve(static_cast<std::size_t>(prior_draws_));
    for (int d = 0; d < prior_draws_; ++d) draws.push_back(sample_prior(model.prior_for(b), rng));
    ctx.prior_draws.push_back(std::move(draws));
  }
  for (std::size_t g = 0; g < model.cfg.num_cells(); ++g)
    ctx.log_w.push_back(log_weights(snap.latent, group_at(g, model.cfg)));
  return ctx;
}

Responsibilities Predictor::score(std::size_t snapshot, const SnapshotContext& ctx,
                                  const PredictionRequest& request) const {
  const auto& model = trace_->model;
  const auto& snap = trace_->snapshots[snapshot];
  const auto& lw = ctx.log_w[flat_index(request.g, model.cfg)];
  const auto& x = request.x;

  Responsibilities r;
  std::vector<double> log_r;
  for (std::size_t b = 0; b < model.cfg.num_bases(); ++b) {
    const double alpha = model.alpha_for(b);
    const double log_denominator = std::log(snap.occupancy(b) + alpha);
    for (std::size_t k = 0; k < snap.clusters[b].size(); ++k) {
      const auto& c = snap.clusters[b][k];
      r.basis.push_back(b);
      r.cluster.push_back(static_cast<int>(k));
      r.response.push_back(x.dot(c.phi.beta()));
      log_r.push_back(lw[b] + std::log(static_cast<double>(c.size)) - log_denominator +
                      predictive_log_density_x(c.phi, x));
    }
    const auto& draws = ctx.prior_draws[b];
    std::vector<double> dens(draws.size());
    for (std::size_t d = 0; d < draws.size(); ++d) dens[d] = predictive_log_density_x(draws[d], x);
    const double log_prior_pred = log_sum_exp(dens) - std::log(static_cast<double>(draws.size()));
    r.basis.push_back(b);
    r.cluster.push_back(-1);
    r.response.push_back(0.0);
    log_r.push_back(lw[b] + std::log(alpha) - log_denominator + log_prior_pred);
  }
  r.prob = normalize_log_scores(log_r);
  return r;
}

Responsibilities Predictor::responsibilities(std::size_t snapshot,
                                             const PredictionRequest& request) const {
  check(request);
  return score(snapshot, context(snapshot), request);
}

std::vector<Prediction> Predictor::predict(std::span<const PredictionRequest> requests) const {
  for (const auto& req : requests) check(req);
  const std::size_t T = trace_->snapshots.size();
  const auto R = static_cast<std::ptrdiff_t>(requests.size());
  std::vector<Prediction> out(requests.size());
  for (auto& p : out) p.per_snapshot.assign(T, 0.0);

  for (std::size_t t = 0; t < T; ++t) {
    const auto ctx = context(t);
    if (backend_ == kernels::Backend::openmp) {
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t i = 0; i < R; ++i)
        out[i].per_snapshot[t] = score(t, ctx, requests[i]).predicted();
    } else {
      for (std::ptrdiff_t i = 0; i < R; ++i)
        out[i].per_snapshot[t] = score(t, ctx, requests[i]).predicted();
    }
  }
  for (auto& p : out) {
    double s = 0.0;
    for (double v : p.per_snapshot) s += v;
    p.mean = s / static_cast<double>(T);
  }
  return out;
}

Prediction Predictor::predict(const PredictionRequest& request) const {
  return predict(std::span<const PredictionRequest>(&request, 1)).front();
}

Prediction predict_y(const Trace& trace, const PredictionRequest& request) {
  return Predictor(trace).predict(request);
}

}  // namespace mldp
