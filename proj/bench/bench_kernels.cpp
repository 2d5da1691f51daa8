// Serial reference vs OpenMP for the data-parallel kernels.

#include <benchmark/benchmark.h>

#include <vector>

#include "mldp/gibbs.hpp"
#include "mldp/kernels.hpp"
#include "mldp/predict.hpp"
#include "mldp/testkit/synthetic.hpp"

using namespace mldp;

namespace {

struct ComponentSet {
  std::vector<RegressionComponent> comps;
  std::vector<const RegressionComponent*> ptrs;
  Eigen::VectorXd x;
};

ComponentSet make_components(int K, int P) {
  BasePrior H;
  H.mu0 = Eigen::VectorXd::Zero(P);
  H.Psi0 = Eigen::MatrixXd::Identity(P, P);
  H.nu0 = P + 2;
  H.V = Eigen::MatrixXd::Identity(P, P);
  H.beta0 = Eigen::VectorXd::Zero(P);
  Rng rng = make_stream(1, 0);
  ComponentSet s;
  for (int k = 0; k < K; ++k) s.comps.push_back(sample_prior(H, rng));
  for (const auto& c : s.comps) s.ptrs.push_back(&c);
  s.x = Eigen::VectorXd::Constant(P, 0.3);
  return s;
}

template <kernels::Backend B>
void BM_log_likelihoods(benchmark::State& state) {
  const auto s = make_components(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  std::vector<double> out(s.ptrs.size());
  for (auto _ : state) {
    kernels::log_likelihoods(B, s.ptrs, s.x, 0.5, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <kernels::Backend B>
void BM_log_densities_x(benchmark::State& state) {
  const auto s = make_components(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  std::vector<double> out(s.ptrs.size());
  for (auto _ : state) {
    kernels::log_densities_x(B, s.ptrs, s.x, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

const Trace& fitted_trace() {
  static const Trace trace = [] {
    Rng rng = make_stream(2, 0);
    const auto sd = testkit::generate_synthetic(testkit::grid2x2_spec(30), rng);
    Eigen::MatrixXd X(static_cast<Eigen::Index>(sd.data.total_rows()), 2);
    Eigen::Index r = 0;
    for (const auto& m : sd.data.X) {
      X.middleRows(r, m.rows()) = m;
      r += m.rows();
    }
    SamplerConfig sc;
    sc.iterations = 60;
    sc.burn_in = 40;
    sc.thin = 2;
    return run(sd.data, ModelSpec{sd.data.cfg, Hyperparams{}, {BasePrior::defaults_from(X)}}, sc);
  }();
  return trace;
}

template <kernels::Backend B>
void BM_predict_batch(benchmark::State& state) {
  const auto& trace = fitted_trace();
  std::vector<PredictionRequest> reqs;
  Rng rng = make_stream(3, 0);
  for (int i = 0; i < state.range(0); ++i)
    reqs.push_back({Eigen::Vector2d(5 * uniform01(rng), 5 * uniform01(rng)), group_at(static_cast<std::size_t>(i % 4), trace.model.cfg)});
  const Predictor pred(trace, 64, B);
  for (auto _ : state) benchmark::DoNotOptimize(pred.predict(reqs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_log_likelihoods<kernels::Backend::serial>)->Args({64, 2})->Args({1024, 8});
BENCHMARK(BM_log_likelihoods<kernels::Backend::openmp>)->Args({64, 2})->Args({1024, 8});
BENCHMARK(BM_log_densities_x<kernels::Backend::serial>)->Args({64, 2})->Args({1024, 8});
BENCHMARK(BM_log_densities_x<kernels::Backend::openmp>)->Args({64, 2})->Args({1024, 8});
BENCHMARK(BM_predict_batch<kernels::Backend::serial>)->Arg(256);
BENCHMARK(BM_predict_batch<kernels::Backend::openmp>)->Arg(256);

BENCHMARK_MAIN();
