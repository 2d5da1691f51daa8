#include <cmath>
#include <numeric>

#include "doctest.h"
#include "mldp/error.hpp"
#include "mldp/gibbs.hpp"
#include "mldp/predict.hpp"
#include "mldp/testkit/synthetic.hpp"

using namespace mldp;
using doctest::Approx;

namespace {

BasePrior prior2() {
  BasePrior H;
  H.mu0 = Eigen::Vector2d::Zero();
  H.Psi0 = Eigen::Matrix2d::Identity();
  H.nu0 = 4;
  H.V = Eigen::Matrix2d::Identity();
  H.beta0 = Eigen::Vector2d::Zero();
  return H;
}

RegressionComponent comp(Eigen::Vector2d mu, Eigen::Vector2d beta) {
  return RegressionComponent(mu, Eigen::Matrix2d::Identity(), beta, 0.5);
}

// One group, one basis, given clusters; alpha as requested.
Trace hand_trace(std::vector<ClusterSnapshot> clusters, double alpha, Dims I = {1}) {
  const FactorConfig cfg({1}, I);
  Hyperparams h;
  h.alpha = alpha;
  Trace t{ModelSpec{cfg, h, {prior2()}}, {}, {}};
  Snapshot s{7, {}, {}, LatentFactors::zeros(cfg), {}, 0.0};
  s.clusters.resize(cfg.num_bases());
  s.clusters[0] = std::move(clusters);
  t.snapshots.push_back(std::move(s));
  return t;
}

}  // namespace

TEST_CASE("one cluster with vanishing alpha predicts x'beta exactly") {
  const Eigen::Vector2d beta(1.5, -0.5), x(0.2, 0.4);
  const auto t = hand_trace({{comp(x, beta), 20}}, 1e-300);
  const auto p = predict_y(t, {x, GroupIndex{1}});
  CHECK(std::abs(p.mean - x.dot(beta)) < 1e-12);
  REQUIRE(p.per_snapshot.size() == 1);
}

TEST_CASE("two equally likely clusters with opposite slopes predict zero") {
  const Eigen::Vector2d beta(2.0, 1.0), x(0.5, 0.5);
  const auto t = hand_trace({{comp(x, beta), 10}, {comp(x, -beta), 10}}, 1e-300);
  CHECK(std::abs(predict_y(t, {x, GroupIndex{1}}).mean) < 1e-12);
}

TEST_CASE("responsibilities match a hand computation and sum to one") {
  const Eigen::Vector2d x(0.3, -0.1);
  const auto c1 = comp(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0));
  const auto c2 = comp(Eigen::Vector2d(1, 1), Eigen::Vector2d(0, 1));
  const auto t = hand_trace({{c1, 3}, {c2, 1}}, 1e-300);
  const auto r = Predictor(t).responsibilities(0, {x, GroupIndex{1}});
  REQUIRE(r.prob.size() == 3);
  const double f1 = 3 * std::exp(predictive_log_density_x(c1, x));
  const double f2 = 1 * std::exp(predictive_log_density_x(c2, x));
  CHECK(r.prob[0] == Approx(f1 / (f1 + f2)).epsilon(1e-12));
  CHECK(r.prob[1] == Approx(f2 / (f1 + f2)).epsilon(1e-12));
  CHECK(r.cluster[2] == -1);
  CHECK(r.response[2] == 0.0);
  CHECK(r.predicted() == Approx(r.prob[0] * x(0) + r.prob[1] * x(1)));
}

TEST_CASE("the prior-mass candidate carries alpha / (L + alpha) of the basis weight") {
  // Cluster and prior-predictive density both evaluated; check the ratio.
  const Eigen::Vector2d x(0.0, 0.0);
  const auto c = comp(x, Eigen::Vector2d(1, 1));
  const auto t = hand_trace({{c, 4}}, 2.0);
  const auto r = Predictor(t, 5000).responsibilities(0, {x, GroupIndex{1}});
  const double cluster_mass = 4 * std::exp(predictive_log_density_x(c, x));
  const double implied_prior_density = r.prob[1] / r.prob[0] * cluster_mass / 2.0;
  // Prior predictive of x under NIW(0, 1, I, 4) at the origin: a multivariate t
  // with nu - P + 1 = 3 dof and scale (1 + 1) / 3 I.
  const double dof = 3, scale = 2.0 / 3.0;
  const double t_density = std::tgamma((dof + 2) / 2) / (std::tgamma(dof / 2) * dof * M_PI * scale);
  CHECK(implied_prior_density == Approx(t_density).epsilon(0.1));
}

TEST_CASE("property: responsibilities form a distribution on real fits") {
  Rng rng = make_stream(157, 0);
  const auto sd = testkit::generate_synthetic(testkit::grid2x2_spec(10), rng);
  Eigen::MatrixXd X(static_cast<Eigen::Index>(sd.data.total_rows()), 2);
  Eigen::Index row = 0;
  for (const auto& m : sd.data.X) {
    X.middleRows(row, m.rows()) = m;
    row += m.rows();
  }
  SamplerConfig sc;
  sc.iterations = 30;
  sc.burn_in = 20;
  sc.thin = 2;
  const auto trace = run(sd.data, ModelSpec{sd.data.cfg, Hyperparams{}, {BasePrior::defaults_from(X)}}, sc);
  const Predictor pred(trace);
  for (std::size_t snap = 0; snap < trace.snapshots.size(); ++snap)
    for (int k = 0; k < 20; ++k) {
      const PredictionRequest req{Eigen::Vector2d(5 * uniform01(rng), 5 * uniform01(rng)),
                                  group_at(rng() % 4, sd.data.cfg)};
      const auto r = pred.responsibilities(snap, req);
      const double s = std::accumulate(r.prob.begin(), r.prob.end(), 0.0);
      CHECK(std::abs(s - 1.0) < 1e-12);
      for (double p : r.prob) CHECK(p >= 0.0);
    }

  // Serial and OpenMP batches agree bitwise.
  std::vector<PredictionRequest> reqs;
  for (int k = 0; k < 50; ++k)
    reqs.push_back({Eigen::Vector2d(std_normal(rng), std_normal(rng)), group_at(k % 4, sd.data.cfg)});
  Predictor serial(trace), omp(trace, 64, kernels::Backend::openmp);
  const auto a = serial.predict(reqs), b = omp.predict(reqs);
  for (std::size_t k = 0; k < reqs.size(); ++k) {
    CHECK(a[k].mean == b[k].mean);
    CHECK(a[k].per_snapshot == b[k].per_snapshot);
  }
}

TEST_CASE("duplicating every snapshot leaves predictions unchanged") {
  const auto c1 = comp(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 2));
  const auto c2 = comp(Eigen::Vector2d(2, 0), Eigen::Vector2d(-1, 0));
  auto t = hand_trace({{c1, 2}, {c2, 5}}, 0.7);
  auto second = t.snapshots[0];
  second.sweep = 9;
  second.clusters[0][0].size = 4;
  t.snapshots.push_back(second);
  auto doubled = t;
  doubled.snapshots.insert(doubled.snapshots.end(), t.snapshots.begin(), t.snapshots.end());
  const PredictionRequest req{Eigen::Vector2d(0.5, 0.1), GroupIndex{1}};
  CHECK(predict_y(doubled, req).mean == Approx(predict_y(t, req).mean).epsilon(1e-14));
}

TEST_CASE("predictor input errors") {
  Trace empty{ModelSpec{FactorConfig({1}, {1}), Hyperparams{}, {prior2()}}, {}, {}};
  CHECK_THROWS_AS(Predictor{empty}, StateError);
  const auto t = hand_trace({{comp(Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()), 1}}, 1.0);
  CHECK_THROWS_AS(predict_y(t, {Eigen::Vector3d::Zero(), GroupIndex{1}}), ShapeError);
  CHECK_THROWS_AS(predict_y(t, {Eigen::Vector2d::Zero(), GroupIndex{2}}), RangeError);
}
