#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mldp/error.hpp"
#include "mldp/pipeline.hpp"
#include "mldp/testkit/synthetic.hpp"

using namespace mldp;
using json = nlohmann::json;
namespace fs = std::filesystem;
using doctest::Approx;

namespace {

json base_config() {
  return json::parse(R"({
    "data": {"path": "unused.csv", "factor_columns": ["f1", "f2"],
             "feature_columns": ["x1", "x2"], "response_column": "y"},
    "model": {"factors_per_group": [2, 2], "bases_per_group": [2, 2]},
    "sampler": {"iterations": 20, "burn_in": 10, "thin": 2, "seed": 3}
  })");
}

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

Table synthetic_table(int spg, std::uint64_t seed) {
  Rng rng = make_stream(seed, 0);
  const auto sd = testkit::generate_synthetic(testkit::grid2x2_spec(spg), rng);
  std::stringstream ss;
  testkit::write_synthetic_csv(sd.data, ss);
  return parse_csv(ss);
}

}  // namespace

TEST_CASE("config parsing fills defaults and round-trips") {
  const auto c = RunConfig::from_json(base_config());
  CHECK_NOTHROW(c.validate());
  CHECK(c.factor_config() == FactorConfig({2, 2}, {2, 2}));
  CHECK(c.sampler.aux == 3);
  CHECK(c.experiment.fraction == 0.5);
  CHECK(c.model.hyper.alpha == 1.0);
  const auto again = RunConfig::from_json(c.to_json());
  CHECK(again.to_json() == c.to_json());

  auto j = base_config();
  j["model"].erase("bases_per_group");
  CHECK(RunConfig::from_json(j).model.bases_per_group == Dims{2, 2});
}

TEST_CASE("config errors are ConfigErrors with a useful message") {
  auto typo = base_config();
  typo["sampler"]["iteratons"] = 5;
  CHECK(message_of([&] { RunConfig::from_json(typo); }).find("iteratons") != std::string::npos);
  CHECK_THROWS_AS(RunConfig::from_json(typo), ConfigError);

  auto bad_type = base_config();
  bad_type["model"]["alpha"] = "big";
  CHECK_THROWS_AS(RunConfig::from_json(bad_type), ConfigError);

  auto levels = base_config();
  levels["data"]["factor_levels"] = {{"f1", {"a", "b", "c"}}};
  CHECK_THROWS_AS(RunConfig::from_json(levels).validate(), ConfigError);

  auto hetero = base_config();
  hetero["model"]["alpha_per_basis"] = {1.0, 2.0};
  CHECK_THROWS_AS(RunConfig::from_json(hetero).validate(), ConfigError);

  auto metric = base_config();
  metric["experiment"] = {{"metric", "mae"}};
  CHECK_THROWS_AS(RunConfig::from_json(metric).validate(), ConfigError);

  CHECK_THROWS_AS(load_config("/no/such/config.json"), ConfigError);
}

TEST_CASE("fit_table records preprocessing and predict_rows inverts the response transform") {
  const auto table = synthetic_table(8, 227);
  auto c = RunConfig::from_json(base_config());
  c.preprocess.log1p_response = false;
  const auto fit = fit_table(table, c);
  CHECK(fit.trace.meta.contains("preprocess"));
  CHECK(fit.trace.snapshots.size() == 5);
  const auto yhat = predict_rows(fit.trace, fit.preprocessor, table);
  CHECK(yhat.size() == table.rows());
  const auto y = table.numeric("y");
  CHECK(score_metric("rmse", y, yhat) < 4.0);

  const auto dp = fit_table(table, c, true);
  CHECK(dp.trace.model.cfg.num_bases() == 1);
}

TEST_CASE("experiment repetitions, split sizes and baseline") {
  const auto table = synthetic_table(20, 229);
  auto c = RunConfig::from_json(base_config());
  c.experiment.repetitions = 3;
  c.experiment.baseline_dp = true;
  const auto res = run_experiment(table, c);
  CHECK(res.mldp.reps.size() == 3);
  REQUIRE(res.dp);
  CHECK(res.dp->reps.size() == 3);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(res.n_train[r] == 40);
    CHECK(res.n_test[r] == 40);
  }
  const auto j = res.to_json();
  CHECK(j["baseline"]["model"] == "dp");
  CHECK(j["mldp_wins"].get<int>() == res.mldp_wins());
  // Repeating gives the same numbers.
  CHECK(run_experiment(table, c).mldp.reps == res.mldp.reps);
}

TEST_CASE("simulate: single basis gives weight one everywhere") {
  auto j = base_config();
  j["model"]["bases_per_group"] = {1, 1};
  j["simulate"] = {{"truncation", 50}, {"draws", 500}};
  const auto c = RunConfig::from_json(j);
  const auto sim = simulate(c);
  for (const auto& w : sim.weights) {
    REQUIRE(w.w.size() == 1);
    CHECK(w.w[0] == 1.0);
  }
  std::ostringstream os;
  write_weights_csv(sim, c.factor_config(), os);
  CHECK(os.str().rfind("group_flat_index,basis_flat_index,weight\n", 0) == 0);
  const auto m = moments_json(sim.moments);
  CHECK(m["groups"].size() == 4);
}

TEST_CASE("simulate: the moment summary passes on a 2x2 layout") {
  auto j = base_config();
  j["simulate"] = {{"truncation", 200}, {"draws", 4000}};
  const auto sim = simulate(RunConfig::from_json(j));
  CHECK(sim.moments.passed());
  for (const auto& w : sim.weights) {
    double s = 0;
    for (double v : w.w) s += v;
    CHECK(s == Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("score_metric dispatch") {
  const std::vector<double> y{0, 1, 1, 0}, s{0.1, 0.9, 0.8, 0.3};
  CHECK(score_metric("auc", y, s) == 1.0);
  CHECK(score_metric("rmse", y, y) == 0.0);
  CHECK_THROWS(score_metric("mae", y, s));
}
