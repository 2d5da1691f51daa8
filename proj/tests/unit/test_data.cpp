#include <algorithm>
#include <set>
#include <sstream>

#include "doctest.h"
#include "mldp/data.hpp"
#include "mldp/error.hpp"
#include "mldp/rng.hpp"

using namespace mldp;
using doctest::Approx;

namespace {

std::string fixture(const std::string& name) { return std::string(MLDP_FIXTURE_DIR) + "/" + name; }

CsvSchema xy_schema() { return CsvSchema{{"f1", "f2"}, {"x1", "x2"}, "y", {}}; }

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

Table restaurant() {
  return load_csv(fixture("restaurant.csv"),
                  CsvSchema{{"area", "price"}, {"seats", "parking", "hours"}, "rating", {"parking"}});
}

std::vector<FactorMapping> restaurant_factors() {
  return {{"area", {"north", "south"}}, {"price", {"low", "mid", "high"}}};
}

}  // namespace

TEST_CASE("three-row fixture loads with the declared schema") {
  const auto t = load_csv(fixture("three_rows.csv"), xy_schema());
  CHECK(t.rows() == 3);
  CHECK(t.cols() == 5);
  CHECK(t.numeric("x2") == std::vector<double>{1.5, 0.25, 4.0});
  CHECK(t.column_type("f1") == ColumnType::numeric);
  const FactorConfig cfg({2, 2}, {1, 1});
  const auto data = group_by_factors(t, {{"f1", {}}, {"f2", {}}}, cfg, {"x1", "x2"}, "y");
  CHECK(data.total_rows() == 3);
  CHECK(data.X[1].rows() == 1);
  CHECK(data.y[1](0) == 2.0);
  CHECK(data.X[3](0, 1) == 4.0);
  CHECK(data.X[0].rows() == 0);
}

TEST_CASE("a missing response cell is reported with its row and column") {
  const auto msg = message_of([] { load_csv(fixture("missing_response.csv"), xy_schema()); });
  CHECK(msg.find("row 2") != std::string::npos);
  CHECK(msg.find("'y'") != std::string::npos);
  CHECK_THROWS_AS(load_csv(fixture("missing_response.csv"), xy_schema()), DataError);
  // Without a response requirement the file is usable for prediction.
  CsvSchema no_y = xy_schema();
  no_y.response_column.clear();
  CHECK_NOTHROW(load_csv(fixture("missing_response.csv"), no_y, false));
}

TEST_CASE("missing files and columns name the culprit") {
  CHECK(message_of([] { load_csv("/nonexistent/data.csv", xy_schema()); }).find("/nonexistent/data.csv") !=
        std::string::npos);
  auto schema = xy_schema();
  schema.feature_columns.push_back("x9");
  CHECK(message_of([&] { load_csv(fixture("three_rows.csv"), schema); }).find("'x9'") != std::string::npos);
}

TEST_CASE("CSV parsing handles quotes and rejects ragged rows") {
  std::istringstream ok("a,b\n\"1,5\",\"say \"\"hi\"\"\"\n");
  const auto t = parse_csv(ok);
  CHECK(t.cell(0, 0) == "1,5");
  CHECK(t.cell(0, 1) == "say \"hi\"");
  std::istringstream ragged("a,b\n1\n");
  CHECK_THROWS_AS(parse_csv(ragged), DataError);
  std::istringstream empty("");
  CHECK_THROWS_AS(parse_csv(empty), DataError);
  std::ostringstream out;
  write_csv(t, out);
  std::istringstream back(out.str());
  CHECK(parse_csv(back).cell(0, 1) == "say \"hi\"");
}

TEST_CASE("restaurant-style schema groups rows by two text factors") {
  const auto t = restaurant();
  const FactorConfig cfg({2, 3}, {2, 2});
  const auto pre = Preprocessor::fit(t, CsvSchema{{"area", "price"}, {"seats", "parking", "hours"}, "rating", {"parking"}},
                                     restaurant_factors(), cfg, PreprocessOptions{});
  CHECK(pre.feature_names == std::vector<std::string>{"seats", "parking=no", "parking=yes", "hours"});
  const auto data = pre.grouped(t);
  CHECK(data.total_rows() == 12);
  for (const auto& X : data.X) CHECK(X.rows() == 2);
  // north/low holds rows 1 and 7.
  CHECK(data.y[0](0) == 3.5);
  CHECK(data.y[0](1) == 3.2);
}

TEST_CASE("binary coding of categorical columns") {
  Table t({"c", "v"}, {{"b", "1"}, {"a", "2"}, {"b", "3"}});
  const auto enc = BinaryEncoder::fit(t, {"c"});
  CHECK(enc.levels[0] == std::vector<std::string>{"a", "b"});
  const auto out = enc.transform(t);
  CHECK(out.columns() == std::vector<std::string>{"c=a", "c=b", "v"});
  CHECK(out.numeric("c=a") == std::vector<double>{0, 1, 0});
  CHECK(out.numeric("c=b") == std::vector<double>{1, 0, 1});
  CHECK(out.numeric("v") == t.numeric("v"));
  CHECK(out.rows() == t.rows());

  const auto three = load_csv(fixture("three_levels.csv"), CsvSchema{{}, {"colour", "size"}, "y", {"colour"}});
  const auto expanded = binary_encode(three, {"colour"});
  CHECK(expanded.cols() == three.cols() + 2);
  CHECK(expanded.columns() == std::vector<std::string>{"colour=blue", "colour=green", "colour=red", "size", "y"});
  CHECK(binary_encode(three, {"colour"}, Coding::dummy).cols() == three.cols() + 1);

  Table unseen({"c", "v"}, {{"q", "1"}});
  CHECK_THROWS_AS(enc.transform(unseen), DataError);

  const auto back = BinaryEncoder::from_json(enc.to_json());
  CHECK(back.levels == enc.levels);
  CHECK(parse_coding("dummy") == Coding::dummy);
  CHECK_THROWS_AS(parse_coding("ordinal"), ConfigError);
}

TEST_CASE("PCA on a known covariance") {
  // Points along (1,1) with a little spread along (1,-1): covariance close to [[2,1],[1,2]] shape.
  Eigen::MatrixXd X(4, 2);
  X << 1, 1, -1, -1, 2, 2, -2, -2;
  X.col(0).array() += Eigen::Array4d(0.1, -0.1, -0.1, 0.1);
  const auto m = pca_fit(X, 1);
  CHECK(std::abs(m.loadings(0, 0) - 1 / std::sqrt(2.0)) < 0.01);
  CHECK(std::abs(m.loadings(1, 0) - 1 / std::sqrt(2.0)) < 0.01);

  Eigen::MatrixXd C(2, 2);
  C << 2, 1, 1, 2;
  Eigen::LLT<Eigen::MatrixXd> llt(C);
  Rng rng = make_stream(167, 0);
  Eigen::MatrixXd Z(5000, 2);
  for (int i = 0; i < Z.rows(); ++i) Z.row(i) = (llt.matrixL() * Eigen::Vector2d(std_normal(rng), std_normal(rng))).transpose();
  const auto pc = pca_fit(Z, 2);
  CHECK(pc.eigenvalues(0) == Approx(3.0).epsilon(0.05));
  CHECK(pc.eigenvalues(1) == Approx(1.0).epsilon(0.05));
  CHECK(pc.loadings(0, 0) > 0);
  CHECK(std::abs(std::abs(pc.loadings(0, 0)) - 1 / std::sqrt(2.0)) < 0.02);
}

TEST_CASE("PCA scores are centered and a full basis reconstructs the data") {
  Rng rng = make_stream(173, 0);
  Eigen::MatrixXd X(50, 4);
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 4; ++j) X(i, j) = std_normal(rng) * (j + 1) + j;
  const auto m = pca_fit(X, 4);
  const auto S = pca_transform(m, X);
  CHECK(S.colwise().mean().cwiseAbs().maxCoeff() < 1e-10);
  const Eigen::MatrixXd back = (S * m.loadings.transpose()).rowwise() + m.center.transpose();
  CHECK((back - X).cwiseAbs().maxCoeff() < 1e-9);
  // Data in a 2-D subspace: two components reconstruct it.
  Eigen::MatrixXd flat = X.leftCols(2) * Eigen::MatrixXd::Random(2, 4);
  const auto m2 = pca_fit(flat, 2);
  const Eigen::MatrixXd back2 = (pca_transform(m2, flat) * m2.loadings.transpose()).rowwise() + m2.center.transpose();
  CHECK((back2 - flat).cwiseAbs().maxCoeff() < 1e-9);

  const Eigen::MatrixXd gram = m.loadings.transpose() * m.loadings;
  CHECK((gram - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(pca_transform(m, X) == S);
  CHECK(S.rows() == X.rows());

  CHECK_THROWS_AS(pca_fit(X, 5), ConfigError);
  CHECK_THROWS_AS(pca_transform(m, Eigen::MatrixXd::Zero(2, 3)), ShapeError);
  const auto j = PCAModel::from_json(m.to_json());
  CHECK(j.loadings == m.loadings);
}

TEST_CASE("split sizes, determinism and coverage") {
  const auto s = split(10, 0.5, 3);
  CHECK(s.train.size() == 5);
  CHECK(s.test.size() == 5);
  CHECK(split(10, 0.5, 3).train == s.train);
  CHECK(split(7, 0.5, 1).train.size() == 4);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto p = split(37, 0.3, seed);
    std::vector<std::size_t> all = p.train;
    all.insert(all.end(), p.test.begin(), p.test.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) REQUIRE(all[i] == i);
    CHECK(std::is_sorted(p.train.begin(), p.train.end()));
    CHECK(std::is_sorted(p.test.begin(), p.test.end()));
  }
  CHECK_THROWS_AS(split(10, 1.0, 1), ConfigError);
}

TEST_CASE("grouping layouts") {
  SUBCASE("2x2 integer levels") {
    const auto t = load_csv(fixture("three_rows.csv"), xy_schema());
    const auto g = factor_indices(t, {{"f1", {}}, {"f2", {}}}, FactorConfig({2, 2}, {1, 1}));
    CHECK(g[0] == GroupIndex{1, 2});
    CHECK(g[2] == GroupIndex{2, 2});
  }
  SUBCASE("four rows covering a 2x2 grid") {
    Table t({"a", "b", "x", "y"}, {{"1", "1", "0", "1"}, {"1", "2", "0", "2"}, {"2", "1", "0", "3"}, {"2", "2", "0", "4"}});
    const auto d = group_by_factors(t, {{"a", {}}, {"b", {}}}, FactorConfig({2, 2}, {1, 1}), {"x"}, "y");
    for (std::size_t g = 0; g < 4; ++g) {
      REQUIRE(d.y[g].size() == 1);
      CHECK(d.y[g](0) == static_cast<double>(g + 1));
    }
  }
  SUBCASE("a single cell") {
    Table t({"f", "x", "y"}, {{"1", "0", "1"}, {"1", "1", "2"}});
    const auto d = group_by_factors(t, {{"f", {}}}, FactorConfig({1}, {1}), {"x"}, "y");
    CHECK(d.X.size() == 1);
    CHECK(d.total_rows() == 2);
  }
  SUBCASE("6x3 school layout") {
    const CsvSchema schema{{"school", "year"}, {"hours", "prior_score"}, "score", {}};
    const auto t = load_csv(fixture("school.csv"), schema);
    const FactorConfig cfg({6, 3}, {2, 2});
    const auto d = group_by_factors(t, {{"school", {}}, {"year", {}}}, cfg, schema.feature_columns, "score");
    CHECK(d.X.size() == 18);
    for (const auto& X : d.X) CHECK(X.rows() == 2);
    CHECK(d.total_rows() == t.rows());
    CHECK_NOTHROW(d.validate());
  }
  SUBCASE("out-of-range and unknown levels") {
    Table t({"f", "x", "y"}, {{"3", "0", "1"}});
    CHECK_THROWS_AS(group_by_factors(t, {{"f", {}}}, FactorConfig({2}, {1}), {"x"}, "y"), RangeError);
    Table u({"f", "x", "y"}, {{"east", "0", "1"}});
    CHECK_THROWS_AS(group_by_factors(u, {{"f", {"north", "south"}}}, FactorConfig({2}, {1}), {"x"}, "y"), RangeError);
    Table v({"f", "x", "y"}, {{"1.5", "0", "1"}});
    CHECK_THROWS_AS(group_by_factors(v, {{"f", {}}}, FactorConfig({2}, {1}), {"x"}, "y"), DataError);
  }
}

TEST_CASE("property: grouping conserves rows and their contents") {
  Rng rng = make_stream(179, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const FactorConfig cfg({1 + trial % 3, 2}, {1, 1});
    const int n = 5 + trial;
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd y(n);
    std::vector<GroupIndex> groups;
    double sum = 0;
    for (int i = 0; i < n; ++i) {
      X(i, 0) = std_normal(rng);
      X(i, 1) = i;
      y(i) = std_normal(rng);
      sum += y(i);
      groups.push_back(group_at(rng() % cfg.num_cells(), cfg));
    }
    const auto d = group_by_factors(X, y, groups, cfg);
    CHECK(d.total_rows() == static_cast<std::size_t>(n));
    double s = 0;
    for (const auto& v : d.y) s += v.sum();
    CHECK(s == Approx(sum));
    for (std::size_t g = 0; g < d.X.size(); ++g)
      for (Eigen::Index r = 0; r < d.X[g].rows(); ++r)
        CHECK(groups[static_cast<std::size_t>(d.X[g](r, 1))] == group_at(g, cfg));
  }
}

TEST_CASE("preprocessor: log1p, PCA and serialization") {
  const auto t = restaurant();
  const CsvSchema schema{{"area", "price"}, {"seats", "parking", "hours"}, "rating", {"parking"}};
  PreprocessOptions opt;
  opt.pca_k = 2;
  opt.pca_scale = true;
  opt.log1p_response = true;
  const auto pre = Preprocessor::fit(t, schema, restaurant_factors(), FactorConfig({2, 3}, {1, 1}), opt);
  CHECK(pre.feature_names == std::vector<std::string>{"pc1", "pc2"});
  const auto rows = pre.apply(t);
  CHECK(rows.X.cols() == 2);
  CHECK(rows.y(0) == Approx(std::log1p(3.5)));
  CHECK(pre.response_from_model(rows.y(0)) == Approx(3.5));
  const auto back = Preprocessor::from_json(pre.to_json());
  CHECK((back.apply(t).X - rows.X).cwiseAbs().maxCoeff() == 0.0);
}
