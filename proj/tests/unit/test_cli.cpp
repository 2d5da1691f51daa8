#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unistd.h>

#include "doctest.h"
#include "json.hpp"
#include "mldp/data.hpp"
#include "mldp/pipeline.hpp"
#include "mldp/predict.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string output;
};

struct Workdir {
  fs::path dir;
  Workdir() {
    dir = fs::temp_directory_path() / ("mldp_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Workdir() { fs::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Run cli(const std::string& args, const Workdir& w) {
  const std::string log = w / "cli.log";
  const std::string cmd = std::string("\"") + MLDP_CLI_PATH + "\" " + args + " > \"" + log + "\" 2>&1";
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(log)};
}

void write(const std::string& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

std::string config_for(const std::string& data, int iterations, int burn_in, int thin, int reps = 2,
                       const std::string& bases = "[2, 2]") {
  json j = {{"data", {{"path", data},
                      {"factor_columns", {"f1", "f2"}},
                      {"feature_columns", {"x1", "x2"}},
                      {"response_column", "y"}}},
            {"model", {{"factors_per_group", {2, 2}}, {"bases_per_group", json::parse(bases)}}},
            {"sampler", {{"iterations", iterations}, {"burn_in", burn_in}, {"thin", thin}, {"seed", 4}}},
            {"experiment", {{"repetitions", reps}, {"fraction", 0.5}}},
            {"simulate", {{"truncation", 50}, {"draws", 300}}}};
  return j.dump(2);
}

}  // namespace

TEST_CASE("cli end to end") {
  Workdir w;
  const auto data = w / "data.csv";
  REQUIRE(cli("synth -o " + data + " --samples-per-group 20", w).status == 0);
  write(w / "cfg.json", config_for(data, 20, 10, 2));

  SUBCASE("fit writes floor((iterations - burn_in) / thin) snapshots, reproducibly") {
    REQUIRE(cli("fit -c " + (w / "cfg.json") + " -t " + (w / "a.ndjson") + " --sweeps " + (w / "s.csv"), w).status == 0);
    REQUIRE(cli("fit -c " + (w / "cfg.json") + " -t " + (w / "b.ndjson"), w).status == 0);
    const auto trace = mldp::read_trace_file(w / "a.ndjson");
    CHECK(trace.snapshots.size() == 5);
    CHECK(slurp(w / "a.ndjson") == slurp(w / "b.ndjson"));
    REQUIRE(cli("--seed 99 fit -c " + (w / "cfg.json") + " -t " + (w / "c.ndjson"), w).status == 0);
    CHECK(slurp(w / "a.ndjson") != slurp(w / "c.ndjson"));
  }

  SUBCASE("predict agrees with the library and handles empty input") {
    REQUIRE(cli("fit -c " + (w / "cfg.json") + " -t " + (w / "a.ndjson"), w).status == 0);
    write(w / "new.csv", "f1,f2,x1,x2\n1,2,5.0,0.5\n2,1,0.2,4.8\n");
    REQUIRE(cli("predict -t " + (w / "a.ndjson") + " -i " + (w / "new.csv") + " -o " + (w / "out.csv"), w).status == 0);
    std::ifstream in(w / "out.csv");
    const auto out = mldp::parse_csv(in);
    REQUIRE(out.rows() == 2);
    const auto trace = mldp::read_trace_file(w / "a.ndjson");
    const double lib = mldp::predict_y(trace, {Eigen::Vector2d(5.0, 0.5), mldp::GroupIndex{1, 2}}).mean;
    CHECK(std::stod(out.cell(0, 4)) == lib);

    REQUIRE(cli("predict --backend openmp -t " + (w / "a.ndjson") + " -i " + (w / "new.csv") + " -o " + (w / "omp.csv"), w).status == 0);
    CHECK(slurp(w / "omp.csv") == slurp(w / "out.csv"));

    write(w / "empty.csv", "f1,f2,x1,x2\n");
    REQUIRE(cli("predict -t " + (w / "a.ndjson") + " -i " + (w / "empty.csv") + " -o " + (w / "e.csv"), w).status == 0);
    CHECK(slurp(w / "e.csv") == "f1,f2,x1,x2,y_hat\n");
  }

  SUBCASE("a single-cluster trace predicts x'beta") {
    write(w / "dp.json", config_for(data, 20, 10, 2, 2, "[1, 1]"));
    REQUIRE(cli("fit -c " + (w / "dp.json") + " -t " + (w / "dp.ndjson"), w).status == 0);
    auto trace = mldp::read_trace_file(w / "dp.ndjson");
    trace.model.hyper.alpha = 1e-300;
    trace.snapshots.erase(trace.snapshots.begin() + 1, trace.snapshots.end());
    auto& clusters = trace.snapshots[0].clusters[0];
    int total = 0;
    for (const auto& c : clusters) total += c.size;
    clusters.erase(clusters.begin() + 1, clusters.end());
    clusters[0].size = total;
    const Eigen::Vector2d beta = clusters[0].phi.beta();
    mldp::write_trace_file(trace, w / "one.ndjson");
    write(w / "rows.csv", "f1,f2,x1,x2\n1,1,0.5,2.0\n2,2,-1.0,3.0\n");
    REQUIRE(cli("predict -t " + (w / "one.ndjson") + " -i " + (w / "rows.csv") + " -o " + (w / "one.csv"), w).status == 0);
    std::ifstream in(w / "one.csv");
    const auto out = mldp::parse_csv(in);
    CHECK(std::abs(out.numeric("y_hat")[0] - Eigen::Vector2d(0.5, 2.0).dot(beta)) < 1e-12);
    CHECK(std::abs(out.numeric("y_hat")[1] - Eigen::Vector2d(-1.0, 3.0).dot(beta)) < 1e-12);
  }

  SUBCASE("experiment reports one value per repetition with half-and-half splits") {
    REQUIRE(cli("experiment --baseline-dp -c " + (w / "cfg.json") + " -r " + (w / "rep.json"), w).status == 0);
    const auto rep = json::parse(slurp(w / "rep.json"));
    CHECK(rep["reps"].size() == 2);
    CHECK(rep["n_train"][0] == 40);
    CHECK(rep["n_test"][1] == 40);
    CHECK(rep.contains("baseline"));
  }

  SUBCASE("simulate with a single basis per group") {
    write(w / "one.json", config_for(data, 20, 10, 2, 2, "[1, 1]"));
    REQUIRE(cli("simulate -c " + (w / "one.json") + " -w " + (w / "w.csv") + " -m " + (w / "m.json"), w).status == 0);
    std::ifstream in(w / "w.csv");
    const auto wt = mldp::parse_csv(in);
    CHECK(wt.rows() == 4);
    for (double v : wt.numeric("weight")) CHECK(v == 1.0);
    CHECK(json::parse(slurp(w / "m.json"))["groups"].size() == 4);
  }

  SUBCASE("input errors exit with status 2 and name the file") {
    const auto missing = w / "nope.json";
    auto r = cli("fit -c " + missing + " -t " + (w / "t.ndjson"), w);
    CHECK(r.status == 2);
    CHECK(r.output.find(missing) != std::string::npos);

    write(w / "bad.json", config_for(w / "absent.csv", 20, 10, 2));
    r = cli("fit -c " + (w / "bad.json") + " -t " + (w / "t.ndjson"), w);
    CHECK(r.status == 2);
    CHECK(r.output.find("absent.csv") != std::string::npos);

    CHECK(cli("fit", w).status == 2);
    CHECK(cli("frobnicate", w).status == 2);
  }
}
