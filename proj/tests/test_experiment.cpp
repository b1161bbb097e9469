#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "heavyclip/experiment.hpp"

using namespace heavyclip;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("heavyclip_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string config_error_path(const json& j) {
  try {
    config_from_json(j);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "";
}

// Gaussian-looking features, labels from a noisy linear rule.
fs::path write_dataset(const fs::path& dir, std::size_t rows) {
  SparseDataset d;
  RngStream r(42, 0);
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<std::pair<std::uint32_t, double>> row;
    double margin = 0;
    for (std::uint32_t j = 0; j < 5; ++j) {
      const double v = r.normal();
      row.emplace_back(j, v);
      margin += (j + 1.0) * v * 0.2;
    }
    d.add_row(margin + r.normal() >= 0 ? 1.0 : -1.0, row);
  }
  d.dimension = 5;
  const fs::path path = dir / "synth.libsvm";
  std::ofstream out(path);
  write_libsvm(d, out);
  return path;
}

}  // namespace

TEST_CASE("config parsing is strict and names the offending field") {
  CHECK(config_error_path({{"bogus", 1}}) == "bogus");
  CHECK(config_error_path({{"params", {{"gama", 0.1}}}}) == "params.gama");
  CHECK(config_error_path({{"problem", {{"n", -3}}}}) == "problem.n");
  CHECK(config_error_path({{"method", "adam"}}) == "method");
  CHECK(config_error_path({{"beta", 1.5}}) == "beta");
  CHECK(config_error_path({{"trials", 0}}) == "trials");
  CHECK(config_error_path({{"x0", "ones"}}) == "x0");
  CHECK(config_error_path({{"problem", {{"type", "mlp"}}}}) == "problem.type");
}

TEST_CASE("config round trip") {
  const json j = {{"problem", {{"type", "toy"}, {"n", 7}, {"noise", "burr"}}},
                  {"method", "clipped-sstm"},
                  {"policy", "manual"},
                  {"params", {{"a", 3.0}, {"B", 0.5}, {"m", 4}}},
                  {"N", 100},
                  {"beta", 0.1},
                  {"x0", {1.0, 2.0}},
                  {"trials", 3},
                  {"seed", 9},
                  {"record_every", 5}};
  const ExperimentConfig c = config_from_json(j);
  CHECK(c.method == Method::ClippedSstm);
  CHECK(*c.params.B == 0.5);
  CHECK(*c.params.m == 4);
  const ExperimentConfig back = config_from_json(config_to_json(c));
  CHECK(config_to_json(back) == config_to_json(c));
  for (Method m : {Method::Sgd, Method::ClippedSgd, Method::DClippedSgd, Method::ScClippedSgd, Method::Sstm,
                   Method::ClippedSstm, Method::RClippedSstm, Method::RClippedSgd}) {
    CHECK(method_from_string(to_string(m)) == m);
  }
}

TEST_CASE("schedule resolution validates parameters against the method") {
  ExperimentConfig c;
  c.problem.n = 3;
  c.N = 10;
  c.method = Method::ClippedSgd;
  c.params.gamma = 0.1;
  c.params.lambda = 1.0;
  const ResolvedProblem p = resolve_problem(c);
  CHECK(p.x0 == Vector::Ones(3));
  CHECK(resolve_schedule(c, p).sgd);

  auto path_of = [&](const ExperimentConfig& bad) -> std::string {
    try {
      resolve_schedule(bad, p);
    } catch (const ConfigError& e) {
      return e.path();
    }
    return "";
  };
  ExperimentConfig b = c;
  b.params.B = 1.0;
  CHECK(path_of(b) == "params.B");
  b = c;
  b.params.lambda.reset();
  CHECK(path_of(b) == "params.lambda");
  b = c;
  b.N.reset();
  CHECK(path_of(b) == "N");
  b = c;
  b.epochs = 2;
  b.N.reset();
  CHECK(path_of(b) == "epochs");
  b = c;
  b.method = Method::ClippedSstm;
  b.params.gamma.reset();
  b.params.lambda.reset();
  b.params.a = 1;
  CHECK(path_of(b) == "params.B");
  b = c;
  b.method = Method::RClippedSgd;
  b.params = {};
  CHECK(path_of(b) == "epsilon");
  b = c;
  b.x0 = {1, 2};
  CHECK_THROWS_AS(resolve_problem(b), ConfigError);
}

TEST_CASE("single trial with a coarse record grid") {
  ExperimentConfig c;
  c.problem.n = 4;
  c.method = Method::ClippedSgd;
  c.params.gamma = 0.1;
  c.params.lambda = 2;
  c.N = 50;
  c.record_every = 50;
  c.workers = 1;
  const ExperimentResult r = run_experiment(c);
  REQUIRE(r.trials.size() == 1);
  CHECK(r.trials[0].trajectory.records.size() == 2);
  CHECK(r.trials[0].oracle_calls == 50);
  CHECK(r.stats.checkpoints == std::vector<std::uint64_t>{0, 50});
}

TEST_CASE("outputs, provenance and reproducibility across worker counts") {
  const fs::path dir = scratch("exp");
  ExperimentConfig c;
  c.problem.n = 5;
  c.problem.noise = "weibull";
  c.method = Method::ClippedSstm;
  c.policy = "theorem";
  c.N = 40;
  c.trials = 4;
  c.seed = 11;
  c.record_every = 4;
  c.workers = 1;
  c.output_dir = dir.string();
  const ExperimentResult one = run_experiment(c);
  for (const char* f : {"trial_0000.csv", "trial_0003.csv", "quantiles.csv", "provenance.json",
                        "convergence_iterations.svg", "convergence_calls.svg"}) {
    INFO(f);
    CHECK(fs::exists(dir / f));
  }
  std::ifstream in(dir / "provenance.json");
  const json prov = json::parse(in);
  CHECK(prov.at("config").at("method") == "clipped-sstm");
  CHECK_FALSE(prov.at("config").contains("workers"));

  c.workers = 3;
  const ExperimentResult three = run_experiment(c);
  for (std::size_t t = 0; t < 4; ++t) CHECK(trial_csv(one.trials[t]) == trial_csv(three.trials[t]));
  CHECK(trial_csv(one.trials[0]) != trial_csv(one.trials[1]));
  CHECK(one.provenance == three.provenance);
  fs::remove_all(dir);
}

TEST_CASE("restarted runs concatenate their stages") {
  ExperimentConfig c;
  c.problem.n = 2;
  c.problem.noise = "none";
  c.method = Method::RClippedSstm;
  c.epsilon = 0.05;
  c.workers = 1;
  c.record_every = 10;
  const ExperimentResult r = run_experiment(c);
  const TrialOutcome& t = r.trials[0];
  REQUIRE(t.restarts.size() >= 2);
  const auto& recs = t.trajectory.records;
  for (std::size_t i = 1; i < recs.size(); ++i) {
    CHECK(recs[i].k > recs[i - 1].k);
    CHECK(recs[i].calls >= recs[i - 1].calls);
  }
  CHECK(recs.back().calls == t.oracle_calls);
  CHECK(t.restarts.back().calls == t.oracle_calls);
  CHECK(t.final_gap <= c.epsilon.value());
}

TEST_CASE("logistic regression from a LIBSVM file") {
  const fs::path dir = scratch("logreg");
  const fs::path data = write_dataset(dir, 400);

  ExperimentConfig c;
  c.problem.type = "logreg";
  c.problem.path = data.string();
  c.method = Method::ClippedSgd;
  c.params.gamma_L = 1.0;
  c.params.lambda = 1.0;
  c.params.m = 8;
  c.epochs = 2;
  c.workers = 1;
  // No cached optimum yet: the run proceeds but cannot report gaps.
  CHECK(std::isnan(run_experiment(c).trials[0].final_gap));
  c.problem.optimum_path = (dir / "nowhere.json").string();
  CHECK_THROWS_AS(run_experiment(c), ConfigError);
  c.problem.optimum_path.clear();

  const ReferenceSolution ref = solve_and_cache(data.string(), 1e-8);
  CHECK(ref.converged);
  CHECK(fs::exists(default_cache_path(data)));
  const ExperimentResult r = run_experiment(c);
  CHECK(r.trials[0].trajectory.steps == 100);  // 2 * 400 / 8
  CHECK(r.trials[0].final_gap >= 0.0);
  CHECK(r.trials[0].final_gap < std::log(2.0));

  DiagnosticOptions o;
  o.dataset = data.string();
  o.output_dir = (dir / "diag").string();
  const DiagnosticResult d = run_diagnostic(o);
  CHECK_FALSE(d.solved);
  CHECK(d.histogram.sample_count == 400);
  CHECK(d.report.at("rows") == 400);
  CHECK(fs::exists(dir / "diag" / "score.json"));
  CHECK(fs::exists(dir / "diag" / "histogram.svg"));

  o.optimum_path = (dir / "missing.json").string();
  o.output_dir.clear();
  CHECK_THROWS_AS(run_diagnostic(o), InvalidArgument);
  o.solve = true;
  CHECK(run_diagnostic(o).solved);
  CHECK(fs::exists(dir / "missing.json"));
  fs::remove_all(dir);
}
