// heavyclip: run experiments, tail diagnostics, acceptance checks and
// reference solves from the command line.
//
// Exit codes: 0 success, 1 a verification criterion failed, 2 usage or input error.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "heavyclip/acceptance.hpp"
#include "heavyclip/experiment.hpp"

namespace {

using namespace heavyclip;

constexpr int kOk = 0;
constexpr int kCriterionFailed = 1;
constexpr int kUsage = 2;

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

struct RunFlags {
  std::string config;
  std::string problem, noise, dataset, optimum, method, policy, output;
  std::size_t n = 0;
  std::uint64_t N = 0, trials = 0, seed = 0, record_every = 0, m = 0, period = 0;
  unsigned workers = 0;
  double gamma = 0, gamma_L = 0, lambda = 0, B = 0, a = 0, a0 = 0, lambda0 = 0, decay = 0, decay_epochs = 0;
  double epochs = 0, epsilon = 0, beta = 0, radius = 0, gap = 0, scale = 0;
  std::vector<double> x0;
};

void add_run_flags(CLI::App& cmd, RunFlags& f) {
  cmd.add_option("config", f.config, "JSON config file (flags override it)")->check(CLI::ExistingFile);
  cmd.add_option("--problem", f.problem, "toy | logreg")->check(CLI::IsMember({"toy", "logreg"}));
  cmd.add_option("--n", f.n, "toy dimension");
  cmd.add_option("--noise", f.noise, "none | gaussian | weibull | burr");
  cmd.add_option("--dataset", f.dataset, "LIBSVM file (implies --problem logreg)");
  cmd.add_option("--optimum", f.optimum, "cached reference optimum JSON");
  cmd.add_option("--method", f.method, "sgd, clipped-sgd, d-clipped-sgd, sc-clipped-sgd, sstm, clipped-sstm, ...");
  cmd.add_option("--policy", f.policy, "default | manual | theorem | medium | constant | combined");
  cmd.add_option("-N,--iterations", f.N, "iterations per run");
  cmd.add_option("--epochs", f.epochs, "oracle budget in passes over the data");
  cmd.add_option("--trials", f.trials);
  cmd.add_option("--seed", f.seed);
  cmd.add_option("--record-every", f.record_every);
  cmd.add_option("--workers", f.workers, "0 uses every core");
  cmd.add_option("-o,--output", f.output, "output directory (default $HEAVYCLIP_OUTPUT_DIR or ./heavyclip_out)");
  cmd.add_option("--gamma", f.gamma);
  cmd.add_option("--gamma-L", f.gamma_L, "stepsize as a multiple of 1/L");
  cmd.add_option("--lambda", f.lambda, "clip level (SGD family)");
  cmd.add_option("--B", f.B, "clip parameter (SSTM family)");
  cmd.add_option("--a", f.a, "SSTM stepsize parameter");
  cmd.add_option("--a0", f.a0, "constant-batch policy coefficient");
  cmd.add_option("--m", f.m, "batchsize");
  cmd.add_option("--lambda0", f.lambda0, "initial clip level of d-clipped-SGD");
  cmd.add_option("--decay", f.decay, "clip-level multiplier of d-clipped-SGD");
  cmd.add_option("--decay-epochs", f.decay_epochs, "epochs between clip-level decreases");
  cmd.add_option("--period", f.period, "iterations between clip-level decreases");
  cmd.add_option("--epsilon", f.epsilon, "target accuracy for restarted methods");
  cmd.add_option("--beta", f.beta, "failure probability");
  cmd.add_option("--radius", f.radius);
  cmd.add_option("--gap", f.gap, "upper bound on f(x0) - f*");
  cmd.add_option("--x0", f.x0, "starting point (one value fills every coordinate)");
  cmd.add_option("--practical-scale", f.scale, "multiplier on the theorem's numeric constants");
}

ExperimentConfig build_config(const CLI::App& cmd, const RunFlags& f) {
  ExperimentConfig c = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
  auto set = [&](const char* flag) { return cmd.count(flag) > 0; };
  if (set("--problem")) c.problem.type = f.problem;
  if (set("--n")) c.problem.n = f.n;
  if (set("--noise")) c.problem.noise = f.noise;
  if (set("--dataset")) {
    c.problem.type = "logreg";
    c.problem.path = f.dataset;
  }
  if (set("--optimum")) c.problem.optimum_path = f.optimum;
  if (set("--method")) {
    try {
      c.method = method_from_string(f.method);
    } catch (const InvalidArgument& e) {
      throw ConfigError("method", e.what());
    }
  }
  if (set("--policy")) c.policy = f.policy;
  if (set("--iterations")) c.N = f.N;
  if (set("--epochs")) c.epochs = f.epochs;
  if (set("--trials")) c.trials = f.trials;
  if (set("--seed")) c.seed = f.seed;
  if (set("--record-every")) c.record_every = f.record_every;
  if (set("--workers")) c.workers = f.workers;
  if (set("--gamma")) c.params.gamma = f.gamma;
  if (set("--gamma-L")) c.params.gamma_L = f.gamma_L;
  if (set("--lambda")) c.params.lambda = f.lambda;
  if (set("--B")) c.params.B = f.B;
  if (set("--a")) c.params.a = f.a;
  if (set("--a0")) c.params.a0 = f.a0;
  if (set("--m")) c.params.m = f.m;
  if (set("--lambda0")) c.params.lambda0 = f.lambda0;
  if (set("--decay")) c.params.decay = f.decay;
  if (set("--decay-epochs")) c.params.decay_epochs = f.decay_epochs;
  if (set("--period")) c.params.period = f.period;
  if (set("--epsilon")) c.epsilon = f.epsilon;
  if (set("--beta")) c.beta = f.beta;
  if (set("--radius")) c.radius = f.radius;
  if (set("--gap")) c.gap = f.gap;
  if (set("--x0")) c.x0 = f.x0;
  if (set("--practical-scale")) c.constants.practical_scale = f.scale;
  if (set("--output")) {
    c.output_dir = f.output;
  } else if (c.output_dir.empty()) {
    c.output_dir = env_or("HEAVYCLIP_OUTPUT_DIR", "heavyclip_out");
  }
  // Round-trip through JSON so flag values get the same validation as file values.
  return config_from_json(config_to_json(c));
}

int cmd_run(const CLI::App& cmd, const RunFlags& f) {
  const ExperimentConfig c = build_config(cmd, f);
  const ExperimentResult r = run_experiment(c);
  std::vector<double> finals;
  std::uint64_t aborted = 0;
  for (const auto& t : r.trials) {
    finals.push_back(t.final_gap);
    if (t.aborted) ++aborted;
  }
  std::cout << to_string(c.method) << ": " << r.trials.size() << " trials, median final gap "
            << quantile(finals, 0.5) << ", " << aborted << " aborted\n"
            << "wrote " << c.output_dir << "\n";
  const auto& sched = r.provenance["schedule"];
  if (sched.contains("warnings")) {
    for (const auto& w : sched["warnings"]) std::cerr << "warning: " << w.get<std::string>() << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clipped stochastic methods under heavy-tailed noise"};
  app.set_version_flag("--version", std::string(heavyclip::kVersion));
  app.require_subcommand(1);

  RunFlags rf;
  CLI::App* run = app.add_subcommand("run", "run an experiment ensemble");
  add_run_flags(*run, rf);

  DiagnosticOptions dopt;
  CLI::App* diag = app.add_subcommand("diagnose", "gradient-norm histogram and tail score at the optimum");
  diag->add_option("dataset", dopt.dataset, "LIBSVM file")->required()->check(CLI::ExistingFile);
  diag->add_option("--optimum", dopt.optimum_path, "cached optimum JSON (default: beside the dataset)");
  diag->add_flag("--solve", dopt.solve, "solve for the optimum when none is cached");
  diag->add_option("--tol", dopt.tol, "gradient-norm tolerance for --solve");
  diag->add_option("--bins", dopt.bins)->check(CLI::Range(2, 100000));
  diag->add_option("-o,--output", dopt.output_dir, "output directory (default $HEAVYCLIP_OUTPUT_DIR or ./heavyclip_out)");

  std::string level = "fast", json_out;
  std::vector<int> only;
  std::string data_dir = env_or("HEAVYCLIP_DATA_DIR", "");
  CLI::App* verify = app.add_subcommand("verify", "run the acceptance criteria");
  verify->add_option("level", level, "fast | full")->check(CLI::IsMember({"fast", "full"}));
  verify->add_option("--only", only, "criterion ids")->delimiter(',')->check(CLI::Range(1, 11));
  verify->add_option("--json", json_out, "write the machine-readable report here");
  verify->add_option("--data-dir", data_dir, "directory with LIBSVM datasets (default $HEAVYCLIP_DATA_DIR)");

  std::string solve_dataset, solve_out;
  double solve_tol = 1e-8;
  CLI::App* solve = app.add_subcommand("solve-reference", "compute and cache the optimum of a logistic regression");
  solve->add_option("dataset", solve_dataset, "LIBSVM file")->required()->check(CLI::ExistingFile);
  solve->add_option("--tol", solve_tol, "gradient-norm tolerance")->check(CLI::PositiveNumber);
  solve->add_option("-o,--out", solve_out, "cache path (default: <dataset>.optimum.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return cmd_run(*run, rf);

    if (*diag) {
      if (dopt.output_dir.empty()) dopt.output_dir = env_or("HEAVYCLIP_OUTPUT_DIR", "heavyclip_out");
      const DiagnosticResult r = run_diagnostic(dopt);
      std::cout << r.report.dump(2) << "\n";
      return kOk;
    }

    if (*verify) {
      VerifyOptions opt;
      opt.level = level == "full" ? VerifyLevel::Full : VerifyLevel::Fast;
      opt.only = only;
      opt.data_dir = data_dir;
      nlohmann::json report = nlohmann::json::array();
      bool failed = false;
      for (int id : opt.only.empty() ? criteria_for(opt.level) : opt.only) {
        const CriterionResult r = run_criterion(id, opt);
        std::cout << summary_line(r) << std::endl;
        failed = failed || r.status == CriterionStatus::Fail;
        report.push_back(to_json(r));
      }
      if (!json_out.empty()) {
        std::ofstream out(json_out);
        out << report.dump(2) << "\n";
      }
      return failed ? kCriterionFailed : kOk;
    }

    if (*solve) {
      const ReferenceSolution ref = solve_and_cache(solve_dataset, solve_tol, solve_out);
      std::cout << "f* = " << ref.f_star << ", ||grad|| = " << ref.grad_norm << " after " << ref.iterations
                << " iterations (" << ref.stop_reason << ")\n";
      return ref.converged ? kOk : kCriterionFailed;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
