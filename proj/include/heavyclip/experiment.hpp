#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "heavyclip/diagnostics.hpp"
#include "heavyclip/optimizers.hpp"
#include "heavyclip/problems.hpp"
#include "heavyclip/restarts.hpp"
#include "heavyclip/schedules.hpp"

namespace heavyclip {

inline constexpr const char* kVersion = "0.3.0";

enum class Method { Sgd, ClippedSgd, DClippedSgd, ScClippedSgd, Sstm, ClippedSstm, RClippedSstm, RClippedSgd };

std::string to_string(Method method);
Method method_from_string(const std::string& name);
bool is_sstm_family(Method method);
bool is_restarted(Method method);

/// Bad configuration; `path` names the offending field (e.g. "params.gamma").
class ConfigError : public InvalidArgument {
 public:
  ConfigError(std::string path, const std::string& message);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct ProblemSpec {
  std::string type = "toy";  // toy | logreg
  std::size_t n = 100;
  std::string noise = "gaussian";
  std::string path;          // LIBSVM file for logreg
  std::string optimum_path;  // cached reference; defaults beside the dataset
};

struct MethodParams {
  std::optional<double> gamma;
  std::optional<double> gamma_L;  // gamma = gamma_L / L
  std::optional<double> lambda;
  std::optional<double> B;
  std::optional<double> a;
  std::optional<double> a0;
  std::optional<std::uint64_t> m;
  std::optional<double> lambda0;
  std::optional<double> decay_epochs;   // l in the d-clipped heuristic
  std::optional<double> decay;          // multiplier in (0, 1)
  std::optional<std::uint64_t> period;  // iterations between decreases (toy problems)
};

struct ExperimentConfig {
  ProblemSpec problem;
  Method method = Method::ClippedSgd;
  std::string policy = "default";  // manual, or theorem where no manual form exists
  MethodParams params;
  std::optional<std::uint64_t> N;
  std::optional<double> epochs;  // oracle budget in passes over the data
  std::optional<double> epsilon;
  double beta = 0.05;
  std::optional<double> radius;  // R0, or R for restarts
  std::optional<double> gap;     // upper bound on f(x0) - f*
  std::vector<double> x0;        // one entry fills every coordinate
  std::uint64_t trials = 1;
  std::uint64_t seed = 0;
  std::string output_dir;
  std::uint64_t record_every = 1;
  unsigned workers = 0;  // 0: hardware concurrency
  TheoremConstants constants;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const SstmSchedule& s);
nlohmann::json to_json(const SgdSchedule& s);
nlohmann::json to_json(const RestartPlan& p);
nlohmann::json to_json(const RestartSummary& s);

/// Problem plus starting point resolved from a config.
struct ResolvedProblem {
  std::shared_ptr<const StochasticOracle> oracle;
  Vector x0;
  std::size_t rows = 0;  // finite-sum size; 0 for toy problems
  nlohmann::json description;
};

ResolvedProblem resolve_problem(const ExperimentConfig& config);

/// The schedule a config resolves to; exactly one member is set.
struct ResolvedSchedule {
  std::optional<SgdSchedule> sgd;
  std::optional<SstmSchedule> sstm;
  std::optional<RestartPlan> plan;
  std::uint64_t N = 0;  // iterations of a single run (N0 for restarts)
};

ResolvedSchedule resolve_schedule(const ExperimentConfig& config, const ResolvedProblem& problem);

struct TrialOutcome {
  std::uint64_t trial = 0;
  Trajectory trajectory;  // restart stages concatenated
  std::vector<RestartSummary> restarts;
  double final_gap = 0.0;  // at the method's output point
  std::uint64_t oracle_calls = 0;
  bool aborted = false;
};

struct ExperimentResult {
  std::vector<TrialOutcome> trials;
  EnsembleStats stats;
  nlohmann::json provenance;
};

/// Runs every trial (trial i uses RngStream(seed, i)) on a worker pool and,
/// when output_dir is set, writes trial_XXXX.csv, quantiles.csv,
/// provenance.json and SVG plots there.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Same with an already resolved problem (skips dataset loading).
ExperimentResult run_experiment(const ExperimentConfig& config, const ResolvedProblem& problem);

/// CSV text of one trial; identical seeds give identical text.
std::string trial_csv(const TrialOutcome& outcome);

struct DiagnosticOptions {
  std::string dataset;
  std::string optimum_path;  // defaults beside the dataset
  bool solve = false;        // solve (and cache) when no optimum is cached
  double tol = 1e-8;
  std::size_t bins = 50;
  std::string output_dir;  // empty: nothing written
};

struct DiagnosticResult {
  TailHistogram histogram;
  SubgaussianScore score;
  double ks_normal = 0.0;
  bool solved = false;
  nlohmann::json report;
};

/// Histogram of ||grad f_i(x*)|| with a normal overlay and the tail score.
/// Writes histogram.csv, histogram.svg and score.json when output_dir is set.
/// Throws InvalidArgument when no optimum is cached and `solve` is false.
DiagnosticResult run_diagnostic(const DiagnosticOptions& options);

/// Solves for the reference optimum of a LIBSVM dataset and writes the cache.
ReferenceSolution solve_and_cache(const std::string& dataset, double tol, const std::string& out_path = {});

}  // namespace heavyclip
