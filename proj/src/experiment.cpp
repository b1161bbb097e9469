#include "heavyclip/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "heavyclip/problems.hpp"

namespace heavyclip {

using nlohmann::json;

namespace {

const std::vector<std::pair<Method, const char*>> kMethodNames = {
    {Method::Sgd, "sgd"},
    {Method::ClippedSgd, "clipped-sgd"},
    {Method::DClippedSgd, "d-clipped-sgd"},
    {Method::ScClippedSgd, "sc-clipped-sgd"},
    {Method::Sstm, "sstm"},
    {Method::ClippedSstm, "clipped-sstm"},
    {Method::RClippedSstm, "r-clipped-sstm"},
    {Method::RClippedSgd, "r-clipped-sgd"},
};

}  // namespace

std::string to_string(Method method) {
  for (const auto& [m, name] : kMethodNames) {
    if (m == method) return name;
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  for (const auto& [m, n] : kMethodNames) {
    if (name == n) return m;
  }
  throw ConfigError("method", "unknown method '" + name + "'");
}

bool is_sstm_family(Method method) {
  return method == Method::Sstm || method == Method::ClippedSstm || method == Method::RClippedSstm;
}

bool is_restarted(Method method) { return method == Method::RClippedSstm || method == Method::RClippedSgd; }

ConfigError::ConfigError(std::string path, const std::string& message)
    : InvalidArgument(path + ": " + message), path_(std::move(path)) {}

// ---------------------------------------------------------------------------
// Config (de)serialization

namespace {

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "expected a finite number");
  return v;
}

std::uint64_t get_count(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(j.get<std::int64_t>());
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (v >= 0 && std::floor(v) == v && v < 1.8e19) return static_cast<std::uint64_t>(v);
  }
  throw ConfigError(path, "expected a non-negative integer");
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "config" : path, "expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) throw ConfigError(path.empty() ? key : path + "." + key, "unknown field");
  }
}

template <typename T, typename F>
void read_opt(const json& j, const char* key, const std::string& path, std::optional<T>& out, F getter) {
  if (j.contains(key) && !j.at(key).is_null()) out = getter(j.at(key), path.empty() ? key : path + "." + key);
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  check_keys(j, "", {"problem", "method", "policy", "params", "N", "epochs", "epsilon", "beta", "radius", "gap",
                     "x0", "trials", "seed", "output_dir", "record_every", "workers", "constants"});
  ExperimentConfig c;
  if (j.contains("problem")) {
    const json& p = j.at("problem");
    check_keys(p, "problem", {"type", "n", "noise", "path", "optimum"});
    if (p.contains("type")) c.problem.type = get_string(p.at("type"), "problem.type");
    if (c.problem.type != "toy" && c.problem.type != "logreg") {
      throw ConfigError("problem.type", "expected 'toy' or 'logreg'");
    }
    if (p.contains("n")) c.problem.n = get_count(p.at("n"), "problem.n");
    if (p.contains("noise")) c.problem.noise = get_string(p.at("noise"), "problem.noise");
    if (p.contains("path")) c.problem.path = get_string(p.at("path"), "problem.path");
    if (p.contains("optimum")) c.problem.optimum_path = get_string(p.at("optimum"), "problem.optimum");
  }
  if (j.contains("method")) c.method = method_from_string(get_string(j.at("method"), "method"));
  if (j.contains("policy")) c.policy = get_string(j.at("policy"), "policy");
  if (j.contains("params")) {
    const json& p = j.at("params");
    check_keys(p, "params",
               {"gamma", "gamma_L", "lambda", "B", "a", "a0", "m", "lambda0", "decay_epochs", "decay", "period"});
    auto& m = c.params;
    read_opt(p, "gamma", "params", m.gamma, get_number);
    read_opt(p, "gamma_L", "params", m.gamma_L, get_number);
    read_opt(p, "lambda", "params", m.lambda, get_number);
    read_opt(p, "B", "params", m.B, get_number);
    read_opt(p, "a", "params", m.a, get_number);
    read_opt(p, "a0", "params", m.a0, get_number);
    read_opt(p, "m", "params", m.m, get_count);
    read_opt(p, "lambda0", "params", m.lambda0, get_number);
    read_opt(p, "decay_epochs", "params", m.decay_epochs, get_number);
    read_opt(p, "decay", "params", m.decay, get_number);
    read_opt(p, "period", "params", m.period, get_count);
  }
  read_opt(j, "N", "", c.N, get_count);
  read_opt(j, "epochs", "", c.epochs, get_number);
  read_opt(j, "epsilon", "", c.epsilon, get_number);
  if (j.contains("beta")) c.beta = get_number(j.at("beta"), "beta");
  read_opt(j, "radius", "", c.radius, get_number);
  read_opt(j, "gap", "", c.gap, get_number);
  if (j.contains("x0")) {
    const json& x = j.at("x0");
    if (x.is_number()) {
      c.x0 = {get_number(x, "x0")};
    } else if (x.is_array()) {
      for (std::size_t i = 0; i < x.size(); ++i) c.x0.push_back(get_number(x[i], "x0[" + std::to_string(i) + "]"));
    } else {
      throw ConfigError("x0", "expected a number or an array of numbers");
    }
  }
  if (j.contains("trials")) c.trials = get_count(j.at("trials"), "trials");
  if (j.contains("seed")) c.seed = get_count(j.at("seed"), "seed");
  if (j.contains("output_dir")) c.output_dir = get_string(j.at("output_dir"), "output_dir");
  if (j.contains("record_every")) c.record_every = get_count(j.at("record_every"), "record_every");
  if (j.contains("workers")) c.workers = static_cast<unsigned>(get_count(j.at("workers"), "workers"));
  if (j.contains("constants")) {
    const json& k = j.at("constants");
    check_keys(k, "constants", {"practical_scale", "theta_a", "theta_n0"});
    if (k.contains("practical_scale")) c.constants.practical_scale = get_number(k.at("practical_scale"), "constants.practical_scale");
    if (k.contains("theta_a")) c.constants.theta_a = get_number(k.at("theta_a"), "constants.theta_a");
    if (k.contains("theta_n0")) c.constants.theta_n0 = get_number(k.at("theta_n0"), "constants.theta_n0");
  }
  if (c.trials == 0) throw ConfigError("trials", "must be at least 1");
  if (c.record_every == 0) throw ConfigError("record_every", "must be at least 1");
  if (!(c.beta > 0.0 && c.beta < 1.0)) throw ConfigError("beta", "must lie in (0, 1)");
  if (!(c.constants.practical_scale > 0.0)) throw ConfigError("constants.practical_scale", "must be positive");
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["problem"] = {{"type", c.problem.type}};
  if (c.problem.type == "toy") {
    j["problem"]["n"] = c.problem.n;
    j["problem"]["noise"] = c.problem.noise;
  } else {
    j["problem"]["path"] = c.problem.path;
    if (!c.problem.optimum_path.empty()) j["problem"]["optimum"] = c.problem.optimum_path;
  }
  j["method"] = to_string(c.method);
  j["policy"] = c.policy;
  json p = json::object();
  auto put = [&p](const char* key, const auto& opt) {
    if (opt) p[key] = *opt;
  };
  put("gamma", c.params.gamma);
  put("gamma_L", c.params.gamma_L);
  put("lambda", c.params.lambda);
  put("B", c.params.B);
  put("a", c.params.a);
  put("a0", c.params.a0);
  put("m", c.params.m);
  put("lambda0", c.params.lambda0);
  put("decay_epochs", c.params.decay_epochs);
  put("decay", c.params.decay);
  put("period", c.params.period);
  j["params"] = p;
  if (c.N) j["N"] = *c.N;
  if (c.epochs) j["epochs"] = *c.epochs;
  if (c.epsilon) j["epsilon"] = *c.epsilon;
  j["beta"] = c.beta;
  if (c.radius) j["radius"] = *c.radius;
  if (c.gap) j["gap"] = *c.gap;
  if (!c.x0.empty()) j["x0"] = c.x0;
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  if (!c.output_dir.empty()) j["output_dir"] = c.output_dir;
  j["record_every"] = c.record_every;
  j["workers"] = c.workers;
  j["constants"] = {{"practical_scale", c.constants.practical_scale},
                    {"theta_a", c.constants.theta_a},
                    {"theta_n0", c.constants.theta_n0}};
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("malformed JSON: ") + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Schedule provenance

namespace {

// JSON has no infinity; the unclipped sentinel is written as a string.
json num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return nullptr;
  return v;
}

}  // namespace

json to_json(const SstmSchedule& s) {
  json j = {{"method", "clipped-sstm"},
            {"a", num(s.a)},
            {"L", num(s.L)},
            {"B", num(s.B)},
            {"C", num(s.C)},
            {"N", s.N},
            {"beta", num(s.beta)},
            {"log_term", num(s.log_term)},
            {"sigma2", num(s.sigma2)},
            {"R0", num(s.R0)},
            {"policy", to_string(s.policy)},
            {"provenance", s.provenance},
            {"warnings", s.warnings}};
  if (s.policy == BatchPolicy::ConstantBatch) j["a0"] = num(s.a0);
  // Constant runs are stored compactly.
  const bool constant = std::adjacent_find(s.batches.begin(), s.batches.end(), std::not_equal_to<>()) == s.batches.end();
  if (constant && !s.batches.empty()) {
    j["batch"] = s.batches.front();
  } else {
    j["batches"] = s.batches;
  }
  return j;
}

json to_json(const SgdSchedule& s) {
  json j = {{"method", "clipped-sgd"},
            {"variant", to_string(s.variant)},
            {"gamma", num(s.gamma)},
            {"lambda", num(s.lambda)},
            {"batch", s.batch_size},
            {"provenance", s.provenance}};
  if (s.variant != SgdVariant::Manual && s.variant != SgdVariant::DecayingHeuristic) {
    j["N"] = s.N;
    j["beta"] = num(s.beta);
    j["log_term"] = num(s.log_term);
    j["C"] = num(s.C);
    j["L"] = num(s.L);
    j["sigma2"] = num(s.sigma2);
  }
  if (s.variant == SgdVariant::ConvexTheorem) j["R0"] = num(s.R0);
  if (s.variant == SgdVariant::StronglyConvexTheorem) {
    j["mu"] = num(s.mu);
    j["r0"] = num(s.r0);
    j["contraction"] = num(s.contraction);
    j["batch_scale"] = num(s.batch_scale);
    j["lambda_rule"] = "4 sqrt(L contraction^k r0)";
  }
  if (s.variant == SgdVariant::DecayingHeuristic) {
    j["decay"] = num(s.decay);
    j["period"] = s.period;
  }
  return j;
}

json to_json(const RestartPlan& p) {
  json j = {{"method", p.kind == RestartKind::Sstm ? "r-clipped-sstm" : "r-clipped-sgd"},
            {"N0", p.N0},
            {"tau", p.tau},
            {"R", num(p.R)},
            {"L", num(p.L)},
            {"mu", num(p.mu)},
            {"sigma2", num(p.sigma2)},
            {"epsilon", num(p.epsilon)},
            {"beta", num(p.beta)},
            {"C", num(p.C)},
            {"log_term", num(p.log_term)},
            {"clip_parameter", p.clip_parameter},
            {"fixed_point_iterations", p.fixed_point_iterations},
            {"constants",
             {{"practical_scale", p.constants.practical_scale},
              {"theta_a", p.constants.theta_a},
              {"theta_n0", p.constants.theta_n0}}},
            {"provenance", p.provenance},
            {"warnings", p.warnings}};
  if (p.kind == RestartKind::Sstm) {
    j["a"] = num(p.a);
    json per_stage = json::array();
    for (std::uint64_t t = 0; t < p.tau; ++t) {
      per_stage.push_back({{"t", t}, {"m_first", p.sstm_batch(t, 0)}, {"m_last", p.sstm_batch(t, p.N0 - 1)}});
    }
    j["batches"] = per_stage;
    j["batch_rule"] = "ceil(sstm_batch_raw(sigma2, alpha_k, N0, log_term, R, 2^t))";
  } else {
    j["gamma"] = num(p.gamma);
    j["batches"] = p.sgd_batches;
  }
  return j;
}

json to_json(const RestartSummary& s) {
  return {{"t", s.t}, {"clip_parameter", num(s.clip_parameter)}, {"m", s.m}, {"f_gap", num(s.f_gap)}, {"calls", s.calls}};
}

// ---------------------------------------------------------------------------
// Resolution

ResolvedProblem resolve_problem(const ExperimentConfig& c) {
  ResolvedProblem r;
  if (c.problem.type == "toy") {
    if (c.problem.n == 0) throw ConfigError("problem.n", "must be at least 1");
    NoiseModel noise = NoiseModel::gaussian();
    try {
      noise = NoiseModel::from_name(c.problem.noise);
    } catch (const InvalidArgument& e) {
      throw ConfigError("problem.noise", e.what());
    }
    auto toy = std::make_shared<QuadraticToyProblem>(c.problem.n, noise);
    r.description = {{"type", "toy"},
                     {"n", c.problem.n},
                     {"noise", std::string(to_string(noise.family()))},
                     {"noise_scale", noise.scale()},
                     {"noise_shift", noise.shift()},
                     {"L", 1.0},
                     {"mu", 1.0},
                     {"sigma2", toy->variance_bound()},
                     {"f_star", 0.0}};
    r.oracle = toy;
  } else {
    if (c.problem.path.empty()) throw ConfigError("problem.path", "required for logreg problems");
    SparseDataset data;
    try {
      data = load_libsvm(c.problem.path);
    } catch (const LibsvmParseError&) {
      throw;
    } catch (const InvalidArgument& e) {
      throw ConfigError("problem.path", e.what());
    }
    r.rows = data.rows();
    auto lr = std::make_shared<LogisticRegressionProblem>(make_logreg(std::move(data)));
    const std::filesystem::path cache =
        c.problem.optimum_path.empty() ? default_cache_path(c.problem.path) : std::filesystem::path(c.problem.optimum_path);
    r.description = {{"type", "logreg"},
                     {"path", c.problem.path},
                     {"rows", lr->rows()},
                     {"n", lr->dimension()},
                     {"L", lr->smoothness()},
                     {"sigma2", lr->variance_bound()}};
    if (std::filesystem::exists(cache)) {
      const ReferenceSolution ref = load_reference(cache);
      if (static_cast<std::size_t>(ref.x.size()) != lr->dimension()) {
        throw ConfigError("problem.optimum", "cached optimum has the wrong dimension");
      }
      lr->set_optimum({ref.x, ref.f_star});
      r.description["optimum_cache"] = cache.string();
      r.description["f_star"] = ref.f_star;
      r.description["optimum_grad_norm"] = ref.grad_norm;
      r.description["optimum_tol"] = ref.tol;
    } else if (!c.problem.optimum_path.empty()) {
      throw ConfigError("problem.optimum", "file not found: " + cache.string());
    }
    r.oracle = lr;
  }
  const std::size_t n = r.oracle->dimension();
  if (c.x0.empty()) {
    r.x0 = c.problem.type == "toy" ? Vector::Ones(static_cast<Eigen::Index>(n))
                                   : Vector::Zero(static_cast<Eigen::Index>(n));
  } else if (c.x0.size() == 1) {
    r.x0 = Vector::Constant(static_cast<Eigen::Index>(n), c.x0.front());
  } else if (c.x0.size() == n) {
    r.x0 = Eigen::Map<const Vector>(c.x0.data(), static_cast<Eigen::Index>(n));
  } else {
    throw ConfigError("x0", "expected 1 or " + std::to_string(n) + " entries");
  }
  return r;
}

namespace {

std::string effective_policy(const ExperimentConfig& c) {
  if (!c.policy.empty() && c.policy != "default") return c.policy;
  switch (c.method) {
    case Method::ScClippedSgd:
    case Method::RClippedSstm:
    case Method::RClippedSgd:
      return "theorem";
    default:
      return "manual";
  }
}

template <typename T>
T require(const std::optional<T>& v, const std::string& path, const std::string& why) {
  if (!v) throw ConfigError(path, "required " + why);
  return *v;
}

void reject(bool present, const std::string& path, const std::string& why) {
  if (present) throw ConfigError(path, why);
}

}  // namespace

ResolvedSchedule resolve_schedule(const ExperimentConfig& c, const ResolvedProblem& problem) {
  const StochasticOracle& oracle = *problem.oracle;
  const double L = oracle.smoothness();
  const double mu = oracle.strong_convexity();
  const double sigma2 = oracle.variance_bound();
  const auto& p = c.params;
  const std::string policy = effective_policy(c);
  const bool sstm = is_sstm_family(c.method);

  reject(p.B && !sstm, "params.B", "only valid for SSTM methods");
  reject(p.a && !sstm, "params.a", "only valid for SSTM methods");
  reject(p.a0 && !sstm, "params.a0", "only valid for SSTM methods");
  reject(p.lambda && sstm, "params.lambda", "not valid for SSTM methods (use B)");
  reject((p.gamma || p.gamma_L) && sstm, "params.gamma", "not valid for SSTM methods (use a)");
  reject(p.gamma && p.gamma_L, "params.gamma_L", "give either gamma or gamma_L");
  const bool decaying = c.method == Method::DClippedSgd;
  reject((p.lambda0 || p.decay || p.decay_epochs || p.period) && !decaying, "params.lambda0",
         "decay parameters only apply to d-clipped-sgd");
  reject(p.lambda && (c.method == Method::Sgd || c.method == Method::Sstm), "params.lambda",
         "unclipped methods take no clipping level");
  reject(p.B && (c.method == Method::Sgd || c.method == Method::Sstm), "params.B",
         "unclipped methods take no clipping level");

  auto radius0 = [&]() -> double {
    if (c.radius) return *c.radius;
    const double d = distance_to_optimum(oracle, problem.x0);
    if (std::isnan(d)) throw ConfigError("radius", "required: the problem has no known optimum");
    return d;
  };
  auto gap0 = [&]() -> double {
    if (c.gap) return *c.gap;
    const double g = suboptimality(oracle, problem.x0);
    if (std::isnan(g)) throw ConfigError("gap", "required: the problem has no known optimum");
    return g;
  };
  auto gamma = [&]() -> double {
    if (p.gamma) return *p.gamma;
    if (p.gamma_L) return *p.gamma_L / L;
    throw ConfigError("params.gamma", "required for the manual policy");
  };
  const std::uint64_t m = p.m.value_or(1);
  if (m == 0) throw ConfigError("params.m", "must be at least 1");
  auto iterations = [&]() -> std::uint64_t {
    if (c.N) {
      if (*c.N == 0) throw ConfigError("N", "must be at least 1");
      return *c.N;
    }
    if (c.epochs) {
      if (problem.rows == 0) throw ConfigError("epochs", "only valid for finite-sum problems (use N)");
      const double n = std::ceil(*c.epochs * static_cast<double>(problem.rows) / static_cast<double>(m));
      if (!(n >= 1.0)) throw ConfigError("epochs", "budget gives no iterations");
      return static_cast<std::uint64_t>(n);
    }
    throw ConfigError("N", "required (or epochs for finite-sum problems)");
  };

  ResolvedSchedule out;
  try {
    switch (c.method) {
      case Method::Sgd:
      case Method::ClippedSgd: {
        out.N = iterations();
        if (policy == "manual") {
          const double lambda =
              c.method == Method::Sgd ? kInfinity : require(p.lambda, "params.lambda", "for clipped-sgd");
          out.sgd = sgd_manual(gamma(), lambda, m);
        } else if (policy == "theorem") {
          out.sgd = sgd_theorem_params(L, sigma2, radius0(), out.N, c.beta, c.constants);
          if (c.method == Method::Sgd) out.sgd->lambda = kInfinity;
        } else {
          throw ConfigError("policy", "expected 'manual' or 'theorem' for " + to_string(c.method));
        }
        break;
      }
      case Method::DClippedSgd: {
        if (policy != "manual") throw ConfigError("policy", "d-clipped-sgd only has the manual policy");
        out.N = iterations();
        const double lambda0 = require(p.lambda0 ? p.lambda0 : p.lambda, "params.lambda0", "for d-clipped-sgd");
        const double decay = require(p.decay, "params.decay", "for d-clipped-sgd");
        std::uint64_t period;
        if (p.period) {
          period = *p.period;
        } else if (p.decay_epochs && problem.rows > 0) {
          period = d_clipped_period(problem.rows, *p.decay_epochs, m);
        } else {
          throw ConfigError("params.period", "required (or decay_epochs for finite-sum problems)");
        }
        out.sgd = sgd_decaying(gamma(), lambda0, m, period, decay);
        break;
      }
      case Method::ScClippedSgd: {
        if (policy != "theorem") throw ConfigError("policy", "sc-clipped-sgd only has the theorem policy");
        if (!(mu > 0.0)) throw ConfigError("method", "sc-clipped-sgd needs a strongly convex problem");
        out.N = iterations();
        out.sgd = sgd_strongly_convex_params(L, mu, sigma2, gap0(), out.N, c.beta, c.constants);
        break;
      }
      case Method::Sstm:
      case Method::ClippedSstm: {
        out.N = iterations();
        if (policy == "manual") {
          const double a = require(p.a, "params.a", "for the manual policy");
          const double B = c.method == Method::Sstm ? kInfinity : require(p.B, "params.B", "for clipped-sstm");
          out.sstm = sstm_manual(a, L, B, m, out.N);
        } else {
          const BatchPolicy bp = batch_policy_from_string(policy);
          out.sstm = sstm_batch_policy(bp, L, sigma2, radius0(), out.N, c.beta, p.a0, c.constants);
          if (c.method == Method::Sstm) out.sstm->B = kInfinity;
        }
        break;
      }
      case Method::RClippedSstm:
      case Method::RClippedSgd: {
        if (!(mu > 0.0)) throw ConfigError("method", "restarted methods need a strongly convex problem");
        const double eps = require(c.epsilon, "epsilon", "for restarted methods");
        const double R = c.radius ? *c.radius : restart_radius(gap0(), mu);
        if (c.method == Method::RClippedSgd) {
          if (policy != "theorem") throw ConfigError("policy", "r-clipped-sgd only has the theorem policy");
          out.plan = restart_plan_sgd(L, mu, sigma2, R, eps, c.beta, c.constants);
        } else if (policy == "theorem") {
          out.plan = restart_plan_sstm(L, mu, sigma2, R, eps, c.beta, c.constants);
        } else if (policy == "constant") {
          out.plan = small_batch_restart_params(L, mu, sigma2, eps, c.beta, R, c.constants);
        } else {
          throw ConfigError("policy", "expected 'theorem' or 'constant' for r-clipped-sstm");
        }
        out.N = out.plan->N0;
        break;
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError("policy", e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Running

namespace {

TrialOutcome run_trial(const ExperimentConfig& c, const ResolvedProblem& problem, const ResolvedSchedule& s,
                       std::uint64_t trial) {
  const RngStream rng(c.seed, trial);
  const StochasticOracle& oracle = *problem.oracle;
  TrialOutcome out;
  out.trial = trial;
  if (s.sgd) {
    RunResult r = run_sgd(oracle, *s.sgd, problem.x0, s.N, rng, c.record_every);
    out.final_gap = suboptimality(oracle, r.output);
    out.trajectory = std::move(r.trajectory);
  } else if (s.sstm) {
    RunResult r = run_sstm(oracle, *s.sstm, problem.x0, s.N, rng, c.record_every);
    out.final_gap = suboptimality(oracle, r.output);
    out.trajectory = std::move(r.trajectory);
  } else {
    const RestartPlan& plan = *s.plan;
    RestartResult r = plan.kind == RestartKind::Sstm ? run_restarted_sstm(oracle, plan, problem.x0, rng, c.record_every)
                                                     : run_restarted_sgd(oracle, plan, problem.x0, rng, c.record_every);
    Trajectory& all = out.trajectory;
    all.records.push_back({0, r.initial_gap, distance_to_optimum(oracle, problem.x0), 0,
                           plan.clip_parameter.empty() ? 0.0 : plan.clip_parameter.front(), 0, 0});
    std::uint64_t calls = 0, clips = 0, steps = 0;
    for (const Trajectory& stage : r.runs) {
      for (std::size_t i = 1; i < stage.records.size(); ++i) {
        TrajectoryRecord rec = stage.records[i];
        rec.k += steps;
        rec.calls += calls;
        rec.clipped += clips;
        all.records.push_back(rec);
      }
      steps += stage.steps;
      calls += stage.oracle_calls;
      clips += stage.clip_activations;
      if (stage.aborted) {
        all.aborted = true;
        all.abort_step = steps;
        all.abort_reason = stage.abort_reason;
      }
    }
    all.steps = steps;
    all.oracle_calls = calls;
    all.clip_activations = clips;
    out.restarts = r.summary;
    out.final_gap = suboptimality(oracle, r.x);
  }
  out.oracle_calls = out.trajectory.oracle_calls;
  out.aborted = out.trajectory.aborted;
  return out;
}

std::string trial_file_name(std::uint64_t trial) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "trial_%04llu.csv", static_cast<unsigned long long>(trial));
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

}  // namespace

std::string trial_csv(const TrialOutcome& outcome) {
  std::ostringstream s;
  write_trajectory_csv(outcome.trajectory, s);
  return s.str();
}

ExperimentResult run_experiment(const ExperimentConfig& config) { return run_experiment(config, resolve_problem(config)); }

ExperimentResult run_experiment(const ExperimentConfig& config, const ResolvedProblem& problem) {
  const ResolvedSchedule schedule = resolve_schedule(config, problem);
  const std::filesystem::path dir = config.output_dir;
  if (!dir.empty()) std::filesystem::create_directories(dir);

  ExperimentResult result;
  result.trials.resize(config.trials);
  unsigned workers = config.workers ? config.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, config.trials));
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::uint64_t t = next.fetch_add(1);
      if (t >= config.trials) return;
      try {
        result.trials[t] = run_trial(config, problem, schedule, t);
        if (!dir.empty()) write_text(dir / trial_file_name(t), trial_csv(result.trials[t]));
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(config.trials);
        return;
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  // Checkpoint grid of the longest trial; aborted trials are padded with +inf.
  std::vector<std::uint64_t> grid;
  for (const auto& t : result.trials) {
    if (t.trajectory.records.size() > grid.size()) {
      grid.clear();
      for (const auto& r : t.trajectory.records) grid.push_back(r.k);
    }
  }
  std::vector<std::vector<double>> series;
  for (const auto& t : result.trials) {
    std::vector<double> gaps = t.trajectory.f_gaps();
    gaps.resize(grid.size(), kInfinity);
    series.push_back(std::move(gaps));
  }
  std::vector<double> levels{0.5, 0.9, 1.0 - config.beta};
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  result.stats = ensemble_quantiles(series, levels, grid);

  json prov;
  prov["version"] = kVersion;
  prov["config"] = config_to_json(config);
  // Worker count never changes the numbers; keep it out so provenance compares equal.
  prov["config"].erase("workers");
  prov["problem"] = problem.description;
  prov["x0"] = std::vector<double>(problem.x0.data(), problem.x0.data() + problem.x0.size());
  if (schedule.sgd) prov["schedule"] = to_json(*schedule.sgd);
  if (schedule.sstm) prov["schedule"] = to_json(*schedule.sstm);
  if (schedule.plan) prov["schedule"] = to_json(*schedule.plan);
  prov["iterations"] = schedule.N;
  prov["seeds"] = {{"base_seed", config.seed},
                   {"trial_stream", "RngStream(base_seed, trial)"},
                   {"iteration_stream", "child(k)"},
                   {"restart_stream", "child(t)"}};
  json trials = json::array();
  for (const auto& t : result.trials) {
    json jt = {{"trial", t.trial},
               {"seed", config.seed},
               {"stream", t.trial},
               {"file", trial_file_name(t.trial)},
               {"final_gap", num(t.final_gap)},
               {"oracle_calls", t.oracle_calls},
               {"clip_activations", t.trajectory.clip_activations},
               {"aborted", t.aborted}};
    if (t.aborted) {
      jt["abort_step"] = t.trajectory.abort_step;
      jt["abort_reason"] = t.trajectory.abort_reason;
    }
    if (!t.restarts.empty()) {
      json rs = json::array();
      for (const auto& r : t.restarts) rs.push_back(to_json(r));
      jt["restarts"] = rs;
    }
    trials.push_back(jt);
  }
  prov["trials"] = trials;
  prov["quantile_levels"] = levels;
  result.provenance = prov;

  if (!dir.empty()) {
    std::ostringstream q;
    write_quantiles_csv(result.stats, q);
    write_text(dir / "quantiles.csv", q.str());
    write_text(dir / "provenance.json", prov.dump(2) + "\n");

    std::vector<double> ks(grid.begin(), grid.end());
    std::vector<double> calls;
    for (const auto& t : result.trials) {
      if (t.trajectory.records.size() == grid.size()) {
        for (const auto& r : t.trajectory.records) calls.push_back(static_cast<double>(r.calls));
        break;
      }
    }
    const std::string title = to_string(config.method) + " on " + config.problem.type;
    for (int by_calls = 0; by_calls < 2; ++by_calls) {
      const std::vector<double>& xs = by_calls ? calls : ks;
      std::vector<PlotSeries> lines;
      const std::size_t shown = std::min<std::size_t>(result.trials.size(), 10);
      for (std::size_t i = 0; i < shown; ++i) {
        lines.push_back({"trial " + std::to_string(i), xs, series[i], "#bbbbbb"});
      }
      for (std::size_t i = 0; i < levels.size(); ++i) {
        std::ostringstream name;
        name << "q" << levels[i];
        lines.push_back({name.str(), xs, result.stats.curves[i], ""});
      }
      std::ostringstream svg;
      write_line_plot_svg(svg, title, by_calls ? "oracle calls" : "iteration", "f(x) - f*", lines, true);
      write_text(dir / (by_calls ? "convergence_calls.svg" : "convergence_iterations.svg"), svg.str());
    }
  }
  return result;
}

ReferenceSolution solve_and_cache(const std::string& dataset, double tol, const std::string& out_path) {
  const LogisticRegressionProblem problem = make_logreg(load_libsvm(dataset));
  ReferenceSolution ref = solve_reference(problem, tol);
  save_reference(ref, out_path.empty() ? default_cache_path(dataset) : std::filesystem::path(out_path));
  return ref;
}

DiagnosticResult run_diagnostic(const DiagnosticOptions& o) {
  if (o.dataset.empty()) throw InvalidArgument("dataset path required");
  LogisticRegressionProblem problem = make_logreg(load_libsvm(o.dataset));
  const std::filesystem::path cache =
      o.optimum_path.empty() ? default_cache_path(o.dataset) : std::filesystem::path(o.optimum_path);
  DiagnosticResult out;
  ReferenceSolution ref;
  if (std::filesystem::exists(cache)) {
    ref = load_reference(cache);
    if (static_cast<std::size_t>(ref.x.size()) != problem.dimension()) {
      throw InvalidArgument("cached optimum has the wrong dimension: " + cache.string());
    }
  } else if (o.solve) {
    ref = solve_reference(problem, o.tol);
    save_reference(ref, cache);
    out.solved = true;
  } else {
    throw InvalidArgument("no cached optimum at " + cache.string() + " (pass --solve)");
  }
  out.histogram = gradient_norm_histogram(problem, ref.x, o.bins);
  const std::vector<double> norms = problem.component_gradient_norms(ref.x);
  out.score = subgaussian_diagnostic(norms);
  out.ks_normal = ks_statistic_normal_fit(norms);
  out.report = {{"dataset", o.dataset},
                {"rows", problem.rows()},
                {"n", problem.dimension()},
                {"optimum_cache", cache.string()},
                {"optimum_grad_norm", ref.grad_norm},
                {"f_star", ref.f_star},
                {"solved_now", out.solved},
                {"score", out.score.ratio},
                {"threshold", kLightTailThreshold},
                {"classification", out.score.light ? "light" : "heavy"},
                {"capped_summands", out.score.capped},
                {"mean", out.score.mean},
                {"variance", out.score.variance},
                {"ks_normal_fit", out.ks_normal},
                {"max_norm", *std::max_element(norms.begin(), norms.end())},
                {"version", kVersion}};
  if (!o.output_dir.empty()) {
    const std::filesystem::path dir(o.output_dir);
    std::filesystem::create_directories(dir);
    std::ostringstream csv, svg;
    write_histogram_csv(out.histogram, csv);
    write_histogram_svg(svg, std::filesystem::path(o.dataset).filename().string() + ": ||grad f_i(x*)||", out.histogram);
    write_text(dir / "histogram.csv", csv.str());
    write_text(dir / "histogram.svg", svg.str());
    write_text(dir / "score.json", out.report.dump(2) + "\n");
  }
  return out;
}

}  // namespace heavyclip
