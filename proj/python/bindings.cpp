// Python bindings. JSON-shaped results cross the boundary as strings and are
// decoded by the package's __init__.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "heavyclip/acceptance.hpp"
#include "heavyclip/clipping.hpp"
#include "heavyclip/diagnostics.hpp"
#include "heavyclip/experiment.hpp"
#include "heavyclip/noise.hpp"
#include "heavyclip/schedules.hpp"

namespace py = pybind11;
using namespace heavyclip;
using nlohmann::json;

namespace {

json outcome_json(const TrialOutcome& t) {
  json recs = json::array();
  for (const auto& r : t.trajectory.records) {
    recs.push_back({r.k, r.f_gap, r.dist, r.calls, r.lambda, r.clipped, r.m});
  }
  return {{"trial", t.trial},
          {"final_gap", t.final_gap},
          {"oracle_calls", t.oracle_calls},
          {"aborted", t.aborted},
          {"records", recs}};
}

std::string run_experiment_json(const std::string& config) {
  const ExperimentResult r = run_experiment(config_from_json(json::parse(config)));
  json trials = json::array();
  for (const auto& t : r.trials) trials.push_back(outcome_json(t));
  return json{{"trials", trials},
              {"quantiles", {{"levels", r.stats.levels}, {"checkpoints", r.stats.checkpoints}, {"curves", r.stats.curves}}},
              {"provenance", r.provenance}}
      .dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string resolve_json(const std::string& config) {
  const ExperimentConfig c = config_from_json(json::parse(config));
  const ResolvedProblem p = resolve_problem(c);
  const ResolvedSchedule s = resolve_schedule(c, p);
  json j = s.sgd ? to_json(*s.sgd) : s.sstm ? to_json(*s.sstm) : to_json(*s.plan);
  j["iterations"] = s.N;
  return j.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Clipped stochastic methods for heavy-tailed noise";
  m.attr("__version__") = kVersion;

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);

  m.def("clip", &clip, py::arg("g"), py::arg("lam"), "min(1, lam/||g||) * g");
  m.def(
      "sample_noise",
      [](const std::string& family, std::size_t n, std::uint64_t seed, std::uint64_t stream) {
        RngStream rng(seed, stream);
        return NoiseModel::from_name(family).sample(n, rng);
      },
      py::arg("family"), py::arg("n"), py::arg("seed") = 0, py::arg("stream") = 0);
  m.def(
      "noise_tail",
      [](const std::string& family, double t) { return NoiseModel::from_name(family).tail_probability(t); },
      py::arg("family"), py::arg("t"), "P(|X| > t) for one standardized coordinate");
  m.def(
      "clipped_bounds",
      [](double sigma2, double lam, std::uint64_t batch) {
        const auto b = clipped_estimator_bounds(sigma2, lam, batch);
        return py::dict(py::arg("magnitude") = b.magnitude, py::arg("bias") = b.bias,
                        py::arg("distortion") = b.distortion, py::arg("variance") = b.variance);
      },
      py::arg("sigma2"), py::arg("lam"), py::arg("m"));
  m.def(
      "sstm_alpha",
      [](std::uint64_t k, double a, double L) {
        const auto p = sstm_alpha(k, a, L);
        return py::make_tuple(p.alpha, p.A);
      },
      py::arg("k"), py::arg("a"), py::arg("L"));
  m.def("_resolve_schedule", &resolve_json, py::arg("config_json"));
  m.def("_run_experiment", &run_experiment_json, py::arg("config_json"),
        py::call_guard<py::gil_scoped_release>());

  m.def(
      "subgaussian_score",
      [](const std::vector<double>& v) {
        const auto s = subgaussian_diagnostic(v);
        return py::dict(py::arg("ratio") = s.ratio, py::arg("mean") = s.mean, py::arg("variance") = s.variance,
                        py::arg("capped") = s.capped, py::arg("light") = s.light);
      },
      py::arg("samples"));
  m.def("ks_normal_fit", &ks_statistic_normal_fit, py::arg("samples"));
  m.def("oscillation_metric", &oscillation_metric, py::arg("f_gaps"), py::arg("tail_fraction") = 0.25);
  m.def("quantile", &quantile, py::arg("values"), py::arg("level"));

  m.def(
      "_solve_reference",
      [](const std::string& dataset, double tol, const std::string& out) {
        const ReferenceSolution r = solve_and_cache(dataset, tol, out);
        return py::dict(py::arg("x") = r.x, py::arg("f_star") = r.f_star, py::arg("grad_norm") = r.grad_norm,
                        py::arg("converged") = r.converged, py::arg("iterations") = r.iterations,
                        py::arg("stop_reason") = r.stop_reason);
      },
      py::arg("dataset"), py::arg("tol") = 1e-8, py::arg("out") = "");
  m.def(
      "_diagnose",
      [](const std::string& dataset, const std::string& optimum, bool solve, std::size_t bins,
         const std::string& out) {
        DiagnosticOptions o;
        o.dataset = dataset;
        o.optimum_path = optimum;
        o.solve = solve;
        o.bins = bins;
        o.output_dir = out;
        return run_diagnostic(o).report.dump();
      },
      py::arg("dataset"), py::arg("optimum") = "", py::arg("solve") = false, py::arg("bins") = 50,
      py::arg("output_dir") = "");
  m.def(
      "_verify",
      [](int id, const std::string& data_dir) {
        VerifyOptions o;
        o.data_dir = data_dir;
        return to_json(run_criterion(id, o)).dump();
      },
      py::arg("criterion"), py::arg("data_dir") = "", py::call_guard<py::gil_scoped_release>());
}
