#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "deepteam/checks.hpp"
#include "deepteam/errors.hpp"
#include "deepteam/model_io.hpp"
#include "deepteam/oracle.hpp"
#include "deepteam/schedule_io.hpp"
#include "deepteam/sim.hpp"

namespace py = pybind11;
using namespace deepteam;

namespace {

StrategyKind strategy_arg(const std::string& spec, const TeamModel& model) {
  return parse_strategy(spec, model.dims);
}

py::dict schedules_dict(const TeamSolution& s) {
  py::dict d;
  d["P"] = s.riccati.P;
  d["P_deep"] = s.riccati.P_deep;
  d["theta"] = s.riccati.theta;
  d["theta_deep"] = s.riccati.theta_deep;
  d["Sigma_pred"] = s.filters.local.Sigma_pred;
  d["Sigma_post"] = s.filters.local.Sigma_post;
  d["L"] = s.filters.local.gain;
  d["Sigma_bar_pred"] = s.filters.global.Sigma_pred;
  d["Sigma_bar_post"] = s.filters.global.Sigma_post;
  d["L_bar"] = s.filters.global.gain;
  d["meanfield"] = s.meanfield;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Deep structured LQG teams: filters, gains, oracle and simulation";
  m.attr("__version__") = DEEPTEAM_VERSION;

  py::register_exception<ModelError>(m, "ModelError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<TeamModel>(m, "TeamModel")
      .def_property_readonly("n", &TeamModel::n)
      .def_property_readonly("T", &TeamModel::T)
      .def_property_readonly("alpha", [](const TeamModel& t) { return t.influence.alpha; })
      .def_property_readonly("dims",
                             [](const TeamModel& t) {
                               const Dimensions& d = t.dims;
                               return py::dict(py::arg("n") = d.n, py::arg("T") = d.T, py::arg("dx") = d.dx,
                                               py::arg("du") = d.du, py::arg("dy") = d.dy,
                                               py::arg("dw") = d.dw, py::arg("dv") = d.dv);
                             })
      .def("to_json", [](const TeamModel& t) { return model_to_json(t).dump(); })
      .def("with_population", &with_population, py::arg("n"));

  m.def("load_model", &load_model, py::arg("path"));
  m.def("model_from_json", [](const std::string& text) { return model_from_json(json::parse(text)); },
        py::arg("text"));
  m.def("reference_model_s1", &reference_model_s1, py::arg("T") = 2);
  m.def("reference_model_s2", &reference_model_s2, py::arg("T") = 2);
  m.def("validate", [](const TeamModel& t) { return validate(t).violations; }, py::arg("model"));
  m.def("normalize_influence", [](const Vector& raw) { return normalize_influence(raw).alpha; },
        py::arg("raw"));

  m.def("solve", [](const TeamModel& t) { return schedules_dict(solve_team(t)); }, py::arg("model"),
        "Riccati gains, filter schedules and the mean-field trajectory, each a list over t = 1..T");
  m.def("schedules_json", [](const TeamModel& t) { return solution_to_json(solve_team(t)).dump(); },
        py::arg("model"));

  m.def(
      "exact_cost",
      [](const TeamModel& t, const std::string& strategy, int cap) {
        const TeamSolution s = solve_team(t);
        return exact_cost(t, s, strategy_arg(strategy, t), cap);
      },
      py::arg("model"), py::arg("strategy") = "optimal", py::arg("cap") = kDefaultOracleCap);

  m.def(
      "simulate",
      [](const TeamModel& t, const std::string& strategy, std::uint64_t seed, int rollouts, int workers) {
        const TeamSolution s = solve_team(t);
        RolloutConfig cfg;
        cfg.seed = seed;
        cfg.num_rollouts = rollouts;
        cfg.strategy = strategy_arg(strategy, t);
        cfg.workers = workers;
        std::vector<Trace> traces;
        {
          py::gil_scoped_release release;
          traces = RolloutEngine(t, s).run(cfg);
        }
        Vector costs(static_cast<Eigen::Index>(traces.size()));
        for (std::size_t k = 0; k < traces.size(); ++k) costs(static_cast<Eigen::Index>(k)) = traces[k].total_cost;
        const CostEstimate est = evaluate_cost(traces);
        return py::dict(py::arg("costs") = costs, py::arg("mean") = est.mean,
                        py::arg("standard_error") = est.standard_error);
      },
      py::arg("model"), py::arg("strategy") = "optimal", py::arg("seed") = 0, py::arg("rollouts") = 1000,
      py::arg("workers") = 1);

  m.def(
      "convergence",
      [](const TeamModel& family, const std::vector<int>& n_list, int rollouts, std::uint64_t seed, int workers) {
        RolloutConfig cfg;
        cfg.seed = seed;
        cfg.num_rollouts = rollouts;
        cfg.workers = workers;
        ConvergenceTable table;
        {
          py::gil_scoped_release release;
          table = convergence_experiment(family, n_list, cfg);
        }
        py::list rows;
        for (const auto& r : table.rows)
          rows.append(py::dict(py::arg("n") = r.n, py::arg("max_sigma_bar") = r.max_sigma_bar,
                               py::arg("ms_correction") = r.ms_correction, py::arg("cost_gap") = r.cost_gap,
                               py::arg("cost_gap_se") = r.cost_gap_se));
        return py::dict(py::arg("rows") = rows, py::arg("slope_max_sigma_bar") = table.slope_max_sigma_bar,
                        py::arg("slope_ms_correction") = table.slope_ms_correction,
                        py::arg("slope_cost_gap") = table.slope_cost_gap);
      },
      py::arg("family"), py::arg("n_list"), py::arg("rollouts") = 1000, py::arg("seed") = 0,
      py::arg("workers") = 1);

  m.def(
      "brute_force",
      [](const TeamModel& t, int starts, std::uint64_t seed) {
        const TeamSolution s = solve_team(t);
        BruteForceOptions o;
        o.starts = starts;
        o.seed = seed;
        const BruteForceResult r = brute_force_optimize(t, s, custom_linear_class(t.dims), o);
        return py::dict(py::arg("cost") = r.best_cost, py::arg("parameters") = r.best_parameters,
                        py::arg("excluded_starts") = r.excluded_starts);
      },
      py::arg("model"), py::arg("starts") = 16, py::arg("seed") = 1);
}
