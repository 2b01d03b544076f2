#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "mseg/embedding.hpp"
#include "mseg/error.hpp"
#include "mseg/eval_metrics.hpp"
#include "mseg/grouping.hpp"
#include "mseg/pipeline.hpp"
#include "mseg/rule_synth.hpp"
#include "mseg/synth_gen.hpp"

namespace py = pybind11;
using namespace mseg;

namespace {

PipelineConfig make_config(const py::dict& settings) {
  PipelineConfig c;
  for (const auto& [key, value] : settings) {
    apply_setting(c, py::str(key).cast<std::string>(), py::str(value).cast<std::string>());
  }
  return c;
}

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["dataset"] = r.dataset;
  d["asset_qty"] = r.asset_qty;
  d["group_qty"] = r.true_group_qty;
  d["suggested_group_qty"] = r.suggested_group_qty;
  d["runtime_s"] = r.run_time_seconds;
  d["homogeneity"] = r.homogeneity;
  d["completeness"] = r.completeness;
  d["v_measure"] = r.v_measure;
  return d;
}

std::map<std::string, std::size_t> groups_dict(const SecurityGroups& groups) {
  std::map<std::string, std::size_t> out;
  for (const auto& [ep, g] : groups.membership()) out[ep.str()] = g;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Flow-log micro-segmentation: grouping, rules and scoring";

  auto base = py::register_exception<Error>(m, "MsegError", PyExc_RuntimeError);
  py::register_exception<UsageError>(m, "UsageError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<InternalError>(m, "InternalError", base.ptr());

  m.def(
      "scores",
      [](const std::vector<std::int64_t>& truth, const std::vector<std::int64_t>& pred) {
        auto table = contingency(truth, pred);
        double h = homogeneity(table), c = completeness(table);
        return py::make_tuple(h, c, v_measure(h, c));
      },
      "Homogeneity, completeness and V-measure of a predicted labeling.", py::arg("truth"), py::arg("pred"));

  py::class_<PcaModel>(m, "PcaModel")
      .def_readonly("mean", &PcaModel::mean)
      .def_readonly("components", &PcaModel::components)
      .def_readonly("eigenvalues", &PcaModel::eigenvalues)
      .def_readonly("total_variance", &PcaModel::total_variance)
      .def_property_readonly("retained_dim", &PcaModel::retained_dim)
      .def("project", [](const PcaModel& model, const Eigen::MatrixXd& rows) { return project_rows(model, rows); })
      .def("back_project", [](const PcaModel& model, const Eigen::MatrixXd& p) { return back_project(model, p); })
      .def("explained_variance", [](const PcaModel& model) { return explained_variance(model); });

  m.def(
      "fit_pca",
      [](const Eigen::MatrixXd& data, std::optional<double> variance, std::optional<std::size_t> dim) {
        if (variance && dim) throw UsageError("embedding", "give either variance or dim, not both");
        if (dim) return fit_pca(data, FixedDim{*dim});
        return fit_pca(data, VarianceFraction{variance.value_or(0.95)});
      },
      "Principal components of the rows of `data`.", py::arg("data"), py::arg("variance") = py::none(),
      py::arg("dim") = py::none());

  py::class_<ClusterModel>(m, "ClusterModel")
      .def_readonly("centroids", &ClusterModel::centroids)
      .def_readonly("k", &ClusterModel::k)
      .def_readonly("inertia", &ClusterModel::inertia)
      .def_readonly("iterations_run", &ClusterModel::iterations_run)
      .def_readonly("best_restart", &ClusterModel::best_restart)
      .def_readonly("inertia_history", &ClusterModel::inertia_history);

  m.def(
      "kmeans_fit",
      [](const Eigen::MatrixXd& samples, std::size_t k, std::uint64_t seed, int restarts, double tol, int max_iter,
         bool refine, std::size_t workers) {
        KMeansOptions o;
        o.k = k;
        o.seed = seed;
        o.restarts = restarts;
        o.tol = tol;
        o.max_iter = max_iter;
        o.refine = refine;
        o.workers = workers;
        py::gil_scoped_release release;
        return kmeans_fit(samples, o);
      },
      py::arg("samples"), py::arg("k"), py::arg("seed") = 0, py::arg("restarts") = 4, py::arg("tol") = 1e-6,
      py::arg("max_iter") = 300, py::arg("refine") = true, py::arg("workers") = 1);

  m.def("nearest_centroids", &nearest_centroids, py::arg("samples"), py::arg("centroids"));

  m.def(
      "config_text", [](const py::dict& settings) { return config_to_text(make_config(settings)); },
      "Canonical config text after applying `settings` over the defaults.", py::arg("settings"));

  m.def(
      "synth",
      [](const py::dict& settings) {
        auto s = run_synth(make_config(settings));
        return py::make_tuple(s.flows.size(), s.truth.size(), s.noise_flows, s.unknown_flows);
      },
      "Writes a synthetic scenario; returns (flows, endpoints, noise flows, unknown flows).", py::arg("settings"));

  m.def(
      "group",
      [](const py::dict& settings) {
        auto c = make_config(settings);
        GroupingRun run;
        {
          py::gil_scoped_release release;
          run = run_group(c);
        }
        py::dict d;
        d["groups"] = groups_dict(run.groups);
        d["suggested_group_qty"] = run.groups.suggested_qty();
        d["k"] = run.model.k;
        d["retained_dim"] = run.pca.retained_dim();
        d["inertia"] = run.model.inertia;
        d["runtime_s"] = run.runtime_seconds;
        return d;
      },
      "Runs the grouping stage and writes its artifacts.", py::arg("settings"));

  m.def(
      "rules",
      [](const py::dict& settings) {
        auto r = run_rules(make_config(settings));
        std::ostringstream csv;
        write_ruleset(csv, r.ruleset);
        py::dict d;
        d["ruleset_csv"] = csv.str();
        d["rule_count"] = r.ruleset.rules.size();
        d["hygiene_flags"] = r.hygiene.flag_count();
        d["flows_checked"] = r.flows_checked;
        d["flows_allowed"] = r.flows_allowed;
        return d;
      },
      "Synthesizes group-level rules from stored grouping artifacts.", py::arg("settings"));

  m.def(
      "evaluate", [](const py::dict& settings) { return report_dict(run_eval(make_config(settings))); },
      "Scores stored groups against the ground truth file.", py::arg("settings"));

  m.def(
      "tune",
      [](const py::dict& settings) {
        auto t = run_tune(make_config(settings));
        py::list reports;
        for (const auto& r : t.outcome.reports) reports.append(report_dict(r));
        py::dict d;
        d["best_index"] = t.outcome.best_index;
        d["below_floor"] = t.outcome.below_floor;
        d["reports"] = reports;
        d["best_config"] = config_to_text(t.best, false);
        return d;
      },
      "Evaluates every grid entry and picks the winner.", py::arg("settings"));
}
