#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mlbm/errors.hpp"
#include "mlbm/graph.hpp"
#include "mlbm/inference.hpp"
#include "mlbm/ingest.hpp"
#include "mlbm/metrics.hpp"
#include "mlbm/model.hpp"
#include "mlbm/selection.hpp"
#include "mlbm/serialize.hpp"
#include "mlbm/summary.hpp"

namespace py = pybind11;
using namespace mlbm;

namespace {

std::vector<std::pair<int, int>> cell_keys(const SelectionReport& r) {
  std::vector<std::pair<int, int>> keys;
  for (const auto& [cell, rec] : r.cells) keys.push_back(cell);
  return keys;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multilayer latent block model biclustering (C++ core)";

  const auto base = py::register_exception<Error>(m, "Error", PyExc_ValueError);
  py::register_exception<InvalidInput>(m, "InvalidInput", base.ptr());
  py::register_exception<InvalidParameter>(m, "InvalidParameter", base.ptr());
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", base.ptr());
  py::register_exception<CannotFit>(m, "CannotFit", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

  py::enum_<Side>(m, "Side").value("Top", Side::Top).value("Bottom", Side::Bottom);
  py::enum_<Weighting>(m, "Weighting").value("Binary", Weighting::Binary).value("Counts", Weighting::Counts);

  py::class_<GraphStats>(m, "GraphStats")
      .def_readonly("I", &GraphStats::I)
      .def_readonly("J", &GraphStats::J)
      .def_readonly("L", &GraphStats::L)
      .def_readonly("M", &GraphStats::M)
      .def_readonly("N", &GraphStats::N)
      .def("as_tuple", [](const GraphStats& s) { return py::make_tuple(s.I, s.J, s.L, s.M, s.N); })
      .def("__repr__", [](const GraphStats& s) {
        return "GraphStats(I=" + std::to_string(s.I) + ", J=" + std::to_string(s.J) + ", L=" + std::to_string(s.L) +
               ", M=" + std::to_string(s.M) + ", N=" + std::to_string(s.N) + ")";
      });

  py::class_<MultiplexBipartiteGraph>(m, "Graph")
      .def(py::init<>())
      .def("add_event", &MultiplexBipartiteGraph::add_event, py::arg("top"), py::arg("bottom"), py::arg("layer"))
      .def("add_events", &MultiplexBipartiteGraph::add_events, py::arg("top"), py::arg("bottom"), py::arg("layer"),
           py::arg("count"))
      .def("stats", &MultiplexBipartiteGraph::stats)
      .def_property_readonly("top_names", [](const MultiplexBipartiteGraph& g) { return g.top().names(); })
      .def_property_readonly("bottom_names", [](const MultiplexBipartiteGraph& g) { return g.bottom().names(); })
      .def_property_readonly("layer_labels", [](const MultiplexBipartiteGraph& g) { return g.layers().names(); })
      .def("edges",
           [](const MultiplexBipartiteGraph& g) {
             std::vector<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t, std::uint64_t>> out;
             for (const auto& e : g.edges()) out.emplace_back(e.top, e.bottom, e.layer, e.count);
             return out;
           })
      .def("save", [](const MultiplexBipartiteGraph& g, const std::filesystem::path& p) { save_graph(p, g); })
      .def_static("load", &load_graph);

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init<>())
      .def(py::init([](Eigen::VectorXd pi, Eigen::VectorXd rho, Eigen::VectorXd mu, Eigen::VectorXd nu,
                       std::vector<Eigen::MatrixXd> theta) {
             ModelParams p{std::move(pi), std::move(rho), std::move(mu), std::move(nu), std::move(theta)};
             p.validate();
             return p;
           }),
           py::arg("pi"), py::arg("rho"), py::arg("mu"), py::arg("nu"), py::arg("theta"))
      .def_readwrite("pi", &ModelParams::pi)
      .def_readwrite("rho", &ModelParams::rho)
      .def_readwrite("mu", &ModelParams::mu)
      .def_readwrite("nu", &ModelParams::nu)
      .def_readwrite("theta", &ModelParams::theta)
      .def("validate", &ModelParams::validate);

  py::class_<HardPartition>(m, "HardPartition")
      .def(py::init([](Side side, int clusters, std::vector<int> assignment) {
             HardPartition p{side, clusters, std::move(assignment)};
             p.validate();
             return p;
           }),
           py::arg("side"), py::arg("clusters"), py::arg("assignment"))
      .def_readonly("side", &HardPartition::side)
      .def_readonly("clusters", &HardPartition::clusters)
      .def_readonly("assignment", &HardPartition::assignment)
      .def("sizes", &HardPartition::sizes);

  py::class_<SoftAssignments>(m, "SoftAssignments")
      .def(py::init<RowMatrix, RowMatrix>(), py::arg("U"), py::arg("V"))
      .def_readwrite("U", &SoftAssignments::U)
      .def_readwrite("V", &SoftAssignments::V);

  py::class_<SampledGraph>(m, "SampledGraph")
      .def_readonly("graph", &SampledGraph::graph)
      .def_readonly("top", &SampledGraph::top)
      .def_readonly("bottom", &SampledGraph::bottom);

  m.def("sample", [](const ModelParams& p, std::uint64_t seed) { return sample(p, seed); }, py::arg("params"),
        py::arg("seed"));
  m.def("complete_log_likelihood",
        py::overload_cast<const ModelParams&, const HardPartition&, const HardPartition&,
                          const MultiplexBipartiteGraph&, Weighting>(&complete_log_likelihood),
        py::arg("params"), py::arg("top"), py::arg("bottom"), py::arg("graph"),
        py::arg("weighting") = Weighting::Binary);
  m.def("fuzzy_criterion",
        py::overload_cast<const ModelParams&, const SoftAssignments&, const MultiplexBipartiteGraph&, Weighting>(
            &fuzzy_criterion),
        py::arg("params"), py::arg("soft"), py::arg("graph"), py::arg("weighting") = Weighting::Binary);

  py::class_<FitConfig>(m, "FitConfig")
      .def(py::init([](int H, int K, double epsilon, int max_iterations, int restarts, std::uint64_t seed,
                       Weighting weighting, unsigned workers) {
             FitConfig c{H, K, epsilon, max_iterations, restarts, seed, weighting, workers};
             c.validate();
             return c;
           }),
           py::arg("H"), py::arg("K"), py::arg("epsilon") = 1e-6, py::arg("max_iterations") = 500,
           py::arg("restarts") = 50, py::arg("seed") = 0, py::arg("weighting") = Weighting::Binary,
           py::arg("workers") = 1)
      .def_readwrite("H", &FitConfig::H)
      .def_readwrite("K", &FitConfig::K)
      .def_readwrite("epsilon", &FitConfig::epsilon)
      .def_readwrite("max_iterations", &FitConfig::max_iterations)
      .def_readwrite("restarts", &FitConfig::restarts)
      .def_readwrite("seed", &FitConfig::seed)
      .def_readwrite("weighting", &FitConfig::weighting)
      .def_readwrite("workers", &FitConfig::workers);

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("params", &FitResult::params)
      .def_readonly("top", &FitResult::top)
      .def_readonly("bottom", &FitResult::bottom)
      .def_readonly("soft", &FitResult::soft)
      .def_readonly("criterion_trajectory", &FitResult::criterion_trajectory)
      .def_readonly("final_L_C", &FitResult::final_L_C)
      .def_readonly("iterations", &FitResult::iterations)
      .def_readonly("restart_index", &FitResult::restart_index)
      .def_readonly("converged", &FitResult::converged)
      .def("to_json", [](const FitResult& f, const MultiplexBipartiteGraph& g) { return dump_json(fit_to_json(f, g)); });

  m.def("init_degree_factors",
        [](const MultiplexBipartiteGraph& g, Weighting w) {
          auto f = init_degree_factors(g, w);
          return py::make_tuple(f.mu, f.nu);
        },
        py::arg("graph"), py::arg("weighting") = Weighting::Binary);
  m.def("fit", py::overload_cast<const MultiplexBipartiteGraph&, const FitConfig&>(&fit), py::arg("graph"),
        py::arg("config"), py::call_guard<py::gil_scoped_release>());
  m.def("fit_multi_restart", py::overload_cast<const MultiplexBipartiteGraph&, const FitConfig&>(&fit_multi_restart),
        py::arg("graph"), py::arg("config"), py::call_guard<py::gil_scoped_release>());
  m.def("icl", py::overload_cast<const FitResult&, const MultiplexBipartiteGraph&, int, int>(&icl), py::arg("fit"),
        py::arg("graph"), py::arg("H"), py::arg("K"));

  py::class_<CellRecord>(m, "CellRecord")
      .def_readonly("icl", &CellRecord::icl)
      .def_readonly("L_C", &CellRecord::L_C)
      .def_readonly("converged", &CellRecord::converged)
      .def_readonly("seconds", &CellRecord::seconds);

  py::class_<SelectionReport>(m, "SelectionReport")
      .def_readonly("cells", &SelectionReport::cells)
      .def_readonly("failures", &SelectionReport::failures)
      .def_readonly("best", &SelectionReport::best)
      .def_readonly("best_fit", &SelectionReport::best_fit)
      .def("cell_keys", &cell_keys);

  m.def(
      "grid_search",
      [](const MultiplexBipartiteGraph& g, std::vector<int> H_values, std::vector<int> K_values, const FitConfig& c,
         unsigned workers) {
        return grid_search(g, GridSpec{std::move(H_values), std::move(K_values), c}, GridOptions{workers, {}, false});
      },
      py::arg("graph"), py::arg("H_values"), py::arg("K_values"), py::arg("config"), py::arg("workers") = 1,
      py::call_guard<py::gil_scoped_release>());

  py::class_<IngestCounters>(m, "IngestCounters")
      .def_readonly("records_read", &IngestCounters::records_read)
      .def_readonly("records_skipped", &IngestCounters::records_skipped)
      .def_readonly("records_filtered", &IngestCounters::records_filtered)
      .def_readonly("edges_created", &IngestCounters::edges_created);

  m.def(
      "ingest_files",
      [](const std::vector<std::filesystem::path>& inputs, const std::string& preset,
         const std::vector<std::string>& internal_hosts) {
        auto spec = IngestSpec::preset(preset);
        if (!internal_hosts.empty()) spec.internal_hosts = internal_hosts;
        auto result = ingest_files(inputs, spec);
        return py::make_tuple(std::move(result.graph), result.counters);
      },
      py::arg("inputs"), py::arg("preset"), py::arg("internal_hosts") = std::vector<std::string>{});

  m.def(
      "summarize",
      [](const MultiplexBipartiteGraph& g, const FitResult& f, std::uint64_t min_events, double min_rate,
         std::size_t top_pairs) {
        auto s = filter_by_rate(filter_by_events(aggregate(g, f, {5, top_pairs}), min_events), min_rate);
        return py::make_tuple(to_dot(s), dump_json(summary_to_json(s)));
      },
      py::arg("graph"), py::arg("fit"), py::arg("min_events") = 0, py::arg("min_rate") = 0.0,
      py::arg("top_pairs") = 10);

  m.def("adjusted_rand_index",
        [](const std::vector<int>& a, const std::vector<int>& b) { return adjusted_rand_index(a, b); });
}
