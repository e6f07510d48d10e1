#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "dsmplan/cli.hpp"
#include "dsmplan/clustering.hpp"
#include "dsmplan/error.hpp"
#include "dsmplan/ingest.hpp"
#include "dsmplan/planning.hpp"
#include "dsmplan/report.hpp"
#include "dsmplan/sequencing.hpp"
#include "dsmplan/simulator.hpp"
#include "dsmplan/tokenization.hpp"

namespace py = pybind11;
using namespace dsmplan;

namespace {

// Structured results cross the boundary as JSON text; the Python side decodes them.
TokenCountProvider provider_for(const std::string& tokens) {
  if (tokens == "approx") return TokenCountProvider::approximate();
  if (tokens.starts_with("table:")) return TokenCountProvider::from_table_file(tokens.substr(6));
  throw Error(ErrorCode::InvalidParameter, tokens, "tokens must be 'approx' or 'table:PATH'");
}

std::string manifest_dsm_csv(const std::string& path, const std::string& tokens, bool binary) {
  const auto m = build_dsm(parse_manifest(path, provider_for(tokens)).elements);
  return to_csv(binary ? to_binary(m) : m);
}

std::string sequence_json(const std::string& csv) {
  const auto m = parse_dsm_csv_text(csv);
  return report::sequencing_to_json(m, sequence(m)).dump();
}

std::vector<std::vector<bool>> reachability_matrix(const std::string& csv) {
  const auto r = reachability(parse_dsm_csv_text(csv));
  std::vector<std::vector<bool>> out(r.size(), std::vector<bool>(r.size()));
  for (std::size_t i = 0; i < r.size(); ++i) {
    for (std::size_t j = 0; j < r.size(); ++j) out[i][j] = r(i, j);
  }
  return out;
}

ClusterParams params_of(double alpha, double beta, std::uint64_t seed, unsigned restarts) {
  ClusterParams p;
  p.alpha = alpha;
  p.beta = beta;
  p.seed = seed;
  p.restarts = restarts;
  return p;
}

std::string cluster_json(const std::string& csv, double alpha, double beta, std::uint64_t seed, unsigned restarts,
                         bool exhaustive) {
  const auto m = parse_dsm_csv_text(csv);
  report::ClusterSummary s;
  s.params = params_of(alpha, beta, seed, restarts);
  s.assignment = exhaustive ? brute_force_cluster(m, s.params) : cluster(m, s.params);
  s.j_singletons = cost_J(m, ClusterAssignment::singletons(m.size()), s.params);
  s.j_one_cluster = cost_J(m, ClusterAssignment::single_cluster(m.size()), s.params);
  return report::cluster_to_json(m, s).dump();
}

double cost(const std::string& csv, const std::vector<std::vector<std::string>>& groups, double alpha, double beta) {
  const auto m = parse_dsm_csv_text(csv);
  return cost_J(m, ClusterAssignment::from_groups(m, groups), params_of(alpha, beta, 42, 1));
}

std::string budget_json(const std::string& plan_json) {
  const auto plan = parse_plan_fixture(plan_json, default_model_catalog());
  return report::plan_to_json(plan, budget_report(plan)).dump();
}

py::tuple run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code;
  {
    py::gil_scoped_release release;
    code = run_cli(args, out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_dsmplan, m) {
  static PyObject* error_type = PyErr_NewException("dsmplan._dsmplan.DsmplanError", PyExc_ValueError, nullptr);
  m.attr("DsmplanError") = py::handle(error_type);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::gil_scoped_acquire gil;
      py::object value = py::handle(error_type)(e.what());
      value.attr("code") = std::string(to_string(e.code()));
      value.attr("subject") = e.subject();
      PyErr_SetObject(error_type, value.ptr());
    }
  });

  m.def("count_tokens_approx", [](const std::string& text) { return count_tokens_approx(text); });
  m.def("manifest_dsm_csv", &manifest_dsm_csv, py::arg("path"), py::arg("tokens") = "approx",
        py::arg("binary") = false);
  m.def("sequence_json", &sequence_json, py::arg("csv"));
  m.def("reachability", &reachability_matrix, py::arg("csv"));
  m.def("cluster_json", &cluster_json, py::arg("csv"), py::arg("alpha") = 2.0, py::arg("beta") = 1.0,
        py::arg("seed") = 42, py::arg("restarts") = 32, py::arg("exhaustive") = false);
  m.def("cost_j", &cost, py::arg("csv"), py::arg("groups"), py::arg("alpha") = 2.0, py::arg("beta") = 1.0);
  m.def("budget_json", &budget_json, py::arg("plan_json"));
  m.def("run_cli", &run, py::arg("args"));
}
