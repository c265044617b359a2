#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "replan/bench.hpp"
#include "replan/codec.hpp"
#include "replan/error.hpp"
#include "replan/knowledge_base.hpp"
#include "replan/learning.hpp"
#include "replan/matching.hpp"
#include "replan/scenario.hpp"

namespace py = pybind11;
using namespace replan;

namespace {

Catalog catalog_from_text(const std::string& text) { return parse_catalog(text); }
Workload workload_from_text(const std::string& text) { return parse_workload(text); }

py::dict stats_to_dict(const RuntimeStats& stats) {
  py::dict d;
  d["elapsed"] = stats.elapsed;
  d["logical_reads"] = stats.logical_reads;
  d["physical_reads"] = stats.physical_reads;
  d["cpu_time"] = stats.cpu_time;
  d["sort_heap_hwm"] = stats.sort_heap_hwm;
  return d;
}

py::dict report_to_dict(const ReoptReport& report) {
  py::dict d;
  d["query_id"] = report.query_id;
  py::list applied, dropped;
  for (const auto& m : report.applied) applied.append(m.template_id);
  for (const auto& m : report.dropped) dropped.append(m.template_id);
  d["applied"] = applied;
  d["dropped"] = dropped;
  d["ignored_guidelines"] = report.ignored.size();
  d["original_cost"] = report.original_cost;
  d["reopt_cost"] = report.reopt_cost;
  if (report.original_elapsed) d["original_elapsed"] = *report.original_elapsed;
  if (report.reopt_elapsed) d["reopt_elapsed"] = *report.reopt_elapsed;
  d["fell_back"] = report.fell_back;
  return d;
}

}  // namespace

PYBIND11_MODULE(_replan, m) {
  m.doc() = "query plan re-optimization toolkit";

  py::register_exception<Error>(m, "ReplanError");

  py::class_<Catalog>(m, "Catalog")
      .def_static("parse", &catalog_from_text, py::arg("text"))
      .def("serialize", &serialize_catalog)
      .def("__repr__", [](const Catalog& c) {
        return "<Catalog tables=" + std::to_string(c.tables.size()) + ">";
      });

  py::class_<Workload>(m, "Workload")
      .def_static("parse", &workload_from_text, py::arg("text"))
      .def("serialize", &serialize_workload)
      .def("query_ids", [](const Workload& w) {
        std::vector<std::string> ids;
        for (const auto& q : w.queries) ids.push_back(q.id);
        return ids;
      });

  py::class_<Plan>(m, "Plan")
      .def_static("parse", [](const std::string& text) { return parse_plan(text); }, py::arg("text"))
      .def("serialize", &serialize_plan)
      .def("join_count", &Plan::join_count)
      .def("pop_count", [](const Plan& p) { return p.pops.size(); })
      .def("to_triples", [](const Plan& p) { return serialize_graph(plan_to_graph(p)); })
      .def("__eq__", [](const Plan& a, const Plan& b) { return a == b; })
      .def("__repr__", [](const Plan& p) {
        return "<Plan pops=" + std::to_string(p.pops.size()) + " joins=" +
               std::to_string(p.join_count()) + ">";
      });

  py::class_<KnowledgeBase>(m, "KnowledgeBase")
      .def(py::init<>())
      .def_static("load", [](const std::string& text) { return load_kb(text); }, py::arg("text"))
      .def_static("load_file", &load_kb_file, py::arg("path"))
      .def("save", [](const KnowledgeBase& kb) { return save_kb(kb); })
      .def("save_file", &save_kb_file, py::arg("path"))
      .def("merge", [](const KnowledgeBase& a, const KnowledgeBase& b) { return merge_kb(a, b); })
      .def("stats", &kb_stats)
      .def("template_ids", [](const KnowledgeBase& kb) {
        std::vector<std::string> ids;
        for (const auto& [id, tpl] : kb.templates) ids.push_back(id);
        return ids;
      })
      .def("__len__", [](const KnowledgeBase& kb) { return kb.templates.size(); });

  m.def(
      "optimize",
      [](const Query& query, const Catalog& catalog) { return optimize(query, catalog).plan; },
      py::arg("query"), py::arg("catalog"));
  m.def("random_plan", &random_plan, py::arg("query"), py::arg("catalog"), py::arg("seed"));
  m.def(
      "estimated_cost",
      [](const Plan& plan, const Query& query, const Catalog& catalog) {
        return estimate(plan, query, catalog).total;
      },
      py::arg("plan"), py::arg("query"), py::arg("catalog"));
  m.def(
      "true_run",
      [](const Plan& plan, const Query& query, const Catalog& catalog, std::uint64_t seed) {
        return stats_to_dict(true_run(plan, query, catalog, seed));
      },
      py::arg("plan"), py::arg("query"), py::arg("catalog"), py::arg("seed"));

  py::class_<Query>(m, "Query")
      .def_property_readonly("id", [](const Query& q) { return q.id; })
      .def("__repr__", [](const Query& q) { return "<Query " + q.id + ">"; });

  m.def(
      "queries",
      [](const Workload& w) { return w.queries; },
      py::arg("workload"), "queries of a workload");

  m.def(
      "learn",
      [](const Workload& workload, const Catalog& catalog, int max_joins, std::uint64_t seed,
         int workers, const std::string& workload_id, const std::string& timestamp) {
        LearnConfig config;
        config.max_joins = max_joins;
        config.seed = seed;
        config.workers = workers;
        config.workload_id = workload_id;
        config.timestamp = timestamp;
        LearnOutcome outcome = learn_workload(workload, catalog, config);
        KnowledgeBase kb;
        kb.meta.created = timestamp;
        for (const Template& tpl : outcome.templates) add_template(kb, tpl);
        return kb;
      },
      py::arg("workload"), py::arg("catalog"), py::arg("max_joins") = 4, py::arg("seed") = 1,
      py::arg("workers") = 1, py::arg("workload_id") = "workload",
      py::arg("timestamp") = "1970-01-01T00:00:00Z");

  m.def(
      "reoptimize",
      [](const Query& query, const Catalog& catalog, const KnowledgeBase& kb, int max_joins,
         bool verify, std::uint64_t seed) {
        ReoptConfig config;
        config.max_joins = max_joins;
        config.verify = verify;
        config.seed = seed;
        ReoptResult result = reoptimize(query, catalog, kb, config);
        py::dict d = report_to_dict(result.report);
        d["plan"] = result.plan;
        d["guidelines_xml"] = guideline_to_xml(result.guidelines);
        return d;
      },
      py::arg("query"), py::arg("catalog"), py::arg("kb"), py::arg("max_joins") = 4,
      py::arg("verify") = false, py::arg("seed") = 1);

  m.def(
      "match",
      [](const Plan& plan, const KnowledgeBase& kb, int max_joins) {
        py::list out;
        for (const Match& match : match_plan(plan, kb, max_joins)) {
          py::dict d;
          d["template_id"] = match.template_id;
          d["expected_improvement"] = match.expected_improvement;
          d["covered_pops"] = std::vector<int>(match.covered_pops.begin(), match.covered_pops.end());
          out.append(d);
        }
        return out;
      },
      py::arg("plan"), py::arg("kb"), py::arg("max_joins") = 4);

  // Built-in misestimation scenarios, exposed for experimentation.
  m.def("scenario_names", []() {
    std::vector<std::string> names;
    for (const Scenario& s : motif_scenarios()) names.push_back(s.name);
    return names;
  });
  m.def(
      "scenario",
      [](const std::string& name) {
        for (const Scenario& s : motif_scenarios())
          if (s.name == name) return py::make_tuple(s.catalog, s.workload);
        throw Error(ErrorKind::Range, "unknown scenario: " + name);
      },
      py::arg("name"));
}
