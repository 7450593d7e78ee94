// SPDX-License-Identifier: Apache-2.0

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "sqlimc/concretize.hpp"
#include "sqlimc/engine.hpp"
#include "sqlimc/fixtures.hpp"
#include "sqlimc/lint.hpp"
#include "sqlimc/parser.hpp"
#include "sqlimc/trace.hpp"
#include "sqlimc/translate.hpp"
#include "sqlimc/verify_db.hpp"

namespace py = pybind11;
using namespace sqlimc;

namespace {

struct AnalysisResult {
  bool found = false;
  std::string outcome; // "attack" | "safe_up_to_depth" | "exhausted"
  int bound = 0;
  std::shared_ptr<TransitionSystem> ts;
  AttackTrace trace;
  SearchStats stats;

  std::string goal() const { return trace.goal; }
  std::string classification() const {
    return trace.classification.to_string();
  }
  std::string msc() const { return render_msc(trace); }
  std::string structured() const { return render_structured(trace); }

  py::list steps() const {
    py::list out;
    for (const auto& s : trace.steps) {
      py::dict d;
      d["from"] = s.from;
      d["to"] = s.to;
      d["message"] = to_string(s.message);
      d["injected"] = s.injected;
      out.append(d);
    }
    return out;
  }

  py::dict statistics() const {
    py::dict d;
    d["nodes"] = stats.nodes;
    d["bound"] = stats.bound_reached;
    d["elapsed_ms"] = stats.elapsed_ms;
    return d;
  }

  py::dict concretize_plan(const std::vector<std::string>& urls,
                           const std::string& post) const {
    if (!found) throw std::runtime_error("no attack to concretize");
    ConcretizationAnswers answers;
    answers.urls = urls;
    answers.post = post;
    ConcretizationPlan plan = ::sqlimc::concretize(trace, answers);
    py::dict d;
    d["kind"] = plan.kind.to_string();
    d["urls"] = plan.urls;
    d["post"] = plan.post;
    d["commands"] = plan.commands;
    return d;
  }
};

AnalysisResult analyze_text(const std::string& text, int depth, long budget,
                            bool indb_loose) {
  SpecAST ast = parse_spec(text);
  auto ts = std::make_shared<TransitionSystem>(translate(ast));
  Engine engine(*ts, EngineOptions{.max_depth = depth,
                                   .node_budget = budget,
                                   .indb_loose = indb_loose});
  AnalysisResult result;
  result.ts = ts;
  SearchResult r = engine.search(&result.stats);
  if (auto* attack = std::get_if<AttackFound>(&r)) {
    result.found = true;
    result.outcome = "attack";
    result.trace = build_trace(*attack, *ts);
    result.trace.classification = classify(result.trace, *ts);
  } else if (auto* safe = std::get_if<SafeUpToDepth>(&r)) {
    result.outcome = "safe_up_to_depth";
    result.bound = safe->bound;
  } else {
    result.outcome = "exhausted";
  }
  return result;
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "attack-trace search over behavioral web application models";

  py::register_exception<ParseError>(m, "SpecParseError");
  py::register_exception<ValidationError>(m, "SpecValidationError");
  py::register_exception<TranslationError>(m, "SpecTranslationError");
  py::register_exception<ResourceLimit>(m, "SearchBudgetExceeded");

  py::class_<AnalysisResult>(m, "AnalysisResult")
      .def_readonly("found", &AnalysisResult::found)
      .def_readonly("outcome", &AnalysisResult::outcome)
      .def_readonly("bound", &AnalysisResult::bound)
      .def_property_readonly("goal", &AnalysisResult::goal)
      .def_property_readonly("classification", &AnalysisResult::classification)
      .def_property_readonly("stats", &AnalysisResult::statistics)
      .def("msc", &AnalysisResult::msc)
      .def("structured", &AnalysisResult::structured)
      .def("steps", &AnalysisResult::steps)
      .def("concretize", &AnalysisResult::concretize_plan, py::arg("urls"),
           py::arg("post") = std::string())
      .def("__repr__", [](const AnalysisResult& r) {
        return r.found ? "<AnalysisResult attack goal=" + r.trace.goal + ">"
                       : "<AnalysisResult " + r.outcome + ">";
      });

  m.def("analyze", &analyze_text, py::arg("text"), py::arg("depth") = 16,
        py::arg("budget") = 1000000L, py::arg("indb_loose") = false,
        "Parse, compile and search a model; returns an AnalysisResult.");

  m.def("lint", [](const std::string& text) {
    return validate_webapp_model(parse_spec(text));
  }, py::arg("text"), "Modeling-guideline warnings for a model.");

  m.def("reprint", [](const std::string& text) {
    return print_spec(parse_spec(text));
  }, py::arg("text"), "Parse a model and print it back in canonical form.");

  m.def("emit_transition_system", [](const std::string& text) {
    return emit_transition_system(translate(parse_spec(text)));
  }, py::arg("text"), "The compiled rule system as structured text.");

  m.def("verify_db", [](int depth) {
    DbCheckReport r = check_database_behaviour(depth);
    py::dict d;
    d["depth"] = r.depth;
    d["queries"] = r.queries;
    d["raw_ok"] = r.raw_ok;
    d["sanitized_ok"] = r.sanitized_ok;
    d["legit"] = r.legit;
    d["counterexamples"] = r.counterexamples;
    return d;
  }, py::arg("depth") = 3,
     "Drive the builtin database over the enumerated query universe.");

  m.def("fixture_names", [] {
    std::vector<std::string> names;
    for (const auto& f : bundled_fixtures()) names.push_back(f.name);
    return names;
  });

  m.def("fixture_text", [](const std::string& name) {
    const Fixture* f = find_fixture(name);
    if (!f) throw py::key_error("unknown fixture '" + name + "'");
    return f->text;
  }, py::arg("name"));
}
