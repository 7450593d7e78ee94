// SPDX-License-Identifier: Apache-2.0

#include "sqlimc/pipeline.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "sqlimc/concretize.hpp"
#include "sqlimc/engine.hpp"
#include "sqlimc/fixtures.hpp"
#include "sqlimc/lint.hpp"
#include "sqlimc/parser.hpp"
#include "sqlimc/translate.hpp"
#include "sqlimc/verify_db.hpp"

namespace sqlimc {

namespace {

std::string load_spec_text(const std::string& path) {
  const std::string prefix = "fixture:";
  if (path.rfind(prefix, 0) == 0) {
    const Fixture* f = find_fixture(path.substr(prefix.size()));
    if (!f) throw std::runtime_error("unknown fixture '" + path + "'");
    return f->text;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ConcretizationAnswers answers_from_flags(const CliConfig& config,
                                         const AttackTrace& trace) {
  ConcretizationAnswers answers;
  answers.post = config.post;
  std::vector<std::size_t> steps = injected_steps(trace);
  answers.urls.assign(steps.size(), "");
  for (const auto& spec : config.urls) {
    std::size_t eq = spec.find('=');
    if (eq == std::string::npos)
      throw MissingAnswer("--url expects <injected-step>=<url>, got '" + spec +
                          "'");
    std::size_t ordinal = std::stoul(spec.substr(0, eq));
    if (ordinal >= steps.size())
      throw MissingAnswer("--url step " + std::to_string(ordinal) +
                          " out of range (" + std::to_string(steps.size()) +
                          " injected steps)");
    answers.urls[ordinal] = spec.substr(eq + 1);
  }
  for (std::size_t k = 0; k < answers.urls.size(); ++k)
    if (answers.urls[k].empty())
      throw MissingAnswer("URL for injected step " + std::to_string(k) +
                          " (pass --url " + std::to_string(k) + "=<url>)");
  return answers;
}

} // namespace

int run_pipeline(const CliConfig& config, std::istream& in, std::ostream& out,
                 std::ostream& err) {
  try {
    std::string text = load_spec_text(config.spec_path);
    SpecAST ast = parse_spec(text);
    for (const auto& w : validate_webapp_model(ast))
      err << "warning: " << w << "\n";

    TransitionSystem ts = translate(ast);
    if (config.emit_ts) out << emit_transition_system(ts);

    EngineOptions opts;
    opts.max_depth = config.max_depth;
    opts.node_budget = config.node_budget;
    opts.indb_loose = config.indb_loose;
    Engine engine(ts, opts);

    SearchStats stats;
    SearchResult result = engine.search(&stats);
    err << "search: nodes=" << stats.nodes << " bound=" << stats.bound_reached
        << " elapsed_ms=" << stats.elapsed_ms << "\n";

    if (auto* safe = std::get_if<SafeUpToDepth>(&result)) {
      out << "no attack found: SafeUpToDepth(" << safe->bound << ")\n";
      return 0;
    }
    if (std::get_if<Exhausted>(&result)) {
      out << "no attack found: state space exhausted, safe at any depth\n";
      return 0;
    }

    const auto& attack = std::get<AttackFound>(result);
    AttackTrace trace = build_trace(attack, engine.system());
    trace.classification = classify(trace, engine.system());

    out << "attack found: goal " << trace.goal << "\n";
    out << "classification: " << trace.classification.to_string() << "\n";
    if (config.format == "structured")
      out << render_structured(trace);
    else
      out << render_msc(trace);

    if (config.interactive) {
      ConcretizationAnswers answers = run_dialogue(trace, in, out);
      ConcretizationPlan plan = concretize(trace, answers);
      out << (exploits_extraction(trace) ? "Data extraction command"
                                         : "Authentication bypass command")
          << "\n";
      for (const auto& c : plan.commands) out << c << "\n";
      out << "----------------\n";
    } else if (config.non_interactive) {
      ConcretizationAnswers answers = answers_from_flags(config, trace);
      ConcretizationPlan plan = concretize(trace, answers);
      for (const auto& c : plan.commands) out << c << "\n";
    }
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

int run_verify_db(int depth, std::ostream& out, std::ostream& err) {
  try {
    DbCheckReport report = check_database_behaviour(depth);
    out << render_report(report);
    return report.counterexamples.empty() ? 0 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

int run_fixtures_list(std::ostream& out) {
  for (const auto& f : bundled_fixtures())
    out << f.name << "\t" << "fixtures/" << f.filename << "\n";
  return 0;
}

} // namespace sqlimc
