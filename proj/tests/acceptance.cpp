// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance checks, driven through the CLI binary where the
// behaviour is user-visible and through the library where a check needs
// internals (sanitized variants, the deduction oracle). One line per
// criterion; the exit code is the number of failures.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <vector>

#include "helpers.hpp"
#include "sqlimc/engine.hpp"
#include "sqlimc/parser.hpp"
#include "sqlimc/trace.hpp"
#include "sqlimc/translate.hpp"

using namespace sqlimc;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  double elapsed_ms = 0;
};

RunResult run_cli(const std::string& args) {
  std::string cmd = std::string(SQLIMC_CLI_PATH) + " " + args + " 2>/dev/null";
  auto t0 = std::chrono::steady_clock::now();
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) throw std::runtime_error("popen failed");
  RunResult r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  int status = pclose(p);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.elapsed_ms = std::chrono::duration<double, std::milli>(
                     std::chrono::steady_clock::now() - t0)
                     .count();
  return r;
}

// Splits an analyze report into (goal, classification, MSC body).
struct Report {
  std::string goal;
  std::string classification;
  std::vector<MscLine> steps;
};

Report parse_report(const std::string& out) {
  Report rep;
  std::istringstream in(out);
  std::string line, msc;
  while (std::getline(in, line)) {
    if (line.rfind("attack found: goal ", 0) == 0)
      rep.goal = line.substr(19);
    else if (line.rfind("classification: ", 0) == 0)
      rep.classification = line.substr(16);
    else if (!line.empty() && isdigit((unsigned char)line[0]))
      msc += line + "\n";
  }
  rep.steps = parse_msc(msc);
  return rep;
}

int failures = 0;

void criterion(int number, const std::string& name,
               const std::function<std::string()>& body) {
  auto t0 = std::chrono::steady_clock::now();
  std::string problem;
  try {
    problem = body();
  } catch (const std::exception& e) {
    problem = e.what();
  }
  double ms = std::chrono::duration<double, std::milli>(
                  std::chrono::steady_clock::now() - t0)
                  .count();
  if (problem.empty()) {
    printf("[PASS] %d. %s (%.0f ms)\n", number, name.c_str(), ms);
  } else {
    ++failures;
    printf("[FAIL] %d. %s: %s\n", number, name.c_str(), problem.c_str());
  }
  fflush(stdout);
}

std::string check_reproduction(const std::string& fixture,
                               const std::string& oracle,
                               const std::string& classification,
                               double budget_ms) {
  RunResult r = run_cli("analyze --spec fixtures/" + fixture);
  if (r.exit_code != 1) return "exit code " + std::to_string(r.exit_code);
  if (r.elapsed_ms > budget_ms)
    return "took " + std::to_string(r.elapsed_ms) + " ms";
  Report rep = parse_report(r.out);
  if (rep.classification != classification)
    return "classification " + rep.classification + ", expected " + classification;
  std::string why;
  if (!msc_matches(rep.steps, parse_msc(oracle), &why)) return why;
  return "";
}

} // namespace

int main() {
  const double kTraceBudgetMs = 5000;

  criterion(1, "Joomla reproduction: 8-step bypass via extracted session data", [&] {
    std::string problem = check_reproduction(
        "joomla.sqlf",
        R"(1. i -> WebApp : com_contenthistory.history.sqli
           2. WebApp -> DB : query(com_contenthistory.history.sqli)
           3. DB -> WebApp : tuple(com_contenthistory.history.sqli)
           4. WebApp -> i : viewHistory.tuple(com_contenthistory.history.sqli)
           5. i -> WebApp : cookie.tuple(com_contenthistory.history.sqli)
           6. WebApp -> DB : sanitizedQuery(tuple(com_contenthistory.history.sqli))
           7. DB -> WebApp : no_tuple
           8. WebApp -> i : adminPanel)",
        "AuthBypass(adminPanel)", kTraceBudgetMs);
    if (!problem.empty()) return problem;
    RunResult r = run_cli("analyze --spec fixtures/joomla.sqlf");
    std::string last = r.out.substr(r.out.rfind("8. "));
    std::string flat;
    bool sp = false;
    for (char c : last) {
      if (c == ' ') { sp = true; continue; }
      if (sp && !flat.empty()) flat += ' ';
      sp = false;
      if (c != '\n') flat += c;
    }
    if (flat != "8. WebApp -> i : adminPanel")
      return "last line is '" + flat + "'";
    return std::string();
  });

  criterion(2, "YAVWA reproduction: 6-step folder bypass via data extraction", [&] {
    std::string problem = check_reproduction(
        "yavwa.sqlf",
        R"(1. i -> WebApp : <U>.sqli
           2. WebApp -> DB : query(<U>.sqli)
           3. DB -> WebApp : tuple(<U>.sqli)
           4. WebApp -> i : dashboard.tuple(<U>.sqli)
           5. i -> WebApp : tuple(<U>.sqli)
           6. WebApp -> i : secureFolder)",
        "AuthBypass(secureFolder)", kTraceBudgetMs);
    if (!problem.empty()) return problem;
    Report rep = parse_report(run_cli("analyze --spec fixtures/yavwa.sqlf").out);
    bool tuple_at_4 = false;
    for (const auto& sub : subterms(rep.steps.at(3).message))
      if (sub->kind == TermKind::Apply && sub->name == "tuple") tuple_at_4 = true;
    if (!tuple_at_4) return std::string("no tuple(...) delivery at step 4");
    return std::string();
  });

  criterion(3, "Second-order reproduction: stored payload fired twice", [&] {
    std::string problem = check_reproduction(
        "second_order.sqlf",
        R"(1. i -> WebApp : registrationRequest.<U>.sqli
           2. WebApp -> DB : query(<U>.sqli)
           3. DB -> WebApp : tuple(<U>.sqli)
           4. WebApp -> i : registered
           5. i -> WebApp : requestPage
           6. WebApp -> DB : query(<U>.sqli)
           7. DB -> WebApp : tuple(<U>.sqli)
           8. WebApp -> i : page.tuple(<U>.sqli))",
        "SecondOrder(DataExtraction)", kTraceBudgetMs);
    if (!problem.empty()) return problem;
    Report rep =
        parse_report(run_cli("analyze --spec fixtures/second_order.sqlf").out);
    const Term& q2 = rep.steps.at(1).message;
    const Term& q6 = rep.steps.at(5).message;
    if (q2->kind != TermKind::Apply || q2->name != "query" ||
        q6->kind != TermKind::Apply || q6->name != "query")
      return std::string("steps 2 and 6 are not raw queries");
    if (to_string(q2) != to_string(q6))
      return std::string("the two query firings differ");
    return std::string();
  });

  criterion(4, "WebGoat reproductions: both goal flavors violated", [&] {
    RunResult auth = run_cli("analyze --spec fixtures/webgoat_auth.sqlf");
    if (auth.exit_code != 1) return std::string("auth fixture found no attack");
    if (auth.elapsed_ms > kTraceBudgetMs) return std::string("auth too slow");
    if (parse_report(auth.out).goal != "authentication")
      return std::string("auth fixture violated the wrong goal");
    RunResult de = run_cli("analyze --spec fixtures/webgoat_extract.sqlf");
    if (de.exit_code != 1) return std::string("extract fixture found no attack");
    if (de.elapsed_ms > kTraceBudgetMs) return std::string("extract too slow");
    Report rep = parse_report(de.out);
    if (rep.goal != "data_extraction" || rep.classification != "DataExtraction")
      return std::string("extract fixture misclassified");
    return std::string();
  });

  criterion(5, "database behaviour check: full query universe, no counterexamples", [&] {
    RunResult r = run_cli("verify-db --depth 3");
    if (r.exit_code != 0) return "exit code " + std::to_string(r.exit_code);
    if (r.elapsed_ms > 30000) return std::string("took over 30 s");
    long queries = 0;
    std::istringstream in(r.out);
    std::string line;
    bool clean = false;
    while (std::getline(in, line)) {
      if (line.rfind("trailing-injection queries: ", 0) == 0)
        queries = std::stol(line.substr(28));
      if (line == "counterexamples: 0") clean = true;
    }
    if (queries < 100) return "only " + std::to_string(queries) + " queries";
    if (!clean) return std::string("counterexamples reported");
    return std::string();
  });

  criterion(6, "prepared statements are immune: sanitized variants are safe", [&] {
    for (const char* name : {"joomla.sqlf", "yavwa.sqlf", "second_order.sqlf",
                             "webgoat_auth.sqlf", "webgoat_extract.sqlf"}) {
      SpecAST ast = parse_spec(testutil::fixture_text(name));
      TransitionSystem ts = translate(sanitize_all_queries(ast));
      Engine engine(std::move(ts), EngineOptions{.max_depth = 16});
      SearchResult r = engine.search();
      if (std::holds_alternative<AttackFound>(r))
        return std::string(name) + ": attack found in the sanitized variant";
    }
    return std::string();
  });

  criterion(7, "determinism: byte-identical reports across runs", [&] {
    for (const char* name : {"joomla.sqlf", "yavwa.sqlf", "second_order.sqlf",
                             "webgoat_auth.sqlf", "webgoat_extract.sqlf"}) {
      std::string base = "analyze --spec fixtures/" + std::string(name);
      if (run_cli(base).out != run_cli(base).out)
        return std::string(name) + ": MSC output differs between runs";
      std::string structured = base + " --format structured";
      if (run_cli(structured).out != run_cli(structured).out)
        return std::string(name) + ": structured output differs between runs";
    }
    if (run_cli("verify-db --depth 2").out != run_cli("verify-db --depth 2").out)
      return std::string("verify-db output differs between runs");
    return std::string();
  });

  criterion(8, "deduction matches a brute-force enumerator on depth-3 universes", [&] {
    auto t0 = std::chrono::steady_clock::now();

    Term a = make_constant("a", Sort::Text, true);
    Term b = make_constant("b", Sort::Text, true);
    Term cc = make_constant("c", Sort::Text, true);
    Term sqli = make_constant("sqli", Sort::Text, true);
    std::vector<Term> atoms = {a, b, cc, sqli};

    // universe of all terms of depth <= 3 (width-2 concatenations,
    // encryptions over depth-1 payloads and keys)
    std::vector<Term> cur = atoms;
    for (int d = 1; d < 3; ++d) {
      std::vector<Term> next = cur;
      for (const auto& t : cur) next.push_back(make_apply("tuple", t));
      for (const auto& t : cur) next.push_back(make_apply("pub", t, true));
      for (const auto& x : cur)
        for (const auto& y : cur) {
          if (x->kind != TermKind::Concat && y->kind != TermKind::Concat)
            next.push_back(make_concat({x, y}));
          if (d == 1) next.push_back(make_enc(x, y));
        }
      cur = std::move(next);
    }
    std::set<Term, TermLess> dedup(cur.begin(), cur.end());
    std::vector<Term> universe(dedup.begin(), dedup.end());

    const char* kHarness = R"(specification DeductionCheck
channel_model CCM
entity Environment {
  symbols
    webapp, database: agent;
    nonpublic inDB(message): fact;
    nonpublic query(message): message;
    nonpublic sanitizedQuery(message): message;
    nonpublic tuple(message): message;
    nonpublic no_tuple: text;
    sqli: text;
  clauses
    db_hc_ev(M): inDB(M.sqli);
  entity Session { body { new DB(webapp, database); } }
  body { new Session(); }
}
)";
    Engine engine(translate(parse_spec(kHarness)));

    std::vector<std::vector<Term>> knowledge_sets = {
        {},
        {a},
        {make_concat({a, b})},
        {make_apply("tuple", make_concat({a, sqli}))},
        {make_enc(a, b), b},
        {make_enc(a, b)},
        {make_enc(make_concat({a, cc}), make_concat({b, sqli})), b},
    };

    for (const auto& k : knowledge_sets) {
      SystemState s = engine.initial_state();
      for (const auto& t : k) insert_fact(s.facts, FactAtom{"iknows", {t}});

      // brute force: grow a derivable set over the universe to fixpoint
      std::set<Term, TermLess> known;
      std::vector<Term> work = k;
      work.push_back(sqli);
      work.push_back(make_constant("webapp", Sort::Agent, true));
      work.push_back(make_constant("database", Sort::Agent, true));
      work.push_back(make_constant("i", Sort::Agent, true));
      while (!work.empty()) {
        Term t = work.back();
        work.pop_back();
        if (!known.insert(t).second) continue;
        if (t->kind == TermKind::Concat)
          for (const auto& p : t->children) work.push_back(p);
      }
      for (bool changed = true; changed;) {
        changed = false;
        for (const auto& t : std::vector<Term>(known.begin(), known.end())) {
          if (t->kind != TermKind::Enc || known.count(t->children[0])) continue;
          if (known.count(t->children[1])) {
            work.push_back(t->children[0]);
            while (!work.empty()) {
              Term u = work.back();
              work.pop_back();
              if (!known.insert(u).second) continue;
              if (u->kind == TermKind::Concat)
                for (const auto& p : u->children) work.push_back(p);
            }
            changed = true;
          }
        }
        for (const auto& t : universe) {
          if (known.count(t)) continue;
          bool ok = false;
          if (t->kind == TermKind::Concat) {
            ok = true;
            for (const auto& p : t->children)
              if (!known.count(p)) ok = false;
          } else if (t->kind == TermKind::Apply) {
            ok = t->is_public && known.count(t->children[0]);
          } else if (t->kind == TermKind::Enc) {
            ok = known.count(t->children[0]) && known.count(t->children[1]);
          }
          if (ok) {
            known.insert(t);
            changed = true;
          }
        }
      }

      for (const auto& t : universe)
        if (engine.derivable(s, t) != (known.count(t) > 0))
          return "disagreement on " + to_string(t);
    }
    double ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
    if (ms > 60000) return std::string("took over 60 s");
    return std::string();
  });

  criterion(9, "concretization emits the reference sqlmap command", [&] {
    const std::string url =
        "http://target.com/joomla3.4.4/index.php?list[select]=?&view=history&"
        "option=com_contenthistory";
    RunResult r = run_cli(
        "analyze --spec fixtures/joomla.sqlf --non-interactive --url '0=" + url +
        "'");
    if (r.exit_code != 1) return "exit code " + std::to_string(r.exit_code);
    const std::string expected = "sqlmap.py -u \"" + url + "\" -a";
    if (r.out.find(expected + "\n") == std::string::npos)
      return std::string("command string not found in the output");
    return std::string();
  });

  if (failures == 0) printf("all acceptance criteria passed\n");
  return failures;
}
