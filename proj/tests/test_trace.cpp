// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "helpers.hpp"
#include "sqlimc/parser.hpp"
#include "sqlimc/trace.hpp"
#include "sqlimc/translate.hpp"

using namespace sqlimc;

namespace {

struct Result {
  TransitionSystem ts;
  AttackTrace trace;
};

Result attack_trace(const std::string& fixture) {
  TransitionSystem ts = translate(parse_spec(testutil::fixture_text(fixture)));
  Engine engine(ts);
  SearchResult r = engine.search();
  REQUIRE(std::holds_alternative<AttackFound>(r));
  AttackTrace t = build_trace(std::get<AttackFound>(r), ts);
  t.classification = classify(t, ts);
  return Result{std::move(ts), std::move(t)};
}

std::string collapse_spaces(const std::string& s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (c == ' ') {
      space = true;
      continue;
    }
    if (space && !out.empty() && c != '\n') out += ' ';
    space = false;
    out += c;
  }
  return out;
}

} // namespace

TEST_CASE("joomla trace") {
  Result r = attack_trace("joomla.sqlf");
  REQUIRE(r.trace.steps.size() == 8);
  CHECK(r.trace.steps.back().from == "WebApp");
  CHECK(r.trace.steps.back().to == "i");
  CHECK(to_string(r.trace.steps.back().message) == "adminPanel");
  CHECK(r.trace.goal == "adminPanel");
  CHECK(r.trace.classification.to_string() == "AuthBypass(adminPanel)");

  SUBCASE("matches the published exchange step by step") {
    const char* expected = R"(
      1. i -> WebApp : com_contenthistory.history.sqli
      2. WebApp -> DB : query(com_contenthistory.history.sqli)
      3. DB -> WebApp : tuple(com_contenthistory.history.sqli)
      4. WebApp -> i : viewHistory.tuple(com_contenthistory.history.sqli)
      5. i -> WebApp : cookie.tuple(com_contenthistory.history.sqli)
      6. WebApp -> DB : sanitizedQuery(tuple(com_contenthistory.history.sqli))
      7. DB -> WebApp : no_tuple
      8. WebApp -> i : adminPanel
    )";
    std::string why;
    CHECK_MESSAGE(trace_matches(r.trace, expected, &why), why);
  }
  SUBCASE("rendered first line") {
    std::string msc = render_msc(r.trace);
    std::string first = msc.substr(0, msc.find('\n'));
    CHECK(collapse_spaces(first) == "1. i -> WebApp : com_contenthistory.history.sqli");
  }
  SUBCASE("only the first step is an injection") {
    std::vector<bool> injected;
    for (const auto& s : r.trace.steps) injected.push_back(s.injected);
    CHECK(injected ==
          std::vector<bool>{true, false, false, false, false, false, false, false});
    CHECK(is_submessage(make_constant("sqli", Sort::Text, true),
                        r.trace.steps[0].message));
  }
}

TEST_CASE("yavwa trace") {
  Result r = attack_trace("yavwa.sqlf");
  REQUIRE(r.trace.steps.size() == 6);
  CHECK(r.trace.steps.back().from == "WebApp");
  CHECK(r.trace.steps.back().to == "i");
  CHECK(to_string(r.trace.steps.back().message) == "secureFolder");
  CHECK(r.trace.classification.to_string() == "AuthBypass(secureFolder)");
  std::string why;
  CHECK_MESSAGE(trace_matches(r.trace, R"(
    1. i -> WebApp : <U>.sqli
    2. WebApp -> DB : query(<U>.sqli)
    3. DB -> WebApp : tuple(<U>.sqli)
    4. WebApp -> i : dashboard.tuple(<U>.sqli)
    5. i -> WebApp : tuple(<U>.sqli)
    6. WebApp -> i : secureFolder
  )", &why), why);
}

TEST_CASE("second-order trace") {
  Result r = attack_trace("second_order.sqlf");
  REQUIRE(r.trace.steps.size() == 8);
  CHECK(r.trace.classification.to_string() == "SecondOrder(DataExtraction)");
  std::string why;
  CHECK_MESSAGE(trace_matches(r.trace, R"(
    1. i -> WebApp : registrationRequest.<U>.sqli
    2. WebApp -> DB : query(<U>.sqli)
    3. DB -> WebApp : tuple(<U>.sqli)
    4. WebApp -> i : registered
    5. i -> WebApp : requestPage
    6. WebApp -> DB : query(<U>.sqli)
    7. DB -> WebApp : tuple(<U>.sqli)
    8. WebApp -> i : page.tuple(<U>.sqli)
  )", &why), why);

  SUBCASE("rendered final line shows the intruder-named atom") {
    std::string msc = render_msc(r.trace);
    std::string last = msc.substr(msc.rfind("8. "));
    if (!last.empty() && last.back() == '\n') last.pop_back();
    std::string flat = collapse_spaces(last);
    CHECK(flat.rfind("WebApp -> i : page.tuple(Username_", 3) == 3);
    CHECK(flat.find(".sqli)") != std::string::npos);
  }
}

TEST_CASE("webgoat traces") {
  Result auth = attack_trace("webgoat_auth.sqlf");
  CHECK(auth.trace.goal == "authentication");
  CHECK(auth.trace.classification.to_string() == "AuthBypass(usersList)");
  Result de = attack_trace("webgoat_extract.sqlf");
  CHECK(de.trace.goal == "data_extraction");
  CHECK(de.trace.classification.to_string() == "DataExtraction");
}

TEST_CASE("classification is ambiguous off the two goal shapes") {
  Result r = attack_trace("yavwa.sqlf");
  TransitionSystem ts = r.ts;
  ts.attack_states[0].pattern =
      FactAtom{"iknows", {make_concat({make_constant("a", Sort::Text, true),
                                       make_constant("b", Sort::Text, true)})}};
  AttackTrace t = r.trace;
  CHECK_THROWS_AS(classify(t, ts), ClassificationAmbiguous);
}

TEST_CASE("an empty path yields an empty trace") {
  Result r = attack_trace("yavwa.sqlf");
  AttackFound af;
  af.goal = "secureFolder";
  auto root = std::make_shared<SearchNode>();
  af.path = {root};
  AttackTrace t = build_trace(af, r.ts);
  CHECK(t.steps.empty());
  CHECK(render_msc(t).empty());
}

TEST_CASE("the intruder opens every bundled trace") {
  for (const char* name : {"joomla.sqlf", "yavwa.sqlf", "second_order.sqlf",
                           "webgoat_auth.sqlf", "webgoat_extract.sqlf"}) {
    Result r = attack_trace(name);
    REQUIRE_FALSE(r.trace.steps.empty());
    CHECK(r.trace.steps[0].from == "i");
    CHECK(r.trace.steps[0].injected);
  }
}

TEST_CASE("msc round trip") {
  for (const char* name : {"joomla.sqlf", "yavwa.sqlf", "second_order.sqlf",
                           "webgoat_auth.sqlf", "webgoat_extract.sqlf"}) {
    Result r = attack_trace(name);
    auto lines = parse_msc(render_msc(r.trace));
    REQUIRE(lines.size() == r.trace.steps.size());
    for (std::size_t k = 0; k < lines.size(); ++k) {
      CHECK(lines[k].from == r.trace.steps[k].from);
      CHECK(lines[k].to == r.trace.steps[k].to);
      CHECK(to_string(lines[k].message) == to_string(r.trace.steps[k].message));
    }
  }
}

TEST_CASE("extraction traces hand a payload-bearing tuple to the intruder") {
  for (const char* name : {"webgoat_extract.sqlf", "second_order.sqlf"}) {
    Result r = attack_trace(name);
    bool found = false;
    for (const auto& s : r.trace.steps) {
      if (s.to != "i") continue;
      for (const auto& sub : subterms(s.message))
        if (sub->kind == TermKind::Apply && sub->name == "tuple" &&
            is_submessage(make_constant("sqli", Sort::Text, true),
                          sub->children[0]))
          found = true;
    }
    CHECK_MESSAGE(found, name);
  }
}

TEST_CASE("structured export is key-ordered and complete") {
  Result r = attack_trace("yavwa.sqlf");
  std::string doc = render_structured(r.trace);
  CHECK(doc.find("goal: secureFolder\n") == 0);
  CHECK(doc.find("classification: AuthBypass(secureFolder)\n") != std::string::npos);
  CHECK(doc.find("steps: 6\n") != std::string::npos);
  CHECK(doc.find("step: 1\nfrom: i\nto: WebApp\n") != std::string::npos);
  CHECK(doc.find("injected: true\n") != std::string::npos);
}
