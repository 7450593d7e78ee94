// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "helpers.hpp"
#include "sqlimc/parser.hpp"
#include "sqlimc/translate.hpp"

using namespace sqlimc;

namespace {

SpecAST fixture_ast(const std::string& name) {
  return parse_spec(testutil::fixture_text(name));
}

bool initial_knows(const TransitionSystem& ts, const std::string& constant) {
  for (const auto& a : ts.initial)
    if (a.predicate == "iknows" && a.args.size() == 1 &&
        a.args[0]->kind == TermKind::Constant && a.args[0]->name == constant)
      return true;
  return false;
}

const TransitionRule* find_rule_with_eq(const TransitionSystem& ts,
                                        const std::string& rhs) {
  for (const auto& r : ts.rules)
    for (const auto& [l, rh] : r.require_eq)
      if (to_string(rh) == rhs) return &r;
  return nullptr;
}

bool consumes_pred(const TransitionRule& r, const std::string& pred) {
  for (const auto& a : r.consume)
    if (a.predicate == pred) return true;
  return false;
}

bool forbids_pred(const TransitionRule& r, const std::string& pred) {
  for (const auto& a : r.forbid)
    if (a.predicate == pred) return true;
  return false;
}

std::set<std::string> rule_vars(const TransitionRule& r) {
  std::set<std::string> vars;
  auto scan = [&vars](const std::vector<FactAtom>& atoms) {
    for (const auto& a : atoms)
      for (const auto& t : a.args)
        for (const auto& v : variables_of(t)) vars.insert(v);
  };
  scan(r.consume);
  scan(r.forbid);
  scan(r.produce);
  for (const auto& [l, rh] : r.require_eq) {
    for (const auto& v : variables_of(l)) vars.insert(v);
    for (const auto& v : variables_of(rh)) vars.insert(v);
  }
  for (const auto& [v, s] : r.fresh_vars) vars.insert(v);
  return vars;
}

int label_of(const FactAtom& state_atom) {
  // state atoms carry the step label as their third argument, sl_<n>
  const std::string& n = state_atom.args.at(2)->name;
  return std::stoi(n.substr(3));
}

} // namespace

TEST_CASE("initial knowledge holds the payload constant, not the pages") {
  TransitionSystem ts = translate(fixture_ast("yavwa.sqlf"));
  CHECK(initial_knows(ts, "sqli"));
  CHECK(initial_knows(ts, "webapp"));
  CHECK(initial_knows(ts, "database"));
  CHECK(initial_knows(ts, "i"));
  CHECK_FALSE(initial_knows(ts, "dashboard"));
  CHECK_FALSE(initial_knows(ts, "secureFolder"));
  CHECK_FALSE(initial_knows(ts, "no_tuple"));
}

TEST_CASE("goals become attack states over the knowledge predicate") {
  TransitionSystem ts = translate(fixture_ast("yavwa.sqlf"));
  REQUIRE(ts.attack_states.size() == 1);
  CHECK(ts.attack_states[0].goal == "secureFolder");
  CHECK(ts.attack_states[0].pattern.predicate == "iknows");
  CHECK(to_string(ts.attack_states[0].pattern.args[0]) == "secureFolder");

  TransitionSystem de = translate(fixture_ast("webgoat_extract.sqlf"));
  REQUIRE(de.attack_states.size() == 1);
  CHECK(to_string(de.attack_states[0].pattern.args[0]) == "tuple(?)");
}

TEST_CASE("assignment compiles to one label-advancing rule") {
  const char* text = R"(specification Tiny
channel_model CCM
entity Environment {
  symbols
    webapp, database: agent;
    page: text;
  entity Session {
    entity Snd(Actor, Rcv: agent) {
      symbols Var: message;
      body { Var := page; }
    }
    body { new Snd(webapp, database); }
  }
  body { new Session(); }
}
)";
  TransitionSystem ts = translate(parse_spec(text));
  REQUIRE(ts.rules.size() == 1);
  const TransitionRule& r = ts.rules[0];
  REQUIRE(r.consume.size() == 1);
  REQUIRE(r.produce.size() == 1);
  CHECK(r.consume[0].predicate == "state_Snd");
  // consumed: the old value as a variable; produced: the constant, label+1
  CHECK(r.consume[0].args.back()->kind == TermKind::Variable);
  CHECK(r.produce[0].args.back()->name == "page");
  CHECK(label_of(r.produce[0]) == label_of(r.consume[0]) + 1);
}

TEST_CASE("database branch rules carry the validity conditions") {
  TransitionSystem ts = translate(fixture_ast("yavwa.sqlf"));

  const TransitionRule* sanitized = find_rule_with_eq(ts, "tuple(?)");
  REQUIRE(sanitized);
  CHECK(sanitized->entity == "DB");

  const TransitionRule* raw_pos = nullptr;
  const TransitionRule* raw_neg = nullptr;
  for (const auto& r : ts.rules) {
    if (r.entity != "DB") continue;
    if (consumes_pred(r, "inDB")) raw_pos = &r;
    if (forbids_pred(r, "inDB")) raw_neg = &r;
  }
  REQUIRE(raw_pos);
  REQUIRE(raw_neg);
  CHECK_FALSE(consumes_pred(*sanitized, "inDB"));
  CHECK_FALSE(forbids_pred(*sanitized, "inDB"));
}

TEST_CASE("rename apart") {
  SUBCASE("shared variables get distinct rule suffixes") {
    TransitionSystem ts;
    TransitionRule a, b;
    a.name = "a";
    a.consume.push_back(FactAtom{"p", {make_variable("X")}});
    a.produce.push_back(FactAtom{"q", {make_variable("X")}});
    b = a;
    b.name = "b";
    ts.rules = {a, b};
    TransitionSystem out = rename_apart(ts);
    CHECK(to_string(out.rules[0].consume[0].args[0]) == "X_r0");
    CHECK(to_string(out.rules[1].consume[0].args[0]) == "X_r1");
    SUBCASE("idempotent") {
      TransitionSystem again = rename_apart(out);
      CHECK(emit_transition_system(again) == emit_transition_system(out));
    }
  }
  SUBCASE("no two rules of a translated system share a variable") {
    TransitionSystem ts = translate(fixture_ast("yavwa.sqlf"));
    std::set<std::string> all;
    std::size_t total = 0;
    for (const auto& r : ts.rules) {
      auto vars = rule_vars(r);
      total += vars.size();
      all.insert(vars.begin(), vars.end());
    }
    CHECK(all.size() == total); // distinct across rules = sum per rule
  }
}

TEST_CASE("step labels form sound per-instance control flow, all fixtures") {
  for (const char* name : {"joomla.sqlf", "yavwa.sqlf", "second_order.sqlf",
                           "webgoat_auth.sqlf", "webgoat_extract.sqlf"}) {
    TransitionSystem ts = translate(fixture_ast(name));
    std::map<std::string, std::vector<std::pair<int, int>>> edges;
    for (const auto& r : ts.rules) {
      const FactAtom* from = nullptr;
      const FactAtom* to = nullptr;
      for (const auto& a : r.consume)
        if (a.predicate.rfind("state_", 0) == 0) from = &a;
      for (const auto& a : r.produce)
        if (a.predicate.rfind("state_", 0) == 0) to = &a;
      REQUIRE_MESSAGE(from, r.name);
      REQUIRE_MESSAGE(to, r.name);
      CHECK(from->predicate == to->predicate);
      CHECK(term_equal(from->args[1], to->args[1])); // same instance
      // labels strictly increase along the flow; back edges reset to a head
      CHECK((label_of(*to) > label_of(*from) || label_of(*to) == 0));
      edges[r.entity].emplace_back(label_of(*from), label_of(*to));
    }
    // every program point is reachable from the entry label 0, the web app
    // flow is acyclic, and the database loops back to its listen state
    for (const auto& [entity, es] : edges) {
      const std::string& ename = entity;
      std::set<int> reachable{0};
      for (bool grew = true; grew;) {
        grew = false;
        for (const auto& [f, t] : es)
          if (reachable.count(f) && reachable.insert(t).second) grew = true;
      }
      for (const auto& [f, t] : es) CHECK_MESSAGE(reachable.count(f), ename);
      bool loops_to_entry = false;
      for (const auto& [f, t] : es)
        if (t == 0) loops_to_entry = true;
      if (entity == "DB")
        CHECK(loops_to_entry);
      else
        CHECK_FALSE(loops_to_entry);
    }
  }
}

TEST_CASE("every produced variable is bound, all fixtures") {
  for (const char* name : {"joomla.sqlf", "yavwa.sqlf", "second_order.sqlf",
                           "webgoat_auth.sqlf", "webgoat_extract.sqlf"}) {
    TransitionSystem ts = translate(fixture_ast(name));
    for (const auto& r : ts.rules) {
      std::set<std::string> bound;
      for (const auto& a : r.consume)
        for (const auto& t : a.args)
          for (const auto& v : variables_of(t)) bound.insert(v);
      for (const auto& [l, rh] : r.require_eq)
        for (const auto& v : variables_of(rh)) bound.insert(v);
      for (const auto& [v, s] : r.fresh_vars) bound.insert(v);
      for (const auto& a : r.produce)
        for (const auto& t : a.args)
          for (const auto& v : variables_of(t))
            CHECK_MESSAGE(bound.count(v), (r.name + ": " + v));
    }
  }
}

TEST_CASE("translation is deterministic") {
  for (const char* name : {"joomla.sqlf", "second_order.sqlf"}) {
    std::string a = emit_transition_system(translate(fixture_ast(name)));
    std::string b = emit_transition_system(translate(fixture_ast(name)));
    CHECK(a == b);
  }
}

TEST_CASE("secure channel sends never leak to the intruder") {
  for (const char* name : {"joomla.sqlf", "yavwa.sqlf", "second_order.sqlf",
                           "webgoat_auth.sqlf", "webgoat_extract.sqlf"}) {
    TransitionSystem ts = translate(fixture_ast(name));
    for (const auto& r : ts.rules) {
      if (r.role != MsgRole::SendSecure) continue;
      for (const auto& a : r.produce) CHECK(a.predicate != "iknows");
    }
  }
}

TEST_CASE("translation errors") {
  SUBCASE("receive on a channel the sender cannot write") {
    const char* text = R"(specification Bad
channel_model CCM
entity Environment {
  symbols
    webapp, database: agent;
  entity Session {
    entity W(Actor, Database: agent) {
      symbols X: message;
      body { ? *->* Actor: ?X; }
    }
    body { new W(webapp, database); }
  }
  body { new Session(); }
}
)";
    CHECK_THROWS_AS(translate(parse_spec(text)), TranslationError);
  }
  SUBCASE("instantiation with a local variable is rejected") {
    const char* text = R"(specification Bad
channel_model CCM
entity Environment {
  symbols
    webapp, database: agent;
  entity Session {
    symbols X: agent;
    entity W(Actor, Database: agent) {
      symbols Y: message;
      body { Y := webapp; }
    }
    body { new W(X, database); }
  }
  body { new Session(); }
}
)";
    CHECK_THROWS_AS(translate(parse_spec(text)), TranslationError);
  }
}

TEST_CASE("transition system dump has the rule sections") {
  TransitionSystem ts = translate(fixture_ast("yavwa.sqlf"));
  std::string text = emit_transition_system(ts);
  CHECK(text.find("init:") != std::string::npos);
  CHECK(text.find("horn:") != std::string::npos);
  CHECK(text.find("attack_states:") != std::string::npos);
  CHECK(text.find("  LHS:") != std::string::npos);
  CHECK(text.find("  NEG:") != std::string::npos);
  CHECK(text.find("  COND:") != std::string::npos);
  CHECK(text.find("  FRESH:") != std::string::npos);
  CHECK(text.find("  RHS:") != std::string::npos);
  CHECK(text.find("inDB(M.sqli)") != std::string::npos);
}
