// SPDX-License-Identifier: Apache-2.0

#include "sqlimc/lint.hpp"

namespace sqlimc {

namespace {

bool contains_tuple_of(const Term& t, const std::string& var) {
  if (t->kind == TermKind::Apply && t->name == "tuple") {
    for (const auto& sub : subterms(t->children[0]))
      if (sub->kind == TermKind::Variable && sub->name == var) return true;
  }
  for (const auto& c : t->children)
    if (contains_tuple_of(c, var)) return true;
  return false;
}

// The binder of a tuple(?X) subpattern, if the pattern has one.
std::string tuple_binder(const Term& t) {
  if (t->kind == TermKind::Apply && t->name == "tuple" &&
      t->children[0]->kind == TermKind::Variable && t->children[0]->binder)
    return t->children[0]->name;
  for (const auto& c : t->children) {
    std::string b = tuple_binder(c);
    if (!b.empty()) return b;
  }
  return "";
}

void collect_client_sends(const StatementList& body,
                          std::vector<const Statement*>& out) {
  for (const auto& st : body) {
    if (st.kind == StatementKind::Send && st.channel != ChannelKind::Secure)
      out.push_back(&st);
    for (const auto& b : st.bodies) collect_client_sends(b, out);
  }
}

void check_query_terms(const Term& t, int line, std::vector<std::string>& out) {
  if (!t) return;
  if (t->kind == TermKind::Apply &&
      (t->name == "query" || t->name == "sanitizedQuery")) {
    if (variables_of(t->children[0]).empty())
      out.push_back("line " + std::to_string(line) + ": " + t->name + "(" +
                    to_string(t->children[0]) +
                    ") takes no client input; the database will always reply "
                    "no_tuple");
  }
  for (const auto& c : t->children) check_query_terms(c, line, out);
}

void walk_statements(const StatementList& body, std::vector<std::string>& out) {
  for (const auto& st : body) {
    if (st.kind == StatementKind::Send) check_query_terms(st.message, st.line, out);
    if (st.kind == StatementKind::Assign && st.value)
      check_query_terms(st.value, st.line, out);

    if (st.kind == StatementKind::Select || st.kind == StatementKind::If) {
      for (std::size_t b = 0; b < st.guards.size(); ++b) {
        const Guard& g = st.guards[b];
        if (g.kind == GuardKind::Receive && g.channel == ChannelKind::Secure &&
            b < st.bodies.size()) {
          std::string binder = tuple_binder(g.pattern);
          if (!binder.empty()) {
            std::vector<const Statement*> sends;
            collect_client_sends(st.bodies[b], sends);
            bool forwarded = false;
            for (const Statement* s : sends)
              if (contains_tuple_of(s->message, binder)) forwarded = true;
            if (!sends.empty() && !forwarded)
              out.push_back(
                  "line " + std::to_string(g.line) +
                  ": the tuple(" + binder +
                  ") database response is never included in a client "
                  "response, so no injection is observable here");
          }
        }
      }
    }
    for (const auto& b : st.bodies) walk_statements(b, out);
  }
}

void walk_entity(const EntityDecl& e, std::vector<std::string>& out) {
  walk_statements(e.body, out);
  for (const auto& c : e.children) walk_entity(*c, out);
}

} // namespace

std::vector<std::string> validate_webapp_model(const SpecAST& ast) {
  std::vector<std::string> out;
  if (ast.root) walk_entity(*ast.root, out);
  for (const auto& g : ast.goals) {
    for (const auto& sub : subterms(g.forbidden))
      if (sub->kind == TermKind::Constant && sub->is_public)
        out.push_back("goal '" + g.name + "' forbids the public constant '" +
                      sub->name + "', which the intruder knows initially");
  }
  return out;
}

} // namespace sqlimc
