// SPDX-License-Identifier: Apache-2.0

#include "sqlimc/builtin_db.hpp"

namespace sqlimc {

const std::string& builtin_database_source() {
  static const std::string src = R"(entity DB(WebApp, Actor: agent) {
  symbols
    NonceWA, NonceDB: text;
    SQLquery: message;
  body {
    while(true) {
      select {
        on(WebApp *->* Actor: ?NonceWA.sanitizedQuery(?SQLquery)): {
          select {
            on(SQLquery = tuple(?)): {
              NonceDB := fresh();
              Actor *->* WebApp: no_tuple.NonceDB;
            }
          }
        }
        on(WebApp *->* Actor: ?NonceWA.query(?SQLquery)): {
          select {
            on(inDB(SQLquery)): {
              NonceDB := fresh();
              Actor *->* WebApp: tuple(SQLquery).NonceDB;
            }
            on(!(inDB(SQLquery))): {
              NonceDB := fresh();
              Actor *->* WebApp: no_tuple.NonceDB;
            }
          }
        }
      }
    }
  }
}
)";
  return src;
}

namespace {

Term var(const std::string& n) { return make_variable(n); }
Term binder(const std::string& n) { return make_variable(n, Sort::Message, true); }
Term cst(const std::string& n) { return make_constant(n); }

Statement send_secure(const std::string& to, Term msg) {
  Statement st;
  st.kind = StatementKind::Send;
  st.peer = var(to);
  st.channel = ChannelKind::Secure;
  st.message = std::move(msg);
  return st;
}

Statement assign_fresh(const std::string& v) {
  Statement st;
  st.kind = StatementKind::Assign;
  st.var = v;
  st.fresh = true;
  return st;
}

Guard receive_secure(const std::string& from, Term pattern) {
  Guard g;
  g.kind = GuardKind::Receive;
  g.from = var(from);
  g.channel = ChannelKind::Secure;
  g.pattern = std::move(pattern);
  return g;
}

Guard fact_guard(const std::string& pred, Term arg, bool negated) {
  Guard g;
  g.kind = GuardKind::Fact;
  g.predicate = pred;
  g.arg = std::move(arg);
  g.negated = negated;
  return g;
}

Guard eq_guard(Term lhs, Term rhs) {
  Guard g;
  g.kind = GuardKind::Equality;
  g.lhs = std::move(lhs);
  g.rhs = std::move(rhs);
  return g;
}

EntityDecl build() {
  EntityDecl e;
  e.name = "DB";
  e.params = {{"WebApp", Sort::Agent}, {"Actor", Sort::Agent}};
  e.symbols = {
      SymbolDecl{.name = "NonceWA", .sort = Sort::Text, .is_constant = false},
      SymbolDecl{.name = "NonceDB", .sort = Sort::Text, .is_constant = false},
      SymbolDecl{.name = "SQLquery", .sort = Sort::Message, .is_constant = false},
  };

  // sanitized branch: reply no_tuple only to whole tuple(...) queries
  Statement sanitized_inner;
  sanitized_inner.kind = StatementKind::Select;
  sanitized_inner.guards.push_back(
      eq_guard(var("SQLquery"), make_apply("tuple", make_wildcard())));
  sanitized_inner.bodies.push_back(
      {assign_fresh("NonceDB"),
       send_secure("WebApp", make_concat({cst("no_tuple"), var("NonceDB")}))});

  // raw branch: tuple(SQLquery) when inDB holds, no_tuple otherwise
  Statement raw_inner;
  raw_inner.kind = StatementKind::Select;
  raw_inner.guards.push_back(fact_guard("inDB", var("SQLquery"), false));
  raw_inner.bodies.push_back(
      {assign_fresh("NonceDB"),
       send_secure("WebApp",
                   make_concat({make_apply("tuple", var("SQLquery")),
                                var("NonceDB")}))});
  raw_inner.guards.push_back(fact_guard("inDB", var("SQLquery"), true));
  raw_inner.bodies.push_back(
      {assign_fresh("NonceDB"),
       send_secure("WebApp", make_concat({cst("no_tuple"), var("NonceDB")}))});

  Statement listen;
  listen.kind = StatementKind::Select;
  listen.guards.push_back(receive_secure(
      "WebApp", make_concat({binder("NonceWA"),
                             make_apply("sanitizedQuery", binder("SQLquery"))})));
  listen.bodies.push_back({sanitized_inner});
  listen.guards.push_back(receive_secure(
      "WebApp",
      make_concat({binder("NonceWA"), make_apply("query", binder("SQLquery"))})));
  listen.bodies.push_back({raw_inner});

  Statement loop;
  loop.kind = StatementKind::While;
  loop.bodies.push_back({listen});

  e.body.push_back(std::move(loop));
  return e;
}

} // namespace

const EntityDecl& builtin_database_entity() {
  static const EntityDecl e = build();
  return e;
}

} // namespace sqlimc
