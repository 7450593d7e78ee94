// SPDX-License-Identifier: Apache-2.0

#include "sqlimc/ast.hpp"

#include <sstream>

#include "sqlimc/builtin_db.hpp"

namespace sqlimc {

const char* channel_arrow(ChannelKind c) {
  switch (c) {
    case ChannelKind::Insecure: return "->";
    case ChannelKind::Authentic: return "*->";
    case ChannelKind::Confidential: return "->*";
    case ChannelKind::Secure: return "*->*";
  }
  return "->";
}

namespace {

// Pattern-aware rendering: binders print with their `?` prefix.
std::string print_pattern(const Term& t) {
  switch (t->kind) {
    case TermKind::Constant:
      return t->name;
    case TermKind::Variable:
      return t->binder ? "?" + t->name : t->name;
    case TermKind::Wildcard:
      return "?";
    case TermKind::Apply:
      return t->name + "(" + print_pattern(t->children[0]) + ")";
    case TermKind::Enc: {
      std::string k = print_pattern(t->children[1]);
      if (t->children[1]->kind == TermKind::Concat) k = "(" + k + ")";
      return "{" + print_pattern(t->children[0]) + "}_" + k;
    }
    case TermKind::Concat: {
      std::string out;
      for (std::size_t i = 0; i < t->children.size(); ++i) {
        if (i) out += ".";
        out += print_pattern(t->children[i]);
      }
      return out;
    }
  }
  return "?";
}

class Printer {
 public:
  explicit Printer(const SpecAST& ast) : ast_(ast) {}

  std::string run() {
    out_ << "specification " << ast_.name << "\n";
    out_ << "channel_model " << ast_.channel_model << "\n\n";
    print_entity(*ast_.root, 0, /*is_root=*/true);
    return out_.str();
  }

 private:
  void indent(int n) { for (int k = 0; k < n; ++k) out_ << "  "; }

  void print_entity(const EntityDecl& e, int n, bool is_root) {
    indent(n);
    out_ << "entity " << e.name;
    std::vector<std::pair<std::string, Sort>> params = e.params;
    if (e.implicit_actor && !params.empty()) params.erase(params.begin());
    if (!params.empty()) {
      out_ << "(";
      for (std::size_t i = 0; i < params.size(); ++i) {
        if (i) out_ << ", ";
        out_ << params[i].first << ": " << sort_name(params[i].second);
      }
      out_ << ")";
    }
    out_ << " {\n";
    if (!e.symbols.empty()) {
      indent(n + 1);
      out_ << "symbols\n";
      for (const auto& d : e.symbols) {
        indent(n + 2);
        if (!d.is_public) out_ << "nonpublic ";
        out_ << d.name;
        if (d.is_function)
          out_ << "(" << sort_name(d.arg_sort) << ")";
        out_ << ": " << sort_name(d.sort) << ";\n";
      }
    }
    if (is_root && !ast_.horn_clauses.empty()) {
      indent(n + 1);
      out_ << "clauses\n";
      for (const auto& hc : ast_.horn_clauses) {
        indent(n + 2);
        out_ << hc.name << ": " << hc.head_predicate << "("
             << print_pattern(hc.head_arg) << ")";
        for (std::size_t i = 0; i < hc.body.size(); ++i) {
          out_ << (i == 0 ? " :- " : ", ");
          out_ << hc.body[i].first << "(" << print_pattern(hc.body[i].second) << ")";
        }
        out_ << ";\n";
      }
    }
    for (const auto& c : e.children) print_entity(*c, n + 1, false);
    if (!e.body.empty()) {
      indent(n + 1);
      out_ << "body {\n";
      print_statements(e.body, n + 2);
      indent(n + 1);
      out_ << "}\n";
    }
    if (is_root && !ast_.goals.empty()) {
      indent(n + 1);
      out_ << "goals\n";
      for (const auto& g : ast_.goals) {
        indent(n + 2);
        out_ << g.name << ": [](!(iknows(" << print_pattern(g.forbidden)
             << ")));\n";
      }
    }
    indent(n);
    out_ << "}\n";
  }

  void print_statements(const StatementList& body, int n) {
    for (const auto& st : body) print_statement(st, n);
  }

  void print_statement(const Statement& st, int n) {
    indent(n);
    switch (st.kind) {
      case StatementKind::Send:
        out_ << "Actor " << channel_arrow(st.channel) << " "
             << print_pattern(st.peer) << ": " << print_pattern(st.message)
             << ";\n";
        break;
      case StatementKind::Receive:
        out_ << print_pattern(st.peer) << " " << channel_arrow(st.channel)
             << " Actor: " << print_pattern(st.message) << ";\n";
        break;
      case StatementKind::Assign:
        out_ << st.var << " := "
             << (st.fresh ? "fresh()" : print_pattern(st.value)) << ";\n";
        break;
      case StatementKind::Select:
        out_ << "select {\n";
        for (std::size_t b = 0; b < st.guards.size(); ++b) {
          indent(n + 1);
          out_ << "on(" << print_guard(st.guards[b]) << "): {\n";
          print_statements(st.bodies[b], n + 2);
          indent(n + 1);
          out_ << "}\n";
        }
        indent(n);
        out_ << "}\n";
        break;
      case StatementKind::If:
        out_ << "if(" << print_guard(st.guards[0]) << ") {\n";
        print_statements(st.bodies[0], n + 1);
        indent(n);
        out_ << "}";
        if (st.bodies.size() > 1) {
          out_ << " else {\n";
          print_statements(st.bodies[1], n + 1);
          indent(n);
          out_ << "}";
        }
        out_ << "\n";
        break;
      case StatementKind::While:
        out_ << "while(true) {\n";
        print_statements(st.bodies[0], n + 1);
        indent(n);
        out_ << "}\n";
        break;
      case StatementKind::New:
        out_ << "new " << st.entity << "(";
        for (std::size_t i = 0; i < st.args.size(); ++i) {
          if (i) out_ << ", ";
          out_ << print_pattern(st.args[i]);
        }
        out_ << ");\n";
        break;
    }
  }

  std::string print_guard(const Guard& g) {
    switch (g.kind) {
      case GuardKind::Receive:
        return print_pattern(g.from) + " " + channel_arrow(g.channel) +
               " Actor: " + print_pattern(g.pattern);
      case GuardKind::Equality:
        return print_pattern(g.lhs) + " = " + print_pattern(g.rhs);
      case GuardKind::Fact:
        if (g.negated)
          return "!(" + g.predicate + "(" + print_pattern(g.arg) + "))";
        return g.predicate + "(" + print_pattern(g.arg) + ")";
    }
    return "";
  }

  const SpecAST& ast_;
  std::ostringstream out_;
};

bool pattern_equal(const Term& a, const Term& b) {
  if (!a && !b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind || a->name != b->name ||
      a->children.size() != b->children.size())
    return false;
  if (a->kind == TermKind::Variable && a->binder != b->binder) return false;
  for (std::size_t i = 0; i < a->children.size(); ++i)
    if (!pattern_equal(a->children[i], b->children[i])) return false;
  return true;
}

bool guard_equal(const Guard& a, const Guard& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case GuardKind::Receive:
      return a.channel == b.channel && pattern_equal(a.from, b.from) &&
             pattern_equal(a.pattern, b.pattern);
    case GuardKind::Equality:
      return pattern_equal(a.lhs, b.lhs) && pattern_equal(a.rhs, b.rhs);
    case GuardKind::Fact:
      return a.predicate == b.predicate && a.negated == b.negated &&
             pattern_equal(a.arg, b.arg);
  }
  return false;
}

bool statement_equal(const Statement& a, const Statement& b);

bool body_equal(const StatementList& a, const StatementList& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!statement_equal(a[i], b[i])) return false;
  return true;
}

bool statement_equal(const Statement& a, const Statement& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case StatementKind::Send:
    case StatementKind::Receive:
      if (a.channel != b.channel || !pattern_equal(a.peer, b.peer) ||
          !pattern_equal(a.message, b.message))
        return false;
      return true;
    case StatementKind::Assign:
      return a.var == b.var && a.fresh == b.fresh &&
             (a.fresh || pattern_equal(a.value, b.value));
    case StatementKind::New:
      if (a.entity != b.entity || a.args.size() != b.args.size()) return false;
      for (std::size_t i = 0; i < a.args.size(); ++i)
        if (!pattern_equal(a.args[i], b.args[i])) return false;
      return true;
    case StatementKind::Select:
    case StatementKind::If:
    case StatementKind::While: {
      if (a.guards.size() != b.guards.size() || a.bodies.size() != b.bodies.size())
        return false;
      for (std::size_t i = 0; i < a.guards.size(); ++i)
        if (!guard_equal(a.guards[i], b.guards[i])) return false;
      for (std::size_t i = 0; i < a.bodies.size(); ++i)
        if (!body_equal(a.bodies[i], b.bodies[i])) return false;
      return true;
    }
  }
  return false;
}

bool symbols_equal(const std::vector<SymbolDecl>& a,
                   const std::vector<SymbolDecl>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a[i];
    const auto& y = b[i];
    if (x.name != y.name || x.is_function != y.is_function || x.sort != y.sort ||
        x.is_public != y.is_public || x.is_constant != y.is_constant)
      return false;
    if (x.is_function && x.arg_sort != y.arg_sort) return false;
  }
  return true;
}

Term rewrite_queries(const Term& t) {
  if (!t) return t;
  switch (t->kind) {
    case TermKind::Constant:
    case TermKind::Variable:
    case TermKind::Wildcard:
      return t;
    case TermKind::Apply: {
      Term arg = rewrite_queries(t->children[0]);
      if (t->name == "query") return make_apply("sanitizedQuery", arg, t->is_public);
      return make_apply(t->name, arg, t->is_public);
    }
    case TermKind::Enc:
      return make_enc(rewrite_queries(t->children[0]),
                      rewrite_queries(t->children[1]));
    case TermKind::Concat: {
      std::vector<Term> parts;
      for (const auto& c : t->children) parts.push_back(rewrite_queries(c));
      return make_concat(std::move(parts));
    }
  }
  return t;
}

void rewrite_statement(Statement& st) {
  if (st.peer) st.peer = rewrite_queries(st.peer);
  if (st.message) st.message = rewrite_queries(st.message);
  if (st.value) st.value = rewrite_queries(st.value);
  for (auto& a : st.args) a = rewrite_queries(a);
  for (auto& g : st.guards) {
    if (g.from) g.from = rewrite_queries(g.from);
    if (g.pattern) g.pattern = rewrite_queries(g.pattern);
    if (g.lhs) g.lhs = rewrite_queries(g.lhs);
    if (g.rhs) g.rhs = rewrite_queries(g.rhs);
    if (g.arg) g.arg = rewrite_queries(g.arg);
  }
  for (auto& body : st.bodies)
    for (auto& s : body) rewrite_statement(s);
}

std::shared_ptr<EntityDecl> rewrite_entity(const EntityDecl& e) {
  auto out = std::make_shared<EntityDecl>(e);
  // the database template keeps its raw branch; the rewrite concerns the
  // queries the modeled application issues
  if (e.name == builtin_database_entity().name) return out;
  for (auto& st : out->body) rewrite_statement(st);
  out->children.clear();
  for (const auto& c : e.children) out->children.push_back(rewrite_entity(*c));
  return out;
}

} // namespace

bool entity_equal(const EntityDecl& a, const EntityDecl& b) {
  if (a.name != b.name || a.params != b.params) return false;
  if (!symbols_equal(a.symbols, b.symbols)) return false;
  if (!body_equal(a.body, b.body)) return false;
  if (a.children.size() != b.children.size()) return false;
  for (std::size_t i = 0; i < a.children.size(); ++i)
    if (!entity_equal(*a.children[i], *b.children[i])) return false;
  return true;
}

std::string print_spec(const SpecAST& ast) { return Printer(ast).run(); }

bool spec_equal(const SpecAST& a, const SpecAST& b) {
  if (a.name != b.name || a.channel_model != b.channel_model) return false;
  if (!entity_equal(*a.root, *b.root)) return false;
  if (a.horn_clauses.size() != b.horn_clauses.size()) return false;
  for (std::size_t i = 0; i < a.horn_clauses.size(); ++i) {
    const auto& x = a.horn_clauses[i];
    const auto& y = b.horn_clauses[i];
    if (x.name != y.name || x.head_predicate != y.head_predicate ||
        !pattern_equal(x.head_arg, y.head_arg) || x.body.size() != y.body.size())
      return false;
    for (std::size_t j = 0; j < x.body.size(); ++j)
      if (x.body[j].first != y.body[j].first ||
          !pattern_equal(x.body[j].second, y.body[j].second))
        return false;
  }
  if (a.goals.size() != b.goals.size()) return false;
  for (std::size_t i = 0; i < a.goals.size(); ++i)
    if (a.goals[i].name != b.goals[i].name ||
        !pattern_equal(a.goals[i].forbidden, b.goals[i].forbidden))
      return false;
  return true;
}

SpecAST sanitize_all_queries(const SpecAST& ast) {
  SpecAST out;
  out.name = ast.name;
  out.channel_model = ast.channel_model;
  out.horn_clauses = ast.horn_clauses;
  out.goals = ast.goals;
  out.root = rewrite_entity(*ast.root);
  return out;
}

} // namespace sqlimc
