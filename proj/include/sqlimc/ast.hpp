// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sqlimc/term.hpp"

namespace sqlimc {

/* Parsed form of a .sqlf model: a hierarchy of entity declarations with
 * symbol tables, statement bodies, Horn clauses and goals. The surface
 * syntax is a deliberately small behavioural-specification language:
 * entities exchange messages over four channel kinds, branch on guards
 * and build queries from uninterpreted function symbols. */

enum class ChannelKind : std::uint8_t { Insecure, Authentic, Confidential, Secure };

const char* channel_arrow(ChannelKind c); // "->", "*->", "->*", "*->*"

struct SymbolDecl {
  std::string name;
  bool is_function = false; // covers predicates: result sort `fact`
  Sort sort = Sort::Message;     // plain symbol sort / function result sort
  Sort arg_sort = Sort::Message; // functions only
  bool is_public = true;         // `nonpublic` flips this
  bool is_constant = false;      // lower-case names; upper-case are variables
  int line = 0;
};

struct Guard;
struct Statement;
using StatementList = std::vector<Statement>;

enum class StatementKind : std::uint8_t { Send, Receive, Assign, Select, If, While, New };

struct Statement {
  StatementKind kind;
  int line = 0;

  // Send: Actor -> peer : message.  Receive: peer -> Actor : pattern
  // (peer is a wildcard term when the sender is written `?`).
  Term peer;
  ChannelKind channel = ChannelKind::Insecure;
  Term message;

  // Assign: var := value, or var := fresh()
  std::string var;
  bool fresh = false;
  Term value;

  // Select: guards[i] / bodies[i] per branch.
  // If: guards[0], bodies[0] = then, bodies[1] = else (may be absent).
  // While: bodies[0].
  std::vector<Guard> guards;
  std::vector<StatementList> bodies;

  // New: entity(args)
  std::string entity;
  std::vector<Term> args;
};

enum class GuardKind : std::uint8_t { Receive, Equality, Fact };

struct Guard {
  GuardKind kind;
  int line = 0;
  // Receive guard
  Term from;
  ChannelKind channel = ChannelKind::Insecure;
  Term pattern;
  // Equality guard: lhs = rhs (rhs may contain wildcards/binders)
  Term lhs;
  Term rhs;
  // Fact guard: [!]predicate(arg)
  std::string predicate;
  Term arg;
  bool negated = false;
};

struct EntityDecl {
  std::string name;
  std::vector<std::pair<std::string, Sort>> params; // Actor first when declared
  bool implicit_actor = false; // Actor was injected, not argument-bound
  std::vector<SymbolDecl> symbols;
  StatementList body;
  std::vector<std::shared_ptr<EntityDecl>> children;
  int line = 0;
};

struct HornClause {
  std::string name;
  std::string head_predicate;
  Term head_arg;                                      // pattern
  std::vector<std::pair<std::string, Term>> body;     // empty: fact schema
};

struct Goal {
  std::string name;
  Term forbidden; // argument of the globally-negated knowledge predicate
  int line = 0;
};

struct SpecAST {
  std::string name;
  std::string channel_model;
  std::shared_ptr<EntityDecl> root;
  std::vector<HornClause> horn_clauses;
  std::vector<Goal> goals;
};

// Pretty-prints a SpecAST back to surface syntax; parsing the result
// yields a structurally equal AST.
std::string print_spec(const SpecAST& ast);

bool spec_equal(const SpecAST& a, const SpecAST& b);
bool entity_equal(const EntityDecl& a, const EntityDecl& b);

// Rewrites every query(...) application into sanitizedQuery(...); used by
// the prepared-statement safety check.
SpecAST sanitize_all_queries(const SpecAST& ast);

} // namespace sqlimc
