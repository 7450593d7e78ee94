// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace sqlimc {

/* The message algebra: ground messages are built from constants by
 * concatenation (kept flat, so a.(b.c) and (a.b).c are the same term),
 * application of uninterpreted unary function symbols and encryption.
 * Patterns reuse the same node type: variables act as binders and a
 * wildcard node matches any ground term without binding anything. */

enum class Sort : std::uint8_t { Agent, Message, Text, Fact };

const char* sort_name(Sort s);

enum class TermKind : std::uint8_t {
  Constant,
  Variable,
  Apply,
  Enc,
  Concat,
  Wildcard,
};

struct TermNode;
using Term = std::shared_ptr<const TermNode>;

struct TermNode {
  TermKind kind;
  Sort sort = Sort::Message;
  std::string name;          // constant / variable / function symbol name
  bool is_public = false;    // constants: in the initial intruder knowledge
  bool fresh_engine = false; // constants minted by rule fresh-variables
  bool fresh_intruder = false; // constants minted for unconstrained choices
  bool binder = false;       // variables: `?X` binding occurrence
  std::vector<Term> children; // Apply: [arg]; Enc: [payload, key]; Concat: parts
  std::size_t hash = 0;      // structural (kind, name, children)
};

std::size_t term_hash(const Term& t);

// --- constructors ------------------------------------------------------

Term make_constant(std::string name, Sort sort = Sort::Message, bool is_public = false);
Term make_fresh_engine_constant(std::string name, Sort sort);
Term make_fresh_intruder_constant(std::string name);
Term make_variable(std::string name, Sort sort = Sort::Message, bool binder = false);
Term make_wildcard();
Term make_apply(std::string symbol, Term arg, bool symbol_public = false);
Term make_enc(Term payload, Term key);

// Builds a canonical concatenation: nested Concat parts are spliced in
// place and a single-element list collapses to the element itself.
Term make_concat(std::vector<Term> parts);

// Re-canonicalizes an arbitrary tree (flattens any nested Concat).
Term canonicalize(const Term& t);

// --- predicates and traversal ------------------------------------------

bool term_equal(const Term& a, const Term& b);

// Total order used everywhere a deterministic tie-break is needed:
// Constant < Variable < Apply < Enc < Concat, then by name / children.
std::strong_ordering term_order(const Term& a, const Term& b);

struct TermLess {
  bool operator()(const Term& a, const Term& b) const {
    return term_order(a, b) == std::strong_ordering::less;
  }
};

bool is_ground(const Term& t);
bool has_wildcard(const Term& t);

// Submessage relation: t occurs in u at some subterm position (every
// Concat part, Apply argument and Enc payload/key, recursively).
bool is_submessage(const Term& t, const Term& u);

// All subterm positions of t, t itself included, deduplicated.
std::vector<Term> subterms(const Term& t);

// Variables occurring in t, by name, in first-occurrence order.
std::vector<std::string> variables_of(const Term& t);

// --- substitutions ------------------------------------------------------

class Substitution {
 public:
  Substitution() = default;

  bool bind(const std::string& var, Term value); // false on conflicting rebind
  const Term* lookup(const std::string& var) const;
  bool empty() const { return map_.empty(); }
  std::size_t size() const { return map_.size(); }
  const std::map<std::string, Term>& entries() const { return map_; }

  // Compares range terms in domain-name order; used to sort the
  // candidate substitutions of a rule deterministically.
  std::strong_ordering compare(const Substitution& other) const;

 private:
  std::map<std::string, Term> map_;
};

// Homomorphic replacement of variables; the result is re-canonicalized.
Term apply_subst(const Substitution& s, const Term& t);

// Syntactic matching of a pattern against a ground term. Variables bind
// on first occurrence and must agree on repeats; a wildcard matches any
// ground term without binding. Inside a concatenation a variable or
// wildcard may absorb several consecutive parts, resolved by giving
// earlier positions as few parts as possible.
std::optional<Substitution> match(const Term& pattern, const Term& subject);
bool match_into(const Term& pattern, const Term& subject, Substitution& binds);

// Canonical textual rendering: constants and variables by name,
// concatenation with `.`, application as f(arg), encryption {payload}_key.
std::string to_string(const Term& t);

} // namespace sqlimc
