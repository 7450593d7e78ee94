// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <set>
#include <unordered_map>
#include <variant>

#include "sqlimc/rules.hpp"

namespace sqlimc {

struct EngineError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ResourceLimit : std::runtime_error {
  explicit ResourceLimit(long budget)
      : std::runtime_error("node budget of " + std::to_string(budget) +
                           " exceeded") {}
};

struct EngineOptions {
  int max_depth = 16;     // bound on message exchanges along a trace
  long node_budget = 1000000;
  bool indb_loose = false; // loose: sqli anywhere among the parts counts
};

struct SystemState {
  std::vector<FactAtom> facts; // sorted by atom_order, unique
  long fresh_counter = 1;
  mutable std::size_t hash_cache = 0; // lazily computed
};

// How an unconstrained receive binder was filled in.
enum class ChoiceOrigin : std::uint8_t {
  Known,        // replayed a term already derivable from the knowledge
  Fresh,        // an intruder-invented atom (rendered Name_k)
  SqliPayload,  // the injection constant itself
  SqliExtended, // a candidate extended with a trailing injection constant
};

struct SynthChoice {
  std::string var;     // rule variable
  std::string display; // source-level name (e.g. "Username")
  Term value;
  ChoiceOrigin origin;
};

struct GroundFiring {
  int rule_index = -1;
  Substitution subst;
  std::vector<FactAtom> consumed; // ground instances of the positive atoms
  std::vector<FactAtom> produced;
  Term synth_message; // intruder-composed message, receive rules only
  std::vector<SynthChoice> choices;
};

struct SearchNode {
  std::shared_ptr<const SearchNode> parent;
  SystemState state;
  std::optional<GroundFiring> via;
  int msg_depth = 0;
  long length = 0;
};
using NodePtr = std::shared_ptr<const SearchNode>;

struct AttackFound {
  std::vector<NodePtr> path; // root first
  std::string goal;
};
struct SafeUpToDepth {
  int bound;
};
struct Exhausted {
  bool safe;
};
using SearchResult = std::variant<AttackFound, SafeUpToDepth, Exhausted>;

struct SearchStats {
  long nodes = 0;
  int bound_reached = 0;
  double elapsed_ms = 0.0;
};

// One enumerated way to fire a rule.
struct Candidate {
  Substitution subst;
  std::vector<FactAtom> consumed_linear;
  Term synth_message;
  std::vector<SynthChoice> choices;
  int reserved_fresh = 0; // intruder atoms reserved during enumeration
};

// Deterministic and single-threaded: the engine keeps per-state caches, so
// share states between engines, not an engine between threads.
class Engine {
 public:
  Engine(TransitionSystem ts, EngineOptions opts = {});
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  const TransitionSystem& system() const { return ts_; }
  const EngineOptions& options() const { return opts_; }

  SystemState initial_state() const;

  // Materialized closure: the state facts plus the decomposition closure
  // of the intruder knowledge plus facts derived by non-schema clauses.
  std::vector<FactAtom> closure(const SystemState& s) const;

  // Dolev-Yao derivability of a ground term from the state's knowledge.
  bool derivable(const SystemState& s, const Term& t) const;

  // Schema-clause evaluation (the query-validity predicate): true when a
  // fact-schema head matches t, honoring the strict/loose switch.
  bool holds_fact(const SystemState& s, const std::string& predicate,
                  const Term& t) const;

  // All substitutions firing rules[rule_index] on s, deterministically
  // ordered. Conditions: positive atoms covered (knowledge atoms via
  // derivability), equalities hold, no forbidden atom present,
  // inequalities hold.
  std::vector<Candidate> applicable(const SystemState& s, int rule_index) const;

  // S' = (S \ consumed) + produced, with knowledge atoms persistent and
  // fresh variables instantiated to globally new constants.
  SystemState step(const SystemState& s, int rule_index, const Candidate& c,
                   GroundFiring* firing = nullptr) const;

  // Goal violated by s, if any (declaration order).
  std::optional<std::string> violated_goal(const SystemState& s) const;

  // Iterative-deepening search for an attack state.
  SearchResult search(SearchStats* stats = nullptr) const;

 private:
  struct View; // per-state caches
  struct Entry;
  Entry& entry(const SystemState& s) const;
  const std::vector<Candidate>& applicable_on(Entry& e, int rule_index) const;
  std::optional<std::string> violated_goal_on(const Entry& e) const;
  std::vector<Candidate> compute_applicable(const SystemState& s,
                                            int rule_index) const;

  bool compose(const View& v, const Term& t) const;

  TransitionSystem ts_;
  EngineOptions opts_;
  Term sqli_;
  mutable std::unordered_map<std::size_t, std::vector<std::unique_ptr<Entry>>>
      cache_;
  mutable std::size_t cache_entries_ = 0;
};

// Convenience: facts as a sorted set-like vector.
void insert_fact(std::vector<FactAtom>& facts, FactAtom a);
bool contains_fact(const std::vector<FactAtom>& facts, const FactAtom& a);
void erase_fact(std::vector<FactAtom>& facts, const FactAtom& a);

} // namespace sqlimc
