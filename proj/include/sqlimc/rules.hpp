// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <vector>

#include "sqlimc/ast.hpp"
#include "sqlimc/term.hpp"

namespace sqlimc {

/* The low-level transition system. States are finite sets of ground fact
 * atoms; a rule fires when its positive atoms are covered by the closure
 * of the state, its equality conditions hold, no forbidden atom is
 * derivable and the inequalities hold. Firing removes the consumed linear
 * facts and adds the produced ones, with fresh variables instantiated to
 * constants that do not occur anywhere in the state.
 *
 * Reserved predicates:
 *   iknows/1          intruder knowledge (persistent, never consumed away)
 *   state_<Entity>/n  control state of one entity instance
 *   secure_msg/3      a message in transit on a secure channel (linear)
 *   child/2           instantiation hierarchy (inert)
 *   inDB/1            query validity, evaluated through the Horn clauses
 */

struct FactAtom {
  std::string predicate;
  std::vector<Term> args;
};

std::string atom_to_string(const FactAtom& a);
std::strong_ordering atom_order(const FactAtom& a, const FactAtom& b);
bool atom_equal(const FactAtom& a, const FactAtom& b);
FactAtom atom_apply(const Substitution& s, const FactAtom& a);
bool atom_is_ground(const FactAtom& a);

// What a rule firing means for the attack trace.
enum class MsgRole : std::uint8_t {
  None,          // internal step (assignment, guard)
  ReceiveClient, // consumes an intruder-composed message
  SendSecure,    // produces a secure in-transit message
  SendClient,    // produces a message the intruder reads
};

struct TransitionRule {
  std::string name;
  std::vector<FactAtom> consume;                   // positive atoms (PP)
  std::vector<FactAtom> forbid;                    // negative atoms (NP)
  std::vector<std::pair<Term, Term>> require_eq;   // conditions (PC)
  std::vector<std::pair<Term, Term>> require_neq;  // negative conditions (NC)
  std::vector<std::pair<std::string, Sort>> fresh_vars; // (V)
  std::vector<FactAtom> produce;                   // result atoms (R)

  // trace metadata
  std::string entity;   // declaring entity name
  int instance_id = 0;
  MsgRole role = MsgRole::None;
  Term send_to;                                 // sends: receiver term
  std::map<std::string, std::string> var_display; // rule var -> source name
};

struct AttackState {
  std::string goal;
  FactAtom pattern; // iknows(forbidden)
};

struct TransitionSystem {
  std::vector<TransitionRule> rules;
  bool renamed_apart = false;
  std::vector<FactAtom> initial;
  std::vector<HornClause> horn;
  std::vector<AttackState> attack_states;

  // agent constant name -> entity name, for rendering traces
  std::map<std::string, std::string> agent_entity;
  // names of public constants (the intruder's initial vocabulary)
  std::vector<Term> public_constants;
};

std::string entity_for_agent(const TransitionSystem& ts, const Term& agent);

// Structured text dump (sections LHS/NEG/COND/FRESH/RHS per rule).
std::string emit_transition_system(const TransitionSystem& ts);

} // namespace sqlimc
