// SPDX-License-Identifier: Apache-2.0

#include "sqlimc/rules.hpp"

#include <sstream>

namespace sqlimc {

std::string atom_to_string(const FactAtom& a) {
  std::string out = a.predicate + "(";
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (i) out += ", ";
    out += to_string(a.args[i]);
  }
  return out + ")";
}

std::strong_ordering atom_order(const FactAtom& a, const FactAtom& b) {
  if (auto c = a.predicate <=> b.predicate; c != std::strong_ordering::equal)
    return c;
  if (auto c = a.args.size() <=> b.args.size(); c != std::strong_ordering::equal)
    return c;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (auto c = term_order(a.args[i], b.args[i]); c != std::strong_ordering::equal)
      return c;
  return std::strong_ordering::equal;
}

bool atom_equal(const FactAtom& a, const FactAtom& b) {
  if (a.args.size() != b.args.size() || a.predicate != b.predicate) return false;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!term_equal(a.args[i], b.args[i])) return false;
  return true;
}

FactAtom atom_apply(const Substitution& s, const FactAtom& a) {
  FactAtom out;
  out.predicate = a.predicate;
  out.args.reserve(a.args.size());
  for (const auto& t : a.args) out.args.push_back(apply_subst(s, t));
  return out;
}

bool atom_is_ground(const FactAtom& a) {
  for (const auto& t : a.args)
    if (!is_ground(t)) return false;
  return true;
}

std::string entity_for_agent(const TransitionSystem& ts, const Term& agent) {
  if (agent->kind == TermKind::Constant) {
    auto it = ts.agent_entity.find(agent->name);
    if (it != ts.agent_entity.end()) return it->second;
  }
  return "i"; // anything that is not a model instance is the intruder side
}

std::string emit_transition_system(const TransitionSystem& ts) {
  std::ostringstream out;
  out << "init:\n";
  for (const auto& a : ts.initial) out << "  " << atom_to_string(a) << "\n";
  out << "horn:\n";
  for (const auto& hc : ts.horn) {
    out << "  " << hc.name << ": " << hc.head_predicate << "("
        << to_string(hc.head_arg) << ")";
    for (std::size_t i = 0; i < hc.body.size(); ++i) {
      out << (i == 0 ? " :- " : ", ") << hc.body[i].first << "("
          << to_string(hc.body[i].second) << ")";
    }
    out << "\n";
  }
  out << "attack_states:\n";
  for (const auto& g : ts.attack_states)
    out << "  " << g.goal << ": " << atom_to_string(g.pattern) << "\n";
  out << "rules:\n";
  for (const auto& r : ts.rules) {
    out << "rule " << r.name << ":\n";
    out << "  LHS:";
    for (const auto& a : r.consume) out << "\n    " << atom_to_string(a);
    out << "\n  NEG:";
    for (const auto& a : r.forbid) out << "\n    " << atom_to_string(a);
    out << "\n  COND:";
    for (const auto& [l, rh] : r.require_eq)
      out << "\n    " << to_string(l) << " = " << to_string(rh);
    for (const auto& [l, rh] : r.require_neq)
      out << "\n    " << to_string(l) << " != " << to_string(rh);
    out << "\n  FRESH:";
    for (const auto& [v, s] : r.fresh_vars) out << "\n    " << v << ": " << sort_name(s);
    out << "\n  RHS:";
    for (const auto& a : r.produce) out << "\n    " << atom_to_string(a);
    out << "\n";
  }
  return out.str();
}

} // namespace sqlimc
