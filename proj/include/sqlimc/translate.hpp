// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>

#include "sqlimc/rules.hpp"

namespace sqlimc {

struct TranslationError : std::runtime_error {
  explicit TranslationError(const std::string& m)
      : std::runtime_error("translation error: " + m) {}
};

// Compiles a validated model into the transition system: one state
// predicate per entity instance, one rule per program point, goals as
// attack states, and an initial state holding the instance predicates,
// the child hierarchy and the intruder's initial knowledge.
TransitionSystem translate(const SpecAST& ast);

// Renames rule variables apart (suffix _r<index>); translate() already
// returns a renamed system, this is idempotent.
TransitionSystem rename_apart(const TransitionSystem& ts);

} // namespace sqlimc
