// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>

#include "sqlimc/trace.hpp"

namespace sqlimc {

struct AbortedByUser : std::runtime_error {
  AbortedByUser() : std::runtime_error("concretization aborted") {}
};

struct MissingAnswer : std::runtime_error {
  explicit MissingAnswer(const std::string& m)
      : std::runtime_error("missing answer: " + m) {}
};

struct ConcretizationAnswers {
  std::string webapp_name = "webapplication";
  std::string database_name = "database";
  std::vector<std::string> urls; // one per injected step, in step order
  std::string post;              // "k=v&k=v", empty when none
};

struct ConcretizationPlan {
  AttackKind kind; // the flavor that is being concretized (drives the tool)
  std::vector<std::string> urls;
  std::string post;
  std::vector<std::string> commands;
};

// Indices (into trace.steps) of the steps that carry an injection.
std::vector<std::size_t> injected_steps(const AttackTrace& trace);

// Whether the trace exploits extracted data (sqlmap territory) as opposed
// to a plain authentication bypass (curl territory). Data extraction and
// second-order traces always do; an auth-bypass trace does when the
// intruder replays a tuple(...) it was handed earlier.
bool exploits_extraction(const AttackTrace& trace);

// Pure command synthesis from captured answers. Emits one command per
// injected step: `sqlmap.py -u "<URL>"[ --data "<POST>"] -a` for
// extraction-flavored attacks, `curl[ -d "<POST>"] "<URL>"` with the
// values masked as `?` otherwise. Throws MissingAnswer when a URL for an
// injected step is absent.
ConcretizationPlan concretize(const AttackTrace& trace,
                              const ConcretizationAnswers& answers);

// Interactive question/answer loop (entity names, one URL per injected
// step with a confirmation echo, optional POST parameters). Throws
// AbortedByUser on end-of-input at a required question.
ConcretizationAnswers run_dialogue(const AttackTrace& trace, std::istream& in,
                                   std::ostream& out);

std::string shell_quote(const std::string& s); // escapes ", \, $ and `

} // namespace sqlimc
