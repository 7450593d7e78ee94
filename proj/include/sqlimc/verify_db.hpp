// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "sqlimc/term.hpp"

namespace sqlimc {

/* Property check of the builtin database entity over an enumerated query
 * universe. For every ground query Q (built from three atoms plus the
 * injection constant, tuple applications and concatenations) whose final
 * part is the injection constant:
 *   - the raw path query(Q) answers tuple(Q);
 *   - the sanitized path sanitizedQuery(Q) never answers (the whole-term
 *     tuple(?) check rejects it).
 * Legitimate sanitized queries of the form tuple(x) are also driven and
 * must come back as no_tuple. */

struct DbCheckReport {
  int depth = 0;
  long queries = 0;       // trailing-injection universe size
  long raw_ok = 0;
  long sanitized_ok = 0;
  long legit = 0;         // tuple(x) queries answered with no_tuple
  std::vector<std::string> counterexamples; // capped at 5
};

DbCheckReport check_database_behaviour(int depth_bound = 3);

std::string render_report(const DbCheckReport& r);

} // namespace sqlimc
