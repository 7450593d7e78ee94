// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "sqlimc/ast.hpp"

namespace sqlimc {

/* The models ship with one fixed database entity. It answers raw queries
 * with tuple(SQLquery) when the validity predicate inDB holds and with the
 * no_tuple constant otherwise; sanitized queries only ever produce
 * no_tuple, and only when the whole query is already a tuple(...) term.
 * Every reply carries a fresh nonce so replays between the web app and the
 * database are meaningless.
 *
 * A model instantiates it with `new DB(<webapp>, <database>)`; the symbols
 * query, sanitizedQuery, tuple, no_tuple and inDB must be declared in an
 * enclosing scope. */

// The entity as the parser would produce it (identifiers unresolved).
const EntityDecl& builtin_database_entity();

// The same entity in surface syntax.
const std::string& builtin_database_source();

} // namespace sqlimc
