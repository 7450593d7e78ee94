// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "sqlimc/ast.hpp"

namespace sqlimc {

/* Advisory checks for the modeling guidelines: a branch that consumes a
 * tuple(...) database response should forward it to the client (otherwise
 * no injection is observable there), queries built without any
 * client-supplied variable always come back as no_tuple, and goals over
 * public constants are trivially violated. */
std::vector<std::string> validate_webapp_model(const SpecAST& ast);

} // namespace sqlimc
