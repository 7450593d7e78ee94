// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

#include "sqlimc/ast.hpp"

namespace sqlimc {

struct ParseError : std::runtime_error {
  ParseError(int line, int col, const std::string& message)
      : std::runtime_error("parse error at " + std::to_string(line) + ":" +
                           std::to_string(col) + ": " + message),
        line(line), col(col), detail(message) {}
  int line;
  int col;
  std::string detail;
};

struct ValidationError : std::runtime_error {
  ValidationError(int line, const std::string& message)
      : std::runtime_error("validation error at line " + std::to_string(line) +
                           ": " + message),
        line(line), detail(message) {}
  int line;
  std::string detail;
};

// Parses and validates a model. All identifiers are resolved against the
// declared symbol tables, concatenations are canonicalized, `?X` becomes a
// binder and a bare `?` a wildcard. Throws ParseError / ValidationError.
SpecAST parse_spec(const std::string& text);

// Parses a single entity declaration without resolving identifiers; used
// for entity templates that validate against the including model's scope.
EntityDecl parse_entity_source(const std::string& text);

} // namespace sqlimc
