#pragma once

#include <stdexcept>
#include <string>

#include "dynext/expr.hpp"

namespace dynext {

struct ParseError : std::runtime_error {
  ParseError(const std::string& what, size_t position)
      : std::runtime_error(what + " (at offset " + std::to_string(position) + ")"),
        pos(position) {}
  size_t pos;
};

// Grammar: identifiers [A-Za-z][A-Za-z0-9_]*, integer literals, operators
// + - * / ^ with the usual precedence, parentheses, and calls sin cos tan
// cot exp ln. Rational literals p/q come out of constant folding.
Expr parse_expr(const std::string& text);

}  // namespace dynext
