#pragma once

#include <string>
#include <variant>

#include "dn/ast.hpp"

namespace dn {

struct SourceFile {
  std::string text;
  std::string origin = "<stdin>";
};

struct ParseError {
  std::string message;
  int line = 1;    // 1-based
  int column = 1;  // 1-based
};

using ParseTermResult = std::variant<TermPtr, ParseError>;
using ParseTypeResult = std::variant<TypePtr, ParseError>;

ParseTermResult parse_term(const SourceFile& src);
ParseTypeResult parse_type(const SourceFile& src);

// Round trip: parse_term(print_term(t)) is alpha-equal to t.
std::string print_term(const TermPtr& t);

// Shortest decimal that reads back to the same double, always with a '.'
// or exponent so it parses as a real literal.
std::string format_real(double x);

}  // namespace dn
