// Matrix file format.
//
//   % comment
//   #start: 0 2          optional; selects start clauses by id
//   #<key>: <value>      any other header becomes problem metadata
//   p(X) | ~q(f(X),a).   one clause per line, literals joined by '|'
//
// Variables are tokens starting with an uppercase letter or '_', numbered per
// clause in order of first occurrence. Everything else is a symbol.
#pragma once

#include <string>
#include <string_view>

#include "pllcop/term.hpp"

namespace pllcop {

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, int line, int column);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

Problem parse_problem(std::string_view text, std::string name = "");
Problem load_problem(const std::string& path);

// Inverse of parse_problem up to whitespace and comments.
std::string print_problem(const Problem& p);

// Converts TPTP `cnf(name, role, (l1 | l2 | ...)).` lines into a matrix: each
// CNF clause becomes the conjunction of its negated literals, and
// negated_conjecture clauses are the start clauses. Only plain CNF without
// equality-specific syntax is understood.
Problem convert_tptp_cnf(std::string_view text, std::string name = "");

}  // namespace pllcop
