// Robinson Arithmetic problems over successor numerals.
//
// Signature: constant 0, unary s, binary plus/times, equality predicate eq.
// A generated problem is the fixed axiom matrix (equality axioms plus the
// recursion equations for + and *) followed by the conjecture clause
// eq(T, N), which is the only start clause.
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "pllcop/term.hpp"

namespace pllcop::ra {

// Evaluates a ground term built from 0, s, plus, times.
std::uint64_t eval_ground(const Term& t);

Term numeral(std::uint64_t n);

// Arithmetic expression over small naturals.
struct Expr {
  enum class Op { Num, Plus, Times };
  Op op = Op::Num;
  std::uint64_t value = 0;
  std::shared_ptr<const Expr> lhs, rhs;

  std::uint64_t evaluate() const;
  std::string to_string() const;  // fully parenthesized infix, e.g. ((3+4)*2)+6
  Term to_term() const;
};

// Parses infix expressions with + and * (also '·'), parentheses and decimal
// literals. `*` binds tighter than `+`.
Expr parse_expr(std::string_view text);

// The axiom clauses, in clause-id order 0..n-1.
std::vector<Clause> axioms();

// Builds the problem proving `e = value(e)`.
Problem problem_from_expr(const Expr& e, std::string name);

struct GeneratorConfig {
  int n_operators = 3;
  int operand_bound = 10;  // operands are drawn from [0, operand_bound)
};

Expr random_expr(std::uint64_t seed, const GeneratorConfig& cfg);
Problem generate_ra_problem(std::uint64_t seed, const GeneratorConfig& cfg = {});

// `count` problems with generator seeds seed * kSetStride + i, so sets with
// different seeds do not overlap.
inline constexpr std::uint64_t kSetStride = 1000000;
std::vector<Problem> generate_ra_set(int count, std::uint64_t seed, const GeneratorConfig& cfg = {});

}  // namespace pllcop::ra
