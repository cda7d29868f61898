#include "pllcop/arithmetic.hpp"

#include <cctype>
#include <random>

#include "pllcop/parser.hpp"

namespace pllcop::ra {

namespace {

const char* const kAxioms = R"(% reflexivity
~eq(X,X).
% symmetry
eq(X,Y) | ~eq(Y,X).
% transitivity
eq(X,Y) | eq(Y,Z) | ~eq(X,Z).
% congruence
eq(X,Y) | ~eq(s(X),s(Y)).
eq(X,Y) | ~eq(plus(X,Z),plus(Y,Z)).
eq(X,Y) | ~eq(plus(Z,X),plus(Z,Y)).
eq(X,Y) | ~eq(times(X,Z),times(Y,Z)).
eq(X,Y) | ~eq(times(Z,X),times(Z,Y)).
% recursion equations
~eq(plus(X,0),X).
~eq(plus(X,s(Y)),s(plus(X,Y))).
~eq(times(X,0),0).
~eq(times(X,s(Y)),plus(times(X,Y),X)).
)";

class ExprParser {
 public:
  explicit ExprParser(std::string_view s) : s_(s) {}

  Expr parse() {
    Expr e = sum();
    skip();
    if (pos_ != s_.size()) throw Error("trailing input in expression");
    return e;
  }

 private:
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(std::string_view tok) {
    skip();
    if (s_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }
  static Expr binary(Expr::Op op, Expr l, Expr r) {
    Expr e;
    e.op = op;
    e.lhs = std::make_shared<const Expr>(std::move(l));
    e.rhs = std::make_shared<const Expr>(std::move(r));
    return e;
  }
  Expr sum() {
    Expr e = product();
    while (eat("+")) e = binary(Expr::Op::Plus, std::move(e), product());
    return e;
  }
  Expr product() {
    Expr e = atom();
    while (eat("*") || eat("\xC2\xB7")) e = binary(Expr::Op::Times, std::move(e), atom());
    return e;
  }
  Expr atom() {
    if (eat("(")) {
      Expr e = sum();
      if (!eat(")")) throw Error("expected ')' in expression");
      return e;
    }
    skip();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ == start) throw Error("expected number in expression");
    Expr e;
    e.value = std::stoull(std::string(s_.substr(start, pos_ - start)));
    return e;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

Expr random_expr_impl(std::mt19937_64& rng, int n_ops, int bound) {
  if (n_ops == 0) {
    Expr e;
    e.value = std::uniform_int_distribution<int>(0, bound - 1)(rng);
    return e;
  }
  const int left_ops = std::uniform_int_distribution<int>(0, n_ops - 1)(rng);
  Expr e;
  e.op = std::uniform_int_distribution<int>(0, 1)(rng) == 0 ? Expr::Op::Plus : Expr::Op::Times;
  e.lhs = std::make_shared<const Expr>(random_expr_impl(rng, left_ops, bound));
  e.rhs = std::make_shared<const Expr>(random_expr_impl(rng, n_ops - 1 - left_ops, bound));
  return e;
}

}  // namespace

std::uint64_t eval_ground(const Term& t) {
  if (t.is_var()) throw Error("eval_ground: term is not ground");
  const std::string& f = t.symbol().name();
  if (f == "0" && t.arity() == 0) return 0;
  if (f == "s" && t.arity() == 1) return eval_ground(t.args()[0]) + 1;
  if (f == "plus" && t.arity() == 2) return eval_ground(t.args()[0]) + eval_ground(t.args()[1]);
  if (f == "times" && t.arity() == 2) return eval_ground(t.args()[0]) * eval_ground(t.args()[1]);
  throw Error("eval_ground: foreign symbol " + f + "/" + std::to_string(t.arity()));
}

Term numeral(std::uint64_t n) {
  Term t = Term::app("0");
  const Symbol s = Symbol::intern("s");
  for (std::uint64_t i = 0; i < n; ++i) t = Term::app(s, {t});
  return t;
}

std::uint64_t Expr::evaluate() const {
  switch (op) {
    case Op::Num: return value;
    case Op::Plus: return lhs->evaluate() + rhs->evaluate();
    case Op::Times: return lhs->evaluate() * rhs->evaluate();
  }
  return 0;
}

std::string Expr::to_string() const {
  auto wrap = [](const Expr& e) {
    return e.op == Op::Num ? e.to_string() : "(" + e.to_string() + ")";
  };
  switch (op) {
    case Op::Num: return std::to_string(value);
    case Op::Plus: return wrap(*lhs) + "+" + wrap(*rhs);
    case Op::Times: return wrap(*lhs) + "*" + wrap(*rhs);
  }
  return {};
}

Term Expr::to_term() const {
  switch (op) {
    case Op::Num: return numeral(value);
    case Op::Plus: return Term::app("plus", {lhs->to_term(), rhs->to_term()});
    case Op::Times: return Term::app("times", {lhs->to_term(), rhs->to_term()});
  }
  return {};
}

Expr parse_expr(std::string_view text) { return ExprParser(text).parse(); }

std::vector<Clause> axioms() { return parse_problem(kAxioms).clauses; }

Problem problem_from_expr(const Expr& e, std::string name) {
  Problem p;
  p.name = std::move(name);
  p.clauses = axioms();
  const std::uint64_t value = e.evaluate();
  const Term lhs = e.to_term();
  const Term rhs = numeral(value);
  if (eval_ground(lhs) != eval_ground(rhs)) throw Error("generated equation is false");
  Clause conj;
  conj.id = static_cast<int>(p.clauses.size());
  conj.literals.push_back({true, Term::app("eq", {lhs, rhs})});
  p.clauses.push_back(std::move(conj));
  p.start_clause_ids = {static_cast<int>(p.clauses.size()) - 1};
  p.metadata["equation"] = e.to_string() + "=" + std::to_string(value);
  return p;
}

Expr random_expr(std::uint64_t seed, const GeneratorConfig& cfg) {
  if (cfg.n_operators < 1) throw Error("n_operators must be >= 1");
  if (cfg.operand_bound < 1) throw Error("operand_bound must be >= 1");
  std::mt19937_64 rng(seed);
  return random_expr_impl(rng, cfg.n_operators, cfg.operand_bound);
}

Problem generate_ra_problem(std::uint64_t seed, const GeneratorConfig& cfg) {
  return problem_from_expr(random_expr(seed, cfg), "ra_" + std::to_string(seed));
}

std::vector<Problem> generate_ra_set(int count, std::uint64_t seed, const GeneratorConfig& cfg) {
  if (count < 0) throw Error("problem count must be >= 0");
  std::vector<Problem> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(generate_ra_problem(seed * kSetStride + static_cast<std::uint64_t>(i), cfg));
  return out;
}

}  // namespace pllcop::ra
