// First-order terms, literals, clauses and substitutions.
//
// Terms are immutable and shared. Variables are plain integer ids; clause
// copies are renamed apart by adding an offset to every variable id.
// Substitutions are triangular: a binding may mention other bound variables,
// and `apply` resolves them fully.
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pllcop {

using VarId = std::int32_t;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Interned function / predicate name. Comparison is by identity.
class Symbol {
 public:
  struct Entry {
    std::string name;
    std::uint64_t name_hash;  // stable across processes, used for feature hashing
    std::int32_t id;          // interning order, only stable within a process
  };

  Symbol() = default;
  static Symbol intern(std::string_view name);

  const std::string& name() const { return entry_->name; }
  std::uint64_t name_hash() const { return entry_->name_hash; }
  std::int32_t id() const { return entry_->id; }
  bool valid() const { return entry_ != nullptr; }

  friend bool operator==(Symbol a, Symbol b) { return a.entry_ == b.entry_; }
  friend bool operator!=(Symbol a, Symbol b) { return a.entry_ != b.entry_; }

 private:
  explicit Symbol(const Entry* e) : entry_(e) {}
  const Entry* entry_ = nullptr;
};

std::uint64_t stable_hash(std::string_view s);
std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t v);

class Term {
 public:
  Term() = default;  // the null term; only used as "unbound" marker

  static Term variable(VarId id);
  static Term app(Symbol f, std::vector<Term> args = {});
  static Term app(std::string_view f, std::vector<Term> args = {}) {
    return app(Symbol::intern(f), std::move(args));
  }

  bool null() const { return node_ == nullptr; }
  bool is_var() const { return node_->var >= 0; }
  VarId var() const { return node_->var; }
  Symbol symbol() const { return node_->sym; }
  std::span<const Term> args() const { return node_->args; }
  std::size_t arity() const { return node_->args.size(); }
  bool ground() const { return node_->ground; }
  // Largest variable id occurring in the term, or -1 when ground.
  VarId max_var() const { return node_->max_var; }
  std::size_t size() const { return node_->size; }

  bool same_node(const Term& o) const { return node_ == o.node_; }

  friend bool operator==(const Term& a, const Term& b);
  friend bool operator!=(const Term& a, const Term& b) { return !(a == b); }

 private:
  struct Node {
    VarId var = -1;
    Symbol sym;
    std::vector<Term> args;
    bool ground = true;
    VarId max_var = -1;
    std::uint32_t size = 1;
  };
  std::shared_ptr<const Node> node_;
};

struct Literal {
  bool positive = true;
  Term atom;  // predicate application

  Literal() = default;
  Literal(bool pos, Term a) : positive(pos), atom(std::move(a)) {}

  Symbol predicate() const { return atom.symbol(); }
  std::span<const Term> args() const { return atom.args(); }
  Literal negate() const { return {!positive, atom}; }

  friend bool operator==(const Literal& a, const Literal& b) {
    return a.positive == b.positive && a.atom == b.atom;
  }
  friend bool operator!=(const Literal& a, const Literal& b) { return !(a == b); }
};

struct Clause {
  int id = 0;
  std::vector<Literal> literals;

  // Number of distinct variable ids used (max id + 1).
  VarId num_vars() const;

  friend bool operator==(const Clause& a, const Clause& b) {
    return a.id == b.id && a.literals == b.literals;
  }
};

struct Problem {
  std::string name;
  std::vector<Clause> clauses;
  std::vector<int> start_clause_ids;
  std::map<std::string, std::string> metadata;

  const Clause& clause(int id) const;

  friend bool operator==(const Problem& a, const Problem& b) {
    return a.name == b.name && a.clauses == b.clauses &&
           a.start_clause_ids == b.start_clause_ids && a.metadata == b.metadata;
  }
};

// Records which variables were bound so a tentative unification can be undone.
using Trail = std::vector<VarId>;

class Substitution {
 public:
  Substitution() = default;

  bool bound(VarId v) const {
    return v >= 0 && static_cast<std::size_t>(v) < bindings_.size() && !bindings_[v].null();
  }
  // nullptr when unbound
  const Term* lookup(VarId v) const { return bound(v) ? &bindings_[v] : nullptr; }
  void bind(VarId v, Term t, Trail* trail = nullptr);
  void undo(Trail& trail, std::size_t mark);

  std::size_t num_bound() const { return count_; }
  // (var, term) pairs in variable order
  std::vector<std::pair<VarId, Term>> bindings() const;

  // Fully resolve all bound variables in `t`.
  Term apply(const Term& t) const;
  Literal apply(const Literal& l) const { return {l.positive, apply(l.atom)}; }
  // Rebinds every variable to its fully resolved term.
  Substitution normalized() const;

  friend bool operator==(const Substitution& a, const Substitution& b);

 private:
  std::vector<Term> bindings_;
  std::size_t count_ = 0;
};

// In-place unification with occurs check. Variables of `b` are shifted by
// `b_offset`. On failure the substitution is left as it was on entry.
bool unify_in_place(const Term& a, const Term& b, Substitution& s, Trail& trail,
                    VarId b_offset = 0);

// Most general unifier extending `s`, or nullopt.
std::optional<Substitution> unify(const Term& a, const Term& b, const Substitution& s);

// Structural identity after resolving bindings (no new bindings made).
bool identical_under(const Term& a, const Term& b, const Substitution& s);
bool identical_under(const Literal& a, const Literal& b, const Substitution& s);

// Dereferences a variable chain; returns the final term (a non-variable or an
// unbound variable).
const Term& deref(const Term& t, const Substitution& s);

Term apply_substitution(const Term& t, const Substitution& s);
Term rename(const Term& t, VarId offset);
Literal rename(const Literal& l, VarId offset);
Clause rename_apart(const Clause& c, VarId offset);

std::string to_string(const Term& t);
std::string to_string(const Literal& l);
std::string to_string(const Clause& c);

}  // namespace pllcop
