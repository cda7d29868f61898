#include "pllcop/term.hpp"

#include <algorithm>
#include <deque>
#include <mutex>
#include <unordered_map>

namespace pllcop {

namespace {

struct SymbolTable {
  std::mutex mu;
  std::deque<Symbol::Entry> entries;
  std::unordered_map<std::string, const Symbol::Entry*> by_name;
};

SymbolTable& symbol_table() {
  static SymbolTable table;
  return table;
}

// Variables of the right-hand side are shifted by `offset`; bound variables
// resolve to materialized terms that carry offset 0.
struct View {
  const Term* t;
  VarId offset;
};

View deref_view(View v, const Substitution& s) {
  while (v.t->is_var()) {
    const VarId id = v.t->var() + v.offset;
    const Term* b = s.lookup(id);
    if (b == nullptr) return v;
    v = {b, 0};
  }
  return v;
}

bool occurs(VarId id, View v, const Substitution& s) {
  v = deref_view(v, s);
  if (v.t->is_var()) return v.t->var() + v.offset == id;
  if (v.t->ground()) return false;
  for (const Term& a : v.t->args()) {
    if (occurs(id, {&a, v.offset}, s)) return true;
  }
  return false;
}

Term materialize(View v) { return v.offset == 0 ? *v.t : rename(*v.t, v.offset); }

bool unify_views(View a, View b, Substitution& s, Trail& trail) {
  a = deref_view(a, s);
  b = deref_view(b, s);
  if (a.t->is_var() && b.t->is_var()) {
    const VarId ia = a.t->var() + a.offset;
    const VarId ib = b.t->var() + b.offset;
    if (ia == ib) return true;
    // bind the younger variable to the older one
    if (ia > ib) {
      s.bind(ia, materialize(b), &trail);
    } else {
      s.bind(ib, materialize(a), &trail);
    }
    return true;
  }
  if (a.t->is_var()) {
    const VarId ia = a.t->var() + a.offset;
    if (occurs(ia, b, s)) return false;
    s.bind(ia, materialize(b), &trail);
    return true;
  }
  if (b.t->is_var()) {
    const VarId ib = b.t->var() + b.offset;
    if (occurs(ib, a, s)) return false;
    s.bind(ib, materialize(a), &trail);
    return true;
  }
  if (a.t->symbol() != b.t->symbol() || a.t->arity() != b.t->arity()) return false;
  if (a.offset == b.offset && a.t->same_node(*b.t)) return true;
  const auto aa = a.t->args();
  const auto ba = b.t->args();
  for (std::size_t i = 0; i < aa.size(); ++i) {
    if (!unify_views({&aa[i], a.offset}, {&ba[i], b.offset}, s, trail)) return false;
  }
  return true;
}

bool identical_views(const Term& a, const Term& b, const Substitution& s) {
  const Term& x = deref(a, s);
  const Term& y = deref(b, s);
  if (x.same_node(y)) return true;
  if (x.is_var() || y.is_var()) return x.is_var() && y.is_var() && x.var() == y.var();
  if (x.symbol() != y.symbol() || x.arity() != y.arity()) return false;
  const auto xa = x.args();
  const auto ya = y.args();
  for (std::size_t i = 0; i < xa.size(); ++i) {
    if (!identical_views(xa[i], ya[i], s)) return false;
  }
  return true;
}

}  // namespace

std::uint64_t stable_hash(std::string_view s) {
  // FNV-1a, 64 bit
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t v) {
  // splitmix64 finalizer over the mixed pair
  std::uint64_t z = seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Symbol Symbol::intern(std::string_view name) {
  auto& table = symbol_table();
  std::lock_guard lock(table.mu);
  auto it = table.by_name.find(std::string(name));
  if (it != table.by_name.end()) return Symbol(it->second);
  table.entries.push_back(Entry{std::string(name), stable_hash(name),
                                static_cast<std::int32_t>(table.entries.size())});
  const Entry* e = &table.entries.back();
  table.by_name.emplace(e->name, e);
  return Symbol(e);
}

Term Term::variable(VarId id) {
  if (id < 0) throw Error("negative variable id");
  auto n = std::make_shared<Node>();
  n->var = id;
  n->ground = false;
  n->max_var = id;
  Term t;
  t.node_ = std::move(n);
  return t;
}

Term Term::app(Symbol f, std::vector<Term> args) {
  auto n = std::make_shared<Node>();
  n->sym = f;
  for (const Term& a : args) {
    n->ground = n->ground && a.ground();
    n->max_var = std::max(n->max_var, a.max_var());
    n->size += a.node_->size;
  }
  n->args = std::move(args);
  Term t;
  t.node_ = std::move(n);
  return t;
}

bool operator==(const Term& a, const Term& b) {
  if (a.node_ == b.node_) return true;
  if (a.null() || b.null()) return false;
  if (a.is_var() || b.is_var()) return a.is_var() && b.is_var() && a.var() == b.var();
  if (a.symbol() != b.symbol() || a.arity() != b.arity()) return false;
  const auto aa = a.args();
  const auto ba = b.args();
  return std::equal(aa.begin(), aa.end(), ba.begin());
}

VarId Clause::num_vars() const {
  VarId m = -1;
  for (const Literal& l : literals) m = std::max(m, l.atom.max_var());
  return m + 1;
}

const Clause& Problem::clause(int id) const {
  for (const Clause& c : clauses) {
    if (c.id == id) return c;
  }
  throw Error("no clause with id " + std::to_string(id));
}

void Substitution::bind(VarId v, Term t, Trail* trail) {
  if (v < 0) throw Error("negative variable id");
  if (static_cast<std::size_t>(v) >= bindings_.size()) bindings_.resize(v + 1);
  if (bindings_[v].null()) ++count_;
  bindings_[v] = std::move(t);
  if (trail != nullptr) trail->push_back(v);
}

void Substitution::undo(Trail& trail, std::size_t mark) {
  while (trail.size() > mark) {
    const VarId v = trail.back();
    trail.pop_back();
    if (!bindings_[v].null()) --count_;
    bindings_[v] = Term();
  }
}

std::vector<std::pair<VarId, Term>> Substitution::bindings() const {
  std::vector<std::pair<VarId, Term>> out;
  for (std::size_t i = 0; i < bindings_.size(); ++i) {
    if (!bindings_[i].null()) out.emplace_back(static_cast<VarId>(i), bindings_[i]);
  }
  return out;
}

Term Substitution::apply(const Term& t) const {
  if (t.ground() || count_ == 0) return t;
  if (t.is_var()) {
    const Term* b = lookup(t.var());
    return b == nullptr ? t : apply(*b);
  }
  std::vector<Term> args;
  args.reserve(t.arity());
  bool changed = false;
  for (const Term& a : t.args()) {
    args.push_back(apply(a));
    changed = changed || !args.back().same_node(a);
  }
  return changed ? Term::app(t.symbol(), std::move(args)) : t;
}

Substitution Substitution::normalized() const {
  Substitution out;
  for (const auto& [v, t] : bindings()) out.bind(v, apply(t));
  return out;
}

bool operator==(const Substitution& a, const Substitution& b) {
  return a.bindings() == b.bindings();
}

bool unify_in_place(const Term& a, const Term& b, Substitution& s, Trail& trail, VarId b_offset) {
  const std::size_t mark = trail.size();
  if (unify_views({&a, 0}, {&b, b_offset}, s, trail)) return true;
  s.undo(trail, mark);
  return false;
}

std::optional<Substitution> unify(const Term& a, const Term& b, const Substitution& s) {
  Substitution out = s;
  Trail trail;
  if (!unify_in_place(a, b, out, trail)) return std::nullopt;
  return out;
}

const Term& deref(const Term& t, const Substitution& s) {
  const Term* cur = &t;
  while (cur->is_var()) {
    const Term* b = s.lookup(cur->var());
    if (b == nullptr) break;
    cur = b;
  }
  return *cur;
}

bool identical_under(const Term& a, const Term& b, const Substitution& s) {
  return identical_views(a, b, s);
}

bool identical_under(const Literal& a, const Literal& b, const Substitution& s) {
  return a.positive == b.positive && identical_views(a.atom, b.atom, s);
}

Term apply_substitution(const Term& t, const Substitution& s) { return s.apply(t); }

Term rename(const Term& t, VarId offset) {
  if (t.ground() || offset == 0) return t;
  if (t.is_var()) return Term::variable(t.var() + offset);
  std::vector<Term> args;
  args.reserve(t.arity());
  for (const Term& a : t.args()) args.push_back(rename(a, offset));
  return Term::app(t.symbol(), std::move(args));
}

Literal rename(const Literal& l, VarId offset) { return {l.positive, rename(l.atom, offset)}; }

Clause rename_apart(const Clause& c, VarId offset) {
  Clause out{c.id, {}};
  out.literals.reserve(c.literals.size());
  for (const Literal& l : c.literals) out.literals.push_back(rename(l, offset));
  return out;
}

namespace {
void print(const Term& t, std::string& out) {
  if (t.is_var()) {
    out += 'X';
    out += std::to_string(t.var());
    return;
  }
  out += t.symbol().name();
  if (t.arity() == 0) return;
  out += '(';
  bool first = true;
  for (const Term& a : t.args()) {
    if (!first) out += ',';
    first = false;
    print(a, out);
  }
  out += ')';
}
}  // namespace

std::string to_string(const Term& t) {
  std::string out;
  print(t, out);
  return out;
}

std::string to_string(const Literal& l) { return (l.positive ? "" : "~") + to_string(l.atom); }

std::string to_string(const Clause& c) {
  std::string out;
  for (std::size_t i = 0; i < c.literals.size(); ++i) {
    if (i > 0) out += " | ";
    out += to_string(c.literals[i]);
  }
  return out + ".";
}

}  // namespace pllcop
