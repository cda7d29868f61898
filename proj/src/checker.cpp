#include "pllcop/checker.hpp"

#include <algorithm>

namespace pllcop {

namespace {

enum class NodeKind { Root, Goal, Connection };
enum class Closure { Open, Extended, Connection, Reduction, Lemma };

struct Node {
  Literal literal;
  NodeKind kind = NodeKind::Goal;
  int parent = -1;
  std::vector<int> children;
  Closure closure = Closure::Open;
  int partner = -1;
};

class TableauTree {
 public:
  TableauTree(const Problem& p, CalculusOptions options) : problem_(p), options_(options) {
    nodes_.push_back(Node{{}, NodeKind::Root, -1, {}, Closure::Extended, -1});
  }

  CheckResult run(std::span<const Action> actions) {
    if (actions.empty()) return fail("empty derivation");
    for (std::size_t i = 0; i < actions.size(); ++i) {
      const std::string err = step(actions[i], i == 0);
      if (!err.empty()) return fail("step " + std::to_string(i) + ": " + err);
      close_eagerly();
      if (irregular()) return fail("step " + std::to_string(i) + ": regularity violated");
    }
    if (selected() >= 0) return fail("open branch remains");
    return verify();
  }

 private:
  static CheckResult fail(std::string why) { return {false, std::move(why)}; }

  const Clause* find_clause(int id) const {
    for (const Clause& c : problem_.clauses) {
      if (c.id == id) return &c;
    }
    return nullptr;
  }

  int add_child(int parent, Literal lit, NodeKind kind) {
    nodes_.push_back(Node{std::move(lit), kind, parent, {}, Closure::Open, -1});
    const int id = static_cast<int>(nodes_.size()) - 1;
    nodes_[parent].children.push_back(id);
    return id;
  }

  // leftmost open goal, depth first
  int selected() const { return find_open(0); }
  int find_open(int n) const {
    const Node& node = nodes_[n];
    if (node.kind == NodeKind::Goal && node.closure == Closure::Open) return n;
    for (int c : node.children) {
      const int r = find_open(c);
      if (r >= 0) return r;
    }
    return -1;
  }

  // root first, excluding the virtual root
  std::vector<int> ancestors(int n) const {
    std::vector<int> out;
    for (int a = nodes_[n].parent; a > 0; a = nodes_[a].parent) out.push_back(a);
    std::reverse(out.begin(), out.end());
    return out;
  }

  std::vector<int> lemma_candidates(int n) const {
    std::vector<int> out;
    for (int cur = n; cur > 0; cur = nodes_[cur].parent) {
      for (int sib : nodes_[nodes_[cur].parent].children) {
        if (sib == cur) break;
        if (nodes_[sib].kind == NodeKind::Goal) out.push_back(sib);
      }
    }
    return out;
  }

  Clause fresh_copy(const Clause& c) {
    Clause copy = rename_apart(c, next_var_);
    next_var_ += c.num_vars();
    return copy;
  }

  std::string step(const Action& a, bool first) {
    if (a.kind == Action::Kind::Start) {
      if (!first) return "start action after the first step";
      const auto& starts = problem_.start_clause_ids;
      if (std::find(starts.begin(), starts.end(), a.clause_id) == starts.end()) return "not a start clause";
      const Clause* c = find_clause(a.clause_id);
      if (c == nullptr) return "unknown clause";
      for (Literal& l : fresh_copy(*c).literals) add_child(0, std::move(l), NodeKind::Goal);
      return {};
    }
    if (first) return "derivation must begin with a start action";
    const int g = selected();
    if (g < 0) return "no open goal";
    const Literal goal = nodes_[g].literal;

    if (a.kind == Action::Kind::Reduction) {
      const std::vector<int> anc = ancestors(g);
      if (a.path_index < 0 || a.path_index >= static_cast<int>(anc.size())) return "path index out of range";
      const Literal& p = nodes_[anc[a.path_index]].literal;
      if (p.positive == goal.positive) return "reduction with same polarity";
      auto u = unify(goal.atom, p.atom, subst_);
      if (!u) return "reduction literals do not unify";
      subst_ = std::move(*u);
      nodes_[g].closure = Closure::Reduction;
      nodes_[g].partner = anc[a.path_index];
      return {};
    }

    const Clause* c = find_clause(a.clause_id);
    if (c == nullptr) return "unknown clause";
    if (a.literal_index < 0 || a.literal_index >= static_cast<int>(c->literals.size())) {
      return "literal index out of range";
    }
    if (c->literals[a.literal_index].positive == goal.positive) return "extension with same polarity";
    const int path_len = static_cast<int>(ancestors(g).size()) + 1;
    if (c->literals.size() > 1 && path_len > options_.max_depth) return "depth limit exceeded";
    const Clause copy = fresh_copy(*c);
    auto u = unify(goal.atom, copy.literals[a.literal_index].atom, subst_);
    if (!u) return "extension literals do not unify";
    subst_ = std::move(*u);
    nodes_[g].closure = Closure::Extended;
    for (std::size_t i = 0; i < copy.literals.size(); ++i) {
      if (static_cast<int>(i) == a.literal_index) {
        const int conn = add_child(g, copy.literals[i], NodeKind::Connection);
        nodes_[conn].closure = Closure::Connection;
        nodes_[conn].partner = g;
      } else {
        add_child(g, copy.literals[i], NodeKind::Goal);
      }
    }
    return {};
  }

  bool complementary(const Literal& a, const Literal& b) const {
    return a.positive != b.positive && subst_.apply(a.atom) == subst_.apply(b.atom);
  }
  bool same(const Literal& a, const Literal& b) const {
    return a.positive == b.positive && subst_.apply(a.atom) == subst_.apply(b.atom);
  }

  void close_eagerly() {
    for (;;) {
      const int g = selected();
      if (g < 0) return;
      const Literal& goal = nodes_[g].literal;
      bool done = false;
      for (int l : lemma_candidates(g)) {
        if (same(goal, nodes_[l].literal)) {
          nodes_[g].closure = Closure::Lemma;
          nodes_[g].partner = l;
          done = true;
          break;
        }
      }
      if (!done) {
        for (int anc : ancestors(g)) {
          if (complementary(goal, nodes_[anc].literal)) {
            nodes_[g].closure = Closure::Reduction;
            nodes_[g].partner = anc;
            done = true;
            break;
          }
        }
      }
      if (!done) return;
    }
  }

  bool irregular() const {
    for (std::size_t n = 1; n < nodes_.size(); ++n) {
      if (nodes_[n].kind != NodeKind::Goal || nodes_[n].closure != Closure::Open) continue;
      for (int anc : ancestors(static_cast<int>(n))) {
        if (same(nodes_[n].literal, nodes_[anc].literal)) return true;
      }
    }
    return false;
  }

  bool is_left_of_ancestor(int lemma, int leaf) const {
    const std::vector<int> cands = lemma_candidates(leaf);
    return std::find(cands.begin(), cands.end(), lemma) != cands.end();
  }

  CheckResult verify() const {
    for (std::size_t n = 1; n < nodes_.size(); ++n) {
      const Node& node = nodes_[n];
      switch (node.closure) {
        case Closure::Open: return fail("open leaf " + to_string(subst_.apply(node.literal)));
        case Closure::Extended:
          if (node.children.empty()) return fail("extended goal without children");
          break;
        case Closure::Connection:
          if (node.partner != node.parent || !complementary(node.literal, nodes_[node.parent].literal)) {
            return fail("connection is not complementary");
          }
          break;
        case Closure::Reduction: {
          const std::vector<int> anc = ancestors(static_cast<int>(n));
          if (std::find(anc.begin(), anc.end(), node.partner) == anc.end() ||
              !complementary(node.literal, nodes_[node.partner].literal)) {
            return fail("reduction partner is not a complementary ancestor");
          }
          break;
        }
        case Closure::Lemma:
          if (!is_left_of_ancestor(node.partner, static_cast<int>(n)) ||
              nodes_[node.partner].closure == Closure::Open || !same(node.literal, nodes_[node.partner].literal)) {
            return fail("lemma does not match a closed literal to the left");
          }
          break;
      }
    }
    return {true, {}};
  }

  const Problem& problem_;
  CalculusOptions options_;
  std::vector<Node> nodes_;
  Substitution subst_;
  VarId next_var_ = 0;
};

}  // namespace

CheckResult check_proof_detailed(const Problem& p, std::span<const Action> actions, CalculusOptions options) {
  return TableauTree(p, options).run(actions);
}

bool check_proof(const Problem& p, std::span<const Action> actions, CalculusOptions options) {
  return check_proof_detailed(p, actions, options).ok;
}

}  // namespace pllcop
