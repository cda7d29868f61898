#include "pllcop/tableau.hpp"

#include <algorithm>

namespace pllcop {

namespace {

std::uint64_t connection_slot(Symbol pred, bool positive) {
  return (static_cast<std::uint64_t>(pred.id()) << 1) | (positive ? 1U : 0U);
}

class KeyPrinter {
 public:
  explicit KeyPrinter(const Substitution& s) : s_(s) {}

  void term(const Term& t0, std::string& out) {
    const Term& t = deref(t0, s_);
    if (t.is_var()) {
      auto [it, inserted] = vars_.emplace(t.var(), static_cast<int>(vars_.size()));
      out += 'V';
      out += std::to_string(it->second);
      return;
    }
    out += t.symbol().name();
    if (t.arity() == 0) return;
    out += '(';
    for (std::size_t i = 0; i < t.arity(); ++i) {
      if (i > 0) out += ',';
      term(t.args()[i], out);
    }
    out += ')';
  }

  void literal(const Literal& l, std::string& out) {
    if (!l.positive) out += '~';
    term(l.atom, out);
  }

 private:
  const Substitution& s_;
  std::unordered_map<VarId, int> vars_;
};

}  // namespace

std::string to_string(const Action& a) {
  switch (a.kind) {
    case Action::Kind::Start: return "start(" + std::to_string(a.clause_id) + ")";
    case Action::Kind::Extension:
      return "ext(" + std::to_string(a.clause_id) + "," + std::to_string(a.literal_index) + ")";
    case Action::Kind::Reduction: return "red(" + std::to_string(a.path_index) + ")";
  }
  return "?";
}

std::string to_string(Status s) {
  switch (s) {
    case Status::Proof: return "proof";
    case Status::Failure: return "failure";
    case Status::Unknown: return "unknown";
  }
  return "?";
}

Matrix::Matrix(Problem problem, CalculusOptions options)
    : problem_(std::move(problem)), options_(options) {
  if (options_.max_depth < 1) throw Error("max_depth must be >= 1");
  for (std::size_t i = 0; i < problem_.clauses.size(); ++i) {
    const Clause& c = problem_.clauses[i];
    if (c.literals.empty()) throw Error("empty clause " + std::to_string(c.id));
    if (!id_to_index_.emplace(c.id, i).second) throw Error("duplicate clause id " + std::to_string(c.id));
    clause_vars_.push_back(c.num_vars());
    std::string text;
    for (const Literal& l : c.literals) text += to_string(l) + "|";
    clause_hash_.push_back(stable_hash(text));
    for (std::size_t j = 0; j < c.literals.size(); ++j) {
      const Literal& l = c.literals[j];
      // a goal with the opposite polarity connects to this literal
      index_[connection_slot(l.predicate(), !l.positive)].push_back({c.id, static_cast<int>(j)});
    }
  }
  for (auto& [slot, cands] : index_) {
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      return std::tie(a.clause_id, a.literal_index) < std::tie(b.clause_id, b.literal_index);
    });
  }
  for (int id : problem_.start_clause_ids) index_of(id);
}

std::size_t Matrix::index_of(int id) const {
  auto it = id_to_index_.find(id);
  if (it == id_to_index_.end()) throw Error("no clause with id " + std::to_string(id));
  return it->second;
}

const Clause& Matrix::clause(int id) const { return problem_.clauses[index_of(id)]; }

std::span<const Matrix::Candidate> Matrix::candidates(const Literal& goal) const {
  auto it = index_.find(connection_slot(goal.predicate(), goal.positive));
  if (it == index_.end()) return {};
  return it->second;
}

std::uint64_t Matrix::extension_key(int clause_id, int literal_index) const {
  return hash_combine(clause_hash_[index_of(clause_id)], static_cast<std::uint64_t>(literal_index));
}

MatrixPtr compile(Problem p, CalculusOptions options) {
  return std::make_shared<const Matrix>(std::move(p), options);
}

TableauState TableauState::root(MatrixPtr m) { return TableauState(std::move(m)); }

std::vector<Goal> TableauState::open_goals() const {
  std::vector<Goal> out;
  for (auto f = frames_.rbegin(); f != frames_.rend(); ++f) {
    std::vector<Literal> path;
    for (const PathNode* p = f->path.get(); p != nullptr; p = p->up.get()) path.push_back(p->literal);
    std::reverse(path.begin(), path.end());
    for (std::size_t i = f->next; i < f->goals->size(); ++i) out.push_back({(*f->goals)[i], path});
  }
  return out;
}

std::vector<const Literal*> TableauState::open_literals() const {
  std::vector<const Literal*> out;
  for (auto f = frames_.rbegin(); f != frames_.rend(); ++f) {
    for (std::size_t i = f->next; i < f->goals->size(); ++i) out.push_back(&(*f->goals)[i]);
  }
  return out;
}

std::size_t TableauState::num_open_goals() const {
  std::size_t n = 0;
  for (const Frame& f : frames_) n += f.goals->size() - f.next;
  return n;
}

const Literal& TableauState::selected() const {
  if (frames_.empty()) throw Error("no open goal");
  const Frame& f = frames_.back();
  return (*f.goals)[f.next];
}

std::vector<const Literal*> TableauState::selected_path() const {
  std::vector<const Literal*> out;
  if (frames_.empty()) return out;
  for (const PathNode* p = frames_.back().path.get(); p != nullptr; p = p->up.get()) {
    out.push_back(&p->literal);
  }
  return out;
}

int TableauState::selected_path_length() const {
  if (frames_.empty() || !frames_.back().path) return 0;
  return frames_.back().path->length;
}

std::vector<const Literal*> TableauState::selected_lemmas() const {
  std::vector<const Literal*> out;
  if (frames_.empty()) return out;
  for (const LemmaNode* l = frames_.back().lemmas.get(); l != nullptr; l = l->next.get()) {
    out.push_back(&l->literal);
  }
  return out;
}

std::string TableauState::canonical_key() const {
  if (!started_) return "root";
  if (dead_) return "dead";
  KeyPrinter kp(subst_);
  std::string out;
  for (auto f = frames_.rbegin(); f != frames_.rend(); ++f) {
    if (f->next == f->goals->size()) continue;
    out += '[';
    for (std::size_t i = f->next; i < f->goals->size(); ++i) {
      kp.literal((*f->goals)[i], out);
      out += ';';
    }
    out += '@';
    for (const PathNode* p = f->path.get(); p != nullptr; p = p->up.get()) {
      kp.literal(p->literal, out);
      out += ';';
    }
    out += '!';
    for (const LemmaNode* l = f->lemmas.get(); l != nullptr; l = l->next.get()) {
      kp.literal(l->literal, out);
      out += ';';
    }
    out += ']';
  }
  return out;
}

void TableauState::close_selected() {
  Frame& f = frames_.back();
  const Literal& g = (*f.goals)[f.next];
  f.lemmas = std::make_shared<const LemmaNode>(LemmaNode{g, f.lemmas});
  ++f.next;
  if (f.next == f.goals->size()) frames_.pop_back();
}

void TableauState::settle() {
  while (!frames_.empty()) {
    const Frame& f = frames_.back();
    if (f.next == f.goals->size()) {
      frames_.pop_back();
      continue;
    }
    const Literal& g = (*f.goals)[f.next];
    bool closable = false;
    for (const LemmaNode* l = f.lemmas.get(); l != nullptr && !closable; l = l->next.get()) {
      closable = identical_under(g, l->literal, subst_);
    }
    for (const PathNode* p = f.path.get(); p != nullptr && !closable; p = p->up.get()) {
      closable = p->literal.positive != g.positive && identical_under(g.atom, p->literal.atom, subst_);
    }
    if (!closable) break;
    close_selected();
  }
  dead_ = violates_regularity();
}

bool TableauState::violates_regularity() const {
  for (const Frame& f : frames_) {
    for (std::size_t i = f.next; i < f.goals->size(); ++i) {
      const Literal& g = (*f.goals)[i];
      for (const PathNode* p = f.path.get(); p != nullptr; p = p->up.get()) {
        if (p->literal.positive == g.positive && p->literal.predicate() == g.predicate() &&
            identical_under(g.atom, p->literal.atom, subst_)) {
          return true;
        }
      }
    }
  }
  return false;
}

std::vector<TableauState> initial_states(const MatrixPtr& m) {
  const TableauState root = TableauState::root(m);
  if (m->problem().start_clause_ids.empty()) throw Error("problem has no start clause");
  std::vector<TableauState> out;
  for (const Action& a : legal_actions(root)) out.push_back(apply_action(root, a));
  return out;
}

std::vector<TableauState> initial_states(const Problem& p, CalculusOptions options) {
  return initial_states(compile(p, options));
}

std::vector<Action> legal_actions(const TableauState& s) {
  std::vector<Action> out;
  if (s.is_root()) {
    for (int id : s.problem().start_clause_ids) out.push_back(Action::start(id));
    return out;
  }
  if (s.dead_ || s.frames_.empty()) return out;

  const TableauState::Frame& f = s.frames_.back();
  const Literal& g = (*f.goals)[f.next];
  const int path_len = f.path ? f.path->length : 0;
  Substitution scratch = s.subst_;
  Trail trail;

  std::vector<const Literal*> path = s.selected_path();
  std::reverse(path.begin(), path.end());
  for (std::size_t i = 0; i < path.size(); ++i) {
    const Literal& p = *path[i];
    if (p.positive == g.positive || p.predicate() != g.predicate()) continue;
    if (unify_in_place(g.atom, p.atom, scratch, trail)) {
      scratch.undo(trail, 0);
      out.push_back(Action::reduction(static_cast<int>(i)));
    }
  }

  const Matrix& m = s.matrix();
  for (const Matrix::Candidate& c : m.candidates(g)) {
    const Clause& clause = m.clause(c.clause_id);
    if (clause.literals.size() > 1 && path_len + 1 > m.options().max_depth) continue;
    if (unify_in_place(g.atom, clause.literals[c.literal_index].atom, scratch, trail, s.var_offset_)) {
      scratch.undo(trail, 0);
      out.push_back(Action::extension(c.clause_id, c.literal_index));
    }
  }
  return out;
}

TableauState apply_action(const TableauState& s, const Action& a) {
  const Matrix& m = s.matrix();
  TableauState next = s;
  Trail trail;

  if (a.kind == Action::Kind::Start) {
    if (!s.is_root()) throw Error("start action outside the root");
    const auto& starts = s.problem().start_clause_ids;
    if (std::find(starts.begin(), starts.end(), a.clause_id) == starts.end()) {
      throw Error("clause " + std::to_string(a.clause_id) + " is not a start clause");
    }
    const Clause& c = m.clause(a.clause_id);
    auto goals = std::make_shared<std::vector<Literal>>(c.literals);
    next.frames_.push_back({std::move(goals), 0, nullptr, nullptr});
    next.started_ = true;
    next.var_offset_ = m.clause_vars(a.clause_id);
    next.steps_ = 1;
    next.settle();
    return next;
  }

  if (s.is_root()) throw Error("the root only admits start actions");
  if (s.dead_ || s.frames_.empty()) throw Error("no open goal to act on");
  const TableauState::Frame& f = s.frames_.back();
  const Literal g = (*f.goals)[f.next];
  const auto g_path = f.path;
  const auto g_lemmas = f.lemmas;
  const int path_len = g_path ? g_path->length : 0;

  if (a.kind == Action::Kind::Reduction) {
    std::vector<const Literal*> path = s.selected_path();
    std::reverse(path.begin(), path.end());
    if (a.path_index < 0 || a.path_index >= static_cast<int>(path.size())) {
      throw Error("reduction index out of range");
    }
    const Literal& p = *path[a.path_index];
    if (p.positive == g.positive || !unify_in_place(g.atom, p.atom, next.subst_, trail)) {
      throw Error("illegal reduction " + to_string(a));
    }
    next.close_selected();
  } else {
    const Clause& c = m.clause(a.clause_id);
    if (a.literal_index < 0 || a.literal_index >= static_cast<int>(c.literals.size())) {
      throw Error("literal index out of range");
    }
    const Literal& l = c.literals[a.literal_index];
    if (l.positive == g.positive) throw Error("illegal extension " + to_string(a) + ": same polarity");
    if (c.literals.size() > 1 && path_len + 1 > m.options().max_depth) {
      throw Error("illegal extension " + to_string(a) + ": depth limit");
    }
    if (!unify_in_place(g.atom, l.atom, next.subst_, trail, s.var_offset_)) {
      throw Error("illegal extension " + to_string(a) + ": no unifier");
    }
    next.close_selected();
    if (c.literals.size() > 1) {
      auto goals = std::make_shared<std::vector<Literal>>();
      goals->reserve(c.literals.size() - 1);
      for (std::size_t i = 0; i < c.literals.size(); ++i) {
        if (static_cast<int>(i) != a.literal_index) goals->push_back(rename(c.literals[i], s.var_offset_));
      }
      auto path = std::make_shared<const TableauState::PathNode>(
          TableauState::PathNode{g, g_path, path_len + 1});
      next.frames_.push_back({std::move(goals), 0, std::move(path), g_lemmas});
      next.depth_ = std::max(next.depth_, path_len + 1);
    }
    next.var_offset_ += m.clause_vars(a.clause_id);
  }
  ++next.steps_;
  next.settle();
  return next;
}

Status status(const TableauState& s, std::span<const Action> actions) {
  if (s.closed()) return Status::Proof;
  if (s.dead() || actions.empty()) return Status::Failure;
  return Status::Unknown;
}

Status status(const TableauState& s) {
  if (s.closed()) return Status::Proof;
  if (s.dead()) return Status::Failure;
  const auto actions = legal_actions(s);
  return status(s, actions);
}

TableauState replay(const MatrixPtr& m, std::span<const Action> actions) {
  TableauState s = TableauState::root(m);
  for (const Action& a : actions) s = apply_action(s, a);
  return s;
}

}  // namespace pllcop
