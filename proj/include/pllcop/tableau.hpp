// Connection tableau calculus in the style of leanCoP.
//
// A state holds the open goals of a connection tableau as a stack of frames;
// each frame carries the remaining literals of one clause together with their
// shared path (ancestor literals) and lemmas (literals closed earlier to the
// left of an ancestor). The leftmost open goal is always the selected one.
//
// Beyond the explicit Start / Extension / Reduction actions the calculus
// closes goals eagerly whenever this needs no new binding: a goal identical to
// a lemma, or whose complement is identical to a path literal. A state in
// which some open goal is identical to one of its path literals violates
// regularity; it is kept as a dead Failure state.
#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pllcop/term.hpp"

namespace pllcop {

struct Action {
  enum class Kind : std::uint8_t { Start, Extension, Reduction };

  Kind kind = Kind::Start;
  int clause_id = -1;      // Start, Extension
  int literal_index = -1;  // Extension: literal of the clause connected to the goal
  int path_index = -1;     // Reduction: index into the goal's path, root first

  static Action start(int clause) { return {Kind::Start, clause, -1, -1}; }
  static Action extension(int clause, int literal) { return {Kind::Extension, clause, literal, -1}; }
  static Action reduction(int path_index) { return {Kind::Reduction, -1, -1, path_index}; }

  friend bool operator==(const Action&, const Action&) = default;
  friend auto operator<=>(const Action&, const Action&) = default;
};

std::string to_string(const Action& a);

enum class Status { Proof, Failure, Unknown };

std::string to_string(Status s);

struct CalculusOptions {
  int max_depth = 20;  // maximal path length of an open goal
};

// A problem prepared for search: the clause index used to find connections.
class Matrix {
 public:
  explicit Matrix(Problem problem, CalculusOptions options = {});

  const Problem& problem() const { return problem_; }
  const CalculusOptions& options() const { return options_; }
  const Clause& clause(int id) const;
  VarId clause_vars(int id) const { return clause_vars_.at(index_of(id)); }

  struct Candidate {
    int clause_id;
    int literal_index;
  };
  // Clause literals with the goal's predicate and opposite polarity, ordered
  // by clause id then literal index.
  std::span<const Candidate> candidates(const Literal& goal) const;

  // Hash of the clause text (variables canonical) and the connected literal;
  // identical axioms in different problems share the key.
  std::uint64_t extension_key(int clause_id, int literal_index) const;

 private:
  std::size_t index_of(int id) const;

  Problem problem_;
  CalculusOptions options_;
  std::vector<VarId> clause_vars_;
  std::vector<std::uint64_t> clause_hash_;
  std::unordered_map<int, std::size_t> id_to_index_;
  std::unordered_map<std::uint64_t, std::vector<Candidate>> index_;
};

using MatrixPtr = std::shared_ptr<const Matrix>;

MatrixPtr compile(Problem p, CalculusOptions options = {});

struct Goal {
  Literal literal;
  std::vector<Literal> path;  // root first
};

class TableauState {
 public:
  // Virtual root before a start clause is chosen.
  static TableauState root(MatrixPtr m);

  const Matrix& matrix() const { return *matrix_; }
  const MatrixPtr& matrix_ptr() const { return matrix_; }
  const Problem& problem() const { return matrix_->problem(); }

  bool is_root() const { return !started_; }
  bool dead() const { return dead_; }
  bool closed() const { return started_ && !dead_ && frames_.empty(); }

  // Open goals in selection order; literals and paths as stored (apply
  // `subst()` to instantiate).
  std::vector<Goal> open_goals() const;
  std::size_t num_open_goals() const;
  // Open goal literals in selection order, without their paths.
  std::vector<const Literal*> open_literals() const;

  // Selected goal; requires num_open_goals() > 0.
  const Literal& selected() const;
  // Path of the selected goal, nearest ancestor first.
  std::vector<const Literal*> selected_path() const;
  int selected_path_length() const;
  std::vector<const Literal*> selected_lemmas() const;

  const Substitution& subst() const { return subst_; }
  int depth() const { return depth_; }
  int steps_taken() const { return steps_; }
  VarId var_offset() const { return var_offset_; }

  // Printed goals, paths and lemmas under the substitution with variables
  // renumbered by first occurrence. Equal keys mean equal futures.
  std::string canonical_key() const;

 private:
  struct PathNode {
    Literal literal;
    std::shared_ptr<const PathNode> up;
    int length;
  };
  using PathRef = std::shared_ptr<const PathNode>;
  struct LemmaNode {
    Literal literal;
    std::shared_ptr<const LemmaNode> next;
  };
  using LemmaRef = std::shared_ptr<const LemmaNode>;
  struct Frame {
    std::shared_ptr<const std::vector<Literal>> goals;
    std::size_t next = 0;
    PathRef path;
    LemmaRef lemmas;
  };

  explicit TableauState(MatrixPtr m) : matrix_(std::move(m)) {}

  void close_selected();
  void settle();
  bool violates_regularity() const;

  friend std::vector<Action> legal_actions(const TableauState& s);
  friend TableauState apply_action(const TableauState& s, const Action& a);

  MatrixPtr matrix_;
  std::vector<Frame> frames_;  // back() holds the selected goal
  Substitution subst_;
  bool started_ = false;
  bool dead_ = false;
  int depth_ = 0;
  int steps_ = 0;
  VarId var_offset_ = 0;
};

// One state per start clause.
std::vector<TableauState> initial_states(const MatrixPtr& m);
std::vector<TableauState> initial_states(const Problem& p, CalculusOptions options = {});

// Reductions by path index, then extensions by clause id and literal index.
std::vector<Action> legal_actions(const TableauState& s);

// Throws Error if the action is not legal in `s`.
TableauState apply_action(const TableauState& s, const Action& a);

Status status(const TableauState& s);
// Same, reusing an already computed legal_actions(s).
Status status(const TableauState& s, std::span<const Action> actions);

// Replays `actions` from the root; throws on an illegal step.
TableauState replay(const MatrixPtr& m, std::span<const Action> actions);

}  // namespace pllcop
