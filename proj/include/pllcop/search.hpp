// Monte Carlo Tree Search over tableau states.
//
// Every simulation descends from the virtual root by
//   argmax_a  Q(a) + cp * prior(a) * sqrt(N) / (1 + n(a)),   Q(a) = w(a) / max(1, n(a))
// until it either creates one new node, evaluated once by the guidance value
// (Proof 1, Failure 0), or reaches a terminal, which returns its reward again.
// The reward is backed up to the root. The budget counts simulations, the
// root's own evaluation included; search stops early once every reachable
// state is in the tree.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pllcop/tableau.hpp"

namespace pllcop {

class Guidance {
 public:
  virtual ~Guidance() = default;
  // A distribution over exactly `actions`, in that order.
  virtual std::vector<double> policy(const TableauState& s, std::span<const Action> actions) const = 0;
  // Estimated reward in [0, 1].
  virtual double value(const TableauState& s) const = 0;
};

class UniformGuidance : public Guidance {
 public:
  explicit UniformGuidance(double value = 0.5) : value_(value) {}
  std::vector<double> policy(const TableauState& s, std::span<const Action> actions) const override;
  double value(const TableauState&) const override { return value_; }

 private:
  double value_;
};

struct DirichletNoise {
  double alpha = 0.3;
  double weight = 0.25;
};

struct MctsConfig {
  double cp = 1.0;
  int inference_budget = 2000;  // simulations per problem, the root included
  int max_depth = 20;
  std::optional<DirichletNoise> dirichlet;  // mixed into the root priors
  std::uint64_t rng_seed = 0;
};

struct TreeNode {
  TableauState state;
  int parent = -1;
  Action action{};  // action leading here from the parent
  int depth = 0;  // actions from the root
  Status status = Status::Unknown;
  std::vector<Action> actions{};
  std::vector<double> prior{};
  std::vector<int> children{};  // per action; -1 while not expanded
  int visits = 0;
  double total_reward = 0;
  bool exhausted = false;  // the whole subtree is in the tree

  double value() const { return visits > 0 ? total_reward / visits : 0.0; }
};

struct SearchTree {
  std::string problem;
  MatrixPtr matrix;
  std::vector<TreeNode> nodes;  // nodes[0] is the virtual root
  int simulations = 0;

  std::size_t expansions() const { return nodes.size(); }
  bool complete() const { return !nodes.empty() && nodes[0].exhausted; }
  int max_depth() const;
  // Actions from the root to `node`.
  std::vector<Action> actions_to(int node) const;
};

// Throws Error when the problem has no start clause.
SearchTree run_mcts(const Problem& p, const Guidance& g, const MctsConfig& cfg);
SearchTree run_mcts(const MatrixPtr& m, const Guidance& g, const MctsConfig& cfg);

struct NodeTarget {
  int node;
  std::vector<double> policy;  // aligned with the node's actions
  double value;
};

// Visit-frequency policy targets and mean-reward value targets for every node
// with at least one expanded child.
std::vector<NodeTarget> extract_targets(const SearchTree& t);

struct Derivation {
  std::string problem;
  std::vector<Action> actions;
  Status status = Status::Unknown;

  std::size_t length() const { return actions.size(); }
  friend bool operator==(const Derivation&, const Derivation&) = default;
};

// Root-to-terminal derivations ending in Proof (resp. Failure), in node order.
std::vector<Derivation> proofs_in_tree(const SearchTree& t);
std::vector<Derivation> failures_in_tree(const SearchTree& t);

// {"problem", "solved", "proofs", "failures", "nodes", "depth"} as JSON text.
std::string tree_stats_json(const SearchTree& t);

}  // namespace pllcop
