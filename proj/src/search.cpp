#include "pllcop/search.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "json.hpp"

namespace pllcop {

std::vector<double> UniformGuidance::policy(const TableauState&, std::span<const Action> actions) const {
  return std::vector<double>(actions.size(), actions.empty() ? 0.0 : 1.0 / static_cast<double>(actions.size()));
}

int SearchTree::max_depth() const {
  int d = 0;
  for (const TreeNode& n : nodes) d = std::max(d, n.depth);
  return d;
}

std::vector<Action> SearchTree::actions_to(int node) const {
  std::vector<Action> out;
  for (int n = node; nodes[n].parent >= 0; n = nodes[n].parent) out.push_back(nodes[n].action);
  std::reverse(out.begin(), out.end());
  return out;
}

namespace {

class Search {
 public:
  Search(const MatrixPtr& m, const Guidance& g, const MctsConfig& cfg) : g_(g), cfg_(cfg), rng_(cfg.rng_seed) {
    if (cfg.inference_budget < 1) throw Error("inference_budget must be >= 1");
    if (cfg.cp < 0) throw Error("cp must be >= 0");
    if (m->problem().start_clause_ids.empty()) throw Error("problem has no start clause");
    tree_.problem = m->problem().name;
    tree_.matrix = m;
  }

  SearchTree run() {
    TableauState root = TableauState::root(tree_.matrix);
    const double r = expand(-1, Action{}, std::move(root));
    tree_.nodes[0].visits = 1;
    tree_.nodes[0].total_reward = r;
    tree_.simulations = 1;
    while (tree_.simulations < cfg_.inference_budget && !tree_.nodes[0].exhausted) {
      simulate();
      ++tree_.simulations;
    }
    return std::move(tree_);
  }

 private:
  // Creates a node and returns its evaluation.
  double expand(int parent, const Action& a, TableauState state) {
    TreeNode node{.state = std::move(state)};
    node.parent = parent;
    node.action = a;
    node.depth = parent < 0 ? 0 : tree_.nodes[parent].depth + 1;
    node.actions = legal_actions(node.state);
    node.status = node.state.is_root() ? (node.actions.empty() ? Status::Failure : Status::Unknown)
                                       : status(node.state, node.actions);
    double reward;
    if (node.status == Status::Unknown) {
      if (node.state.is_root()) {
        node.prior.assign(node.actions.size(), 1.0 / static_cast<double>(node.actions.size()));
        if (cfg_.dirichlet) add_noise(node.prior);
      } else {
        node.prior = g_.policy(node.state, node.actions);
      }
      node.children.assign(node.actions.size(), -1);
      reward = std::clamp(g_.value(node.state), 0.0, 1.0);
    } else {
      node.exhausted = true;
      reward = node.status == Status::Proof ? 1.0 : 0.0;
    }
    tree_.nodes.push_back(std::move(node));
    const int id = static_cast<int>(tree_.nodes.size()) - 1;
    if (parent >= 0) {
      auto& siblings = tree_.nodes[parent].children;
      const auto& acts = tree_.nodes[parent].actions;
      siblings[std::find(acts.begin(), acts.end(), a) - acts.begin()] = id;
    }
    return reward;
  }

  void add_noise(std::vector<double>& prior) {
    std::gamma_distribution<double> gamma(cfg_.dirichlet->alpha, 1.0);
    std::vector<double> eta(prior.size());
    double sum = 0;
    for (double& e : eta) sum += e = gamma(rng_);
    if (sum <= 0) return;
    const double w = cfg_.dirichlet->weight;
    for (std::size_t i = 0; i < prior.size(); ++i) prior[i] = (1 - w) * prior[i] + w * eta[i] / sum;
  }

  int select(const TreeNode& node) const {
    const double sqrt_n = std::sqrt(static_cast<double>(node.visits));
    int best = -1;
    double best_score = -1;
    for (std::size_t i = 0; i < node.actions.size(); ++i) {
      const int c = node.children[i];
      double q = 0;
      int n = 0;
      if (c >= 0) {
        const TreeNode& child = tree_.nodes[c];
        n = child.visits;
        q = child.total_reward / std::max(1, n);
      }
      const double score = q + cfg_.cp * node.prior[i] * sqrt_n / (1.0 + n);
      if (score > best_score) {
        best_score = score;
        best = static_cast<int>(i);
      }
    }
    return best;
  }

  void simulate() {
    int cur = 0;
    double reward;
    for (;;) {
      TreeNode& node = tree_.nodes[cur];
      if (node.status != Status::Unknown) {
        reward = node.status == Status::Proof ? 1.0 : 0.0;
        ++node.visits;
        node.total_reward += reward;
        break;
      }
      const int i = select(node);
      const int c = node.children[i];
      if (c < 0) {
        const Action a = node.actions[i];
        TableauState next = apply_action(node.state, a);
        reward = expand(cur, a, std::move(next));
        cur = static_cast<int>(tree_.nodes.size()) - 1;
        tree_.nodes[cur].visits = 1;
        tree_.nodes[cur].total_reward = reward;
        break;
      }
      cur = c;
    }
    for (int n = tree_.nodes[cur].parent; n >= 0; n = tree_.nodes[n].parent) {
      TreeNode& node = tree_.nodes[n];
      ++node.visits;
      node.total_reward += reward;
      if (!node.exhausted) {
        node.exhausted = std::all_of(node.children.begin(), node.children.end(),
                                     [&](int ch) { return ch >= 0 && tree_.nodes[ch].exhausted; });
      }
    }
  }

  const Guidance& g_;
  const MctsConfig& cfg_;
  std::mt19937_64 rng_;
  SearchTree tree_;
};

std::vector<Derivation> terminals(const SearchTree& t, Status st) {
  std::vector<Derivation> out;
  std::set<std::vector<Action>> seen;
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    if (t.nodes[i].status != st || t.nodes[i].state.is_root()) continue;
    auto actions = t.actions_to(static_cast<int>(i));
    if (seen.insert(actions).second) out.push_back({t.problem, std::move(actions), st});
  }
  return out;
}

}  // namespace

SearchTree run_mcts(const MatrixPtr& m, const Guidance& g, const MctsConfig& cfg) { return Search(m, g, cfg).run(); }

SearchTree run_mcts(const Problem& p, const Guidance& g, const MctsConfig& cfg) {
  return run_mcts(compile(p, CalculusOptions{cfg.max_depth}), g, cfg);
}

std::vector<NodeTarget> extract_targets(const SearchTree& t) {
  std::vector<NodeTarget> out;
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    const TreeNode& node = t.nodes[i];
    double total = 0;
    for (int c : node.children) total += c >= 0 ? t.nodes[c].visits : 0;
    if (total == 0) continue;
    NodeTarget target{static_cast<int>(i), {}, node.value()};
    for (int c : node.children) target.policy.push_back(c >= 0 ? t.nodes[c].visits / total : 0.0);
    out.push_back(std::move(target));
  }
  return out;
}

std::vector<Derivation> proofs_in_tree(const SearchTree& t) { return terminals(t, Status::Proof); }
std::vector<Derivation> failures_in_tree(const SearchTree& t) { return terminals(t, Status::Failure); }

std::string tree_stats_json(const SearchTree& t) {
  const auto proofs = proofs_in_tree(t);
  nlohmann::json j{{"problem", t.problem},
                   {"solved", !proofs.empty()},
                   {"proofs", proofs.size()},
                   {"failures", failures_in_tree(t).size()},
                   {"nodes", t.nodes.size()},
                   {"depth", t.max_depth()}};
  return j.dump();
}

}  // namespace pllcop
