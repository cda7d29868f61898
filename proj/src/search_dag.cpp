#include "pllcop/search_dag.hpp"

#include <deque>
#include <unordered_map>

#include "json.hpp"

namespace pllcop {

std::size_t SearchDag::count(Status s) const {
  std::size_t n = 0;
  for (const Node& node : nodes) n += node.status == s ? 1 : 0;
  return n;
}

SearchDag enumerate_search_dag(const Problem& p, int max_depth, DagLimits limits) {
  if (max_depth < 1) throw Error("max_depth must be >= 1");
  const MatrixPtr m = compile(p, CalculusOptions{max_depth});
  SearchDag dag;
  std::unordered_map<std::string, int> unknown_ids;
  std::deque<std::pair<int, TableauState>> queue;

  auto add_node = [&](std::string key, Status st, int depth) {
    if (dag.nodes.size() >= limits.max_nodes) {
      throw Error("search DAG exceeds " + std::to_string(limits.max_nodes) + " nodes");
    }
    dag.nodes.push_back({std::move(key), st, depth});
    return static_cast<int>(dag.nodes.size()) - 1;
  };

  const TableauState root = TableauState::root(m);
  const auto root_actions = legal_actions(root);
  const int root_id = add_node(root.canonical_key(), root_actions.empty() ? Status::Failure : Status::Unknown, 0);
  unknown_ids.emplace(dag.nodes[root_id].key, root_id);
  queue.emplace_back(root_id, root);

  while (!queue.empty()) {
    auto [id, state] = std::move(queue.front());
    queue.pop_front();
    for (const Action& a : legal_actions(state)) {
      TableauState child = apply_action(state, a);
      const auto child_actions = legal_actions(child);
      const Status st = status(child, child_actions);
      int child_id;
      if (st == Status::Unknown) {
        const std::string key = child.canonical_key();
        auto it = unknown_ids.find(key);
        if (it != unknown_ids.end()) {
          child_id = it->second;
        } else {
          child_id = add_node(key, st, dag.nodes[id].depth + 1);
          unknown_ids.emplace(key, child_id);
          queue.emplace_back(child_id, std::move(child));
        }
      } else {
        // terminals stay distinct per incoming edge
        child_id = add_node(to_string(st) + ":" + dag.nodes[id].key + "/" + to_string(a), st, dag.nodes[id].depth + 1);
      }
      dag.edges.push_back({id, a, child_id});
    }
  }
  return dag;
}

std::string edge_label(const Problem& p, const Action& a) {
  if (a.kind == Action::Kind::Reduction) return "red";
  const Clause& c = p.clause(a.clause_id);
  // connected literal first, as in the usual drawings
  std::vector<Literal> lits;
  if (a.kind == Action::Kind::Extension) lits.push_back(c.literals[a.literal_index]);
  for (std::size_t i = 0; i < c.literals.size(); ++i) {
    if (a.kind != Action::Kind::Extension || static_cast<int>(i) != a.literal_index) lits.push_back(c.literals[i]);
  }
  std::string out;
  for (std::size_t i = 0; i < lits.size(); ++i) {
    if (i > 0) out += " & ";
    out += to_string(lits[i]);
  }
  return out;
}

namespace {
std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

const char* status_color(Status s) {
  switch (s) {
    case Status::Proof: return "palegreen";
    case Status::Failure: return "lightpink";
    case Status::Unknown: return "gray92";
  }
  return "white";
}
}  // namespace

std::string to_dot(const SearchDag& dag, const Problem& p) {
  std::string out = "digraph search_dag {\n  node [shape=circle, style=filled];\n";
  for (std::size_t i = 0; i < dag.nodes.size(); ++i) {
    out += "  n" + std::to_string(i) + " [label=\"" + std::to_string(i + 1) + "\", fillcolor=" +
           status_color(dag.nodes[i].status) + ", tooltip=\"" + to_string(dag.nodes[i].status) + "\"];\n";
  }
  for (const auto& e : dag.edges) {
    out += "  n" + std::to_string(e.from) + " -> n" + std::to_string(e.to) + " [label=\"" +
           dot_escape(edge_label(p, e.action)) + "\"];\n";
  }
  out += "  subgraph cluster_legend {\n    label=\"legend\";\n";
  out += "    legend_proof [label=\"Proof\", shape=box, fillcolor=palegreen];\n";
  out += "    legend_failure [label=\"Failure\", shape=box, fillcolor=lightpink];\n";
  out += "    legend_unknown [label=\"Unknown\", shape=box, fillcolor=gray92];\n  }\n}\n";
  return out;
}

std::string to_json(const SearchDag& dag, const Problem& p) {
  nlohmann::json j;
  j["problem"] = p.name;
  j["nodes"] = nlohmann::json::array();
  for (std::size_t i = 0; i < dag.nodes.size(); ++i) {
    j["nodes"].push_back({{"id", i}, {"status", to_string(dag.nodes[i].status)}, {"key", dag.nodes[i].key}});
  }
  j["edges"] = nlohmann::json::array();
  for (const auto& e : dag.edges) {
    j["edges"].push_back(
        {{"from", e.from}, {"to", e.to}, {"action", to_string(e.action)}, {"label", edge_label(p, e.action)}});
  }
  j["stats"] = {{"nodes", dag.nodes.size()},
                {"proofs", dag.count(Status::Proof)},
                {"failures", dag.count(Status::Failure)}};
  return j.dump(2);
}

}  // namespace pllcop
