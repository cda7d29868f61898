// Complete search space of a problem as a DAG.
//
// Unknown (extendable) states are merged by canonical key, so two routes to
// the same open goals share a node. Terminal states are not merged: every
// edge into a Proof or Failure gets its own node, which keeps one terminal
// per distinct derivation.
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pllcop/tableau.hpp"

namespace pllcop {

struct SearchDag {
  struct Node {
    std::string key;
    Status status = Status::Unknown;
    int depth = 0;  // number of actions on the first route found
  };
  struct Edge {
    int from;
    Action action;
    int to;
  };

  std::vector<Node> nodes;  // node 0 is the root
  std::vector<Edge> edges;

  std::size_t count(Status s) const;
};

struct DagLimits {
  std::size_t max_nodes = 100000;
};

// Throws Error when the node cap is exceeded.
SearchDag enumerate_search_dag(const Problem& p, int max_depth, DagLimits limits = {});

// Edge label as a short clause description ("red" for reductions).
std::string edge_label(const Problem& p, const Action& a);

std::string to_dot(const SearchDag& dag, const Problem& p);
std::string to_json(const SearchDag& dag, const Problem& p);

}  // namespace pllcop
