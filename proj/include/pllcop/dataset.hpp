// Training samples extracted from search trees.
//
// Storage is JSON Lines. The first line is the header
//   {"format":"pll-samples","version":1}
// and every further line is one sample:
//   {"problem": str,
//    "proofs":   [{"actions": [act...], "status": "proof", "length": n}...],
//    "failures": [{"actions": [act...], "status": "failure", "length": n}...],
//    "targets":  [{"parent": i, "action": act, "policy": [p...], "value": v}...]}
// with actions written as "start(c)", "ext(c,l)" or "red(i)". Targets list the
// internal nodes of the tree in creation order; "parent" indexes that list
// (-1 for the root) and "policy" is aligned with legal_actions of the node.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pllcop/search.hpp"

namespace pllcop {

struct TreeTarget {
  int parent = -1;
  Action action{};  // from the parent; unused at the root
  std::vector<double> policy;
  double value = 0;

  friend bool operator==(const TreeTarget&, const TreeTarget&) = default;
};

struct PllSample {
  std::string problem;
  std::vector<Derivation> proofs;
  std::vector<Derivation> failures;
  std::vector<TreeTarget> targets;

  friend bool operator==(const PllSample&, const PllSample&) = default;
};

// Absent when the tree holds no proof.
std::optional<PllSample> extract_sample(const SearchTree& t);

struct SelectionStrategy {
  enum class Kind { Short, Long, Rand };
  Kind kind = Kind::Short;
  std::uint64_t seed = 0;  // Rand only
};

// Shortest / longest derivation (ties: lexicographically smallest action
// sequence) or a seeded uniform pick. Throws on an empty list.
const Derivation& select_single(const std::vector<Derivation>& ds, const SelectionStrategy& strat);
const Derivation& select_single(const PllSample& s, const SelectionStrategy& strat);

// The selected proof and, when the sample has failures, the failure selected
// with the same strategy.
std::pair<Derivation, std::optional<Derivation>> pair_with_failure(const PllSample& s,
                                                                   const SelectionStrategy& strat);

Action parse_action(const std::string& text);

std::string sample_to_json(const PllSample& s);
PllSample sample_from_json(const std::string& line);

void save_samples(const std::vector<PllSample>& samples, const std::string& path);
// Throws Error naming the offending record index on malformed input.
std::vector<PllSample> load_samples(const std::string& path);

}  // namespace pllcop
