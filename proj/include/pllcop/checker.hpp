#pragma once

#include <span>
#include <string>

#include "pllcop/tableau.hpp"

namespace pllcop {

struct CheckResult {
  bool ok = false;
  std::string reason;  // empty when ok
};

// Rebuilds the tableau tree from `actions` without using the search-side
// calculus code, then verifies that every branch is closed under the final
// substitution: by the connection that introduced the leaf, by a
// complementary ancestor, or by an identical literal closed earlier to the
// left of an ancestor (lemma).
CheckResult check_proof_detailed(const Problem& p, std::span<const Action> actions,
                                 CalculusOptions options = {});

bool check_proof(const Problem& p, std::span<const Action> actions, CalculusOptions options = {});

}  // namespace pllcop
