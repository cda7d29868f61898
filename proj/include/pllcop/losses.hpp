// Partial-label losses.
//
// Flat form: a probability vector p with an allowed mask y, k = sum(y) and
// P_acc = sum(y_i p_i).
//   nll      -log P_acc
//   uniform  -sum_i y_i log p_i
//   merit    -sum_i w_i log p_i,  w_i = y_i (p_i/P_acc)^beta / sum_q y_q (p_q/P_acc)^beta,
//            weights held constant when differentiating
//   libra    -(1/k) sum_i y_i log p_i + log(1 - P_acc)
//
// Sequential form: the allowed labels are the proofs of one problem and
// p_d is the product of the policy probabilities along derivation d. Losses
// are written as functions of log p_d; their gradients are pushed through
// each step's softmax by assemble_sequential_gradient.
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pllcop/dataset.hpp"

namespace pllcop {

inline constexpr double kProbFloor = 1e-12;

struct LossGrad {
  double value = 0;
  std::vector<double> grad;
};

// Probability level: grad is dL/dp.
LossGrad nll_loss(std::span<const double> p, std::span<const bool> y);
LossGrad uniform_loss(std::span<const double> p, std::span<const bool> y);
LossGrad merit_loss(std::span<const double> p, std::span<const bool> y, double beta);
LossGrad libra_loss(std::span<const double> p, std::span<const bool> y);

std::vector<double> merit_weights(std::span<const double> p, std::span<const bool> y, double beta);
// Merit value with the given weights held fixed; its derivative is the merit gradient.
LossGrad merit_surrogate(std::span<const double> p, std::span<const double> weights);

std::vector<double> softmax(std::span<const double> z);
std::vector<double> log_softmax(std::span<const double> z);
// dL/dz for p = softmax(z) given dL/dp.
std::vector<double> softmax_backward(std::span<const double> p, std::span<const double> dp);

struct LossKind {
  enum class Kind { BS, NLL, Uniform, Merit, Libra, Single, SinglePair };
  Kind kind = Kind::NLL;
  double beta = 0.5;                // Merit
  SelectionStrategy strategy{};     // Single, SinglePair
  double lambda_fail = 1.0;         // SinglePair

  bool sequential() const { return kind != Kind::BS; }
};

// bs | nll | uniform | merit:<beta> | libra | short | long | rand | short± |
// long± | rand± (also short_pm, long_pm, rand_pm). Throws Error listing the
// valid choices.
LossKind parse_loss(const std::string& text);
std::string to_string(const LossKind& k);

// Derivation-level loss over log-probabilities of the proofs (`allowed`) and,
// for SinglePair, of derivations to avoid. Returns dL/dlog p per entry.
struct DerivationLoss {
  double value = 0;
  std::vector<double> d_allowed;
  std::vector<double> d_avoid;
};
DerivationLoss derivation_loss(const LossKind& kind, std::span<const double> allowed_logp,
                               std::span<const double> avoid_logp = {},
                               const std::vector<double>* frozen_merit_weights = nullptr);

// A set of derivations over shared steps. steps[s] is the log-distribution
// of one state; a path lists (step, chosen action index) pairs.
struct StepPath {
  std::vector<std::pair<int, int>> steps;
};

double derivation_logprob(const StepPath& d, const std::vector<std::vector<double>>& step_logp);

// Chain rule: dL/dz at every step, given dL/dlog p_d per path. A step shared
// by several paths receives the sum of their contributions.
std::vector<std::vector<double>> assemble_sequential_gradient(std::span<const StepPath> paths,
                                                              std::span<const double> dlogp,
                                                              const std::vector<std::vector<double>>& step_logp);

// Cross-entropy of one node's target distribution against the model; grad
// is dL/dz (= model - target).
LossGrad bs_node_loss(std::span<const double> target, std::span<const double> logp);

}  // namespace pllcop
