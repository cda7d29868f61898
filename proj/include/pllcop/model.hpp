// Hashed-feature policy and value model.
//
// Features are hashed into [0, 2^dim_log2). A state contributes term walks:
// chains of up to three (symbol, argument position) steps ending at some
// subterm, starting from the signed predicate, with variables written as
// '*'. Policy features conjoin each walk of the selected goal, the walks of
// its two nearest path literals and a few size buckets with the action's key
// (the connected clause literal, or "reduction" and the path distance). The
// value head reads walks of the open goals and the same buckets.
//
// The policy score is linear in the features, or uses one ReLU hidden layer
// when hidden > 0. The value is a sigmoid of a linear score.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pllcop/dataset.hpp"
#include "pllcop/losses.hpp"
#include "pllcop/search.hpp"

namespace pllcop {

// Sorted feature indices; a repeated index counts several times.
struct FeatureVector {
  std::vector<std::uint32_t> index;
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

enum class Optimizer { SGD, Adam };

struct ModelConfig {
  int dim_log2 = 18;
  int hidden = 0;
  std::uint64_t init_seed = 0;  // hidden-layer initialization
};

struct PolicyForward {
  std::vector<double> probs;
  std::vector<double> logits;
};

class PolicyModel : public Guidance {
 public:
  explicit PolicyModel(ModelConfig cfg = {});

  const ModelConfig& config() const { return cfg_; }
  std::uint32_t dim() const { return 1U << cfg_.dim_log2; }

  FeatureVector featurize(const TableauState& s, const Action& a) const;
  std::vector<FeatureVector> featurize_all(const TableauState& s, std::span<const Action> actions) const;
  FeatureVector state_features(const TableauState& s) const;

  PolicyForward policy_forward(const TableauState& s, std::span<const Action> actions) const;
  double value_forward(const TableauState& s) const;

  double score(const FeatureVector& f) const;
  double value_from_features(const FeatureVector& f) const;

  std::vector<double> policy(const TableauState& s, std::span<const Action> actions) const override;
  double value(const TableauState& s) const override { return value_forward(s); }

  // All trainable parameters: policy weights, then value weights and bias.
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  std::size_t value_offset() const { return value_offset_; }

  // dscore/dparams for one feature vector, scaled by `g`, added into `grad`.
  void accumulate_score_grad(const FeatureVector& f, double g, std::vector<double>& grad,
                             std::vector<std::uint32_t>& touched) const;
  void accumulate_value_grad(const FeatureVector& f, double g, std::vector<double>& grad,
                             std::vector<std::uint32_t>& touched) const;

  friend bool operator==(const PolicyModel& a, const PolicyModel& b) {
    return a.cfg_.dim_log2 == b.cfg_.dim_log2 && a.cfg_.hidden == b.cfg_.hidden && a.params_ == b.params_;
  }

 private:
  ModelConfig cfg_;
  std::vector<double> params_;
  std::size_t value_offset_ = 0;
};

using ProblemLookup = std::function<MatrixPtr(const std::string&)>;

struct TrainConfig {
  LossKind loss{};
  int epochs = 10;
  double learning_rate = 0.05;
  Optimizer optimizer = Optimizer::SGD;
  std::uint64_t rng_seed = 0;
  bool accumulate_data = true;  // used by the training loop
};

struct TrainStats {
  std::vector<double> policy_loss;  // per epoch, mean over samples
  std::vector<double> value_loss;
};

// One update per sample per epoch, samples visited in a seeded shuffle.
// Throws Error on a non-finite loss.
TrainStats train(PolicyModel& m, const std::vector<PllSample>& samples, const ProblemLookup& problems,
                 const TrainConfig& cfg);

// A sample prepared for repeated loss evaluation: the states it touches
// are featurized once.
class CompiledSample {
 public:
  CompiledSample(const PolicyModel& m, const PllSample& s, const MatrixPtr& matrix, const TrainConfig& cfg);

  struct Result {
    double policy_loss = 0;
    double value_loss = 0;
  };
  // Loss at the current parameters; when `grad` is given, adds the gradient.
  Result evaluate(const PolicyModel& m, std::vector<double>* grad, std::vector<std::uint32_t>* touched,
                  const std::vector<double>* frozen_merit_weights = nullptr) const;
  // Current merit weights of the proofs (Merit loss only).
  std::vector<double> merit_weights(const PolicyModel& m) const;

 private:
  struct Step {
    std::vector<FeatureVector> actions;
    bool fixed = false;  // virtual root: uniform over start clauses
    std::vector<double> target;  // BS only
  };
  std::vector<double> step_logp(const PolicyModel& m, const Step& s) const;

  LossKind loss_;
  std::vector<Step> steps_;
  std::vector<StepPath> allowed_;
  std::vector<StepPath> avoid_;
  std::vector<FeatureVector> value_features_;
  std::vector<double> value_targets_;
};

struct GradCheck {
  double max_rel_error = 0;
  double max_abs_error_at_zero = 0;
  int coordinates = 0;
  int near_zero = 0;  // coordinates judged by absolute error
  int kinks = 0;      // coordinates skipped, the stencil crossed a relu kink
};

// The five-point stencil rounds off at about |loss| * 1e-16 / eps (1e-12 for
// eps = 1e-4), so gradients below this size are compared by absolute error.
inline constexpr double kGradCheckNearZero = 1e-7;
inline constexpr double kGradCheckKinkTolerance = 1e-6;

// Five-point differences on `n_coords` seeded random coordinates (most of
// them among those the sample touches) against the analytic gradient.
GradCheck grad_check(const PolicyModel& m, const PllSample& s, const MatrixPtr& matrix, const LossKind& loss,
                     double eps = 1e-4, std::uint64_t seed = 0, int n_coords = 50);

void save_model(const PolicyModel& m, const std::string& path);
// Throws Error on IO failure, bad magic, a version mismatch, or when
// `expected_dim_log2` >= 0 differs from the stored dimension.
PolicyModel load_model(const std::string& path, int expected_dim_log2 = -1);

}  // namespace pllcop
