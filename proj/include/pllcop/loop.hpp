// Expert iteration: search every problem, extract samples, train, repeat.
//
// Run directory layout:
//   config.json             the LoopConfig, written before any work
//   iter_<k>/samples.jsonl  samples extracted in iteration k
//   iter_<k>/report.json    the IterationReport of iteration k
//   iter_<k>/model.bin      the model after training on the data of iteration k
//   report.csv              iteration,loss,solved,cumulative,avg_proofs,mean_len,seconds
// Iteration 0 searches without guidance. No model is trained after the last
// iteration.
#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pllcop/dataset.hpp"
#include "pllcop/model.hpp"
#include "pllcop/search.hpp"

namespace pllcop {

struct IterationReport {
  int iteration = 0;
  std::string loss;
  int problems = 0;
  int solved = 0;
  int cumulative_solved = 0;
  double avg_proofs_per_solved = 0;
  double mean_proof_length = 0;  // over all proofs found
  double wall_time = 0;          // seconds; the only non-reproducible field
  std::vector<double> policy_loss;  // per epoch of the training that followed
  std::vector<double> value_loss;
  std::vector<std::string> solved_names;

  friend bool operator==(const IterationReport&, const IterationReport&) = default;
};

std::string report_to_json(const IterationReport& r);
IterationReport report_from_json(const std::string& text);

struct ProblemSet {
  std::vector<MatrixPtr> problems;

  static ProblemSet from(const std::vector<Problem>& ps, int max_depth);
  ProblemLookup lookup() const;
};

struct IterationResult {
  std::vector<PllSample> samples;
  IterationReport report;
};

// Searches every problem with `g` on `workers` threads. Problem i uses the
// MCTS seed hash(cfg.rng_seed, iteration, i), so results do not depend on
// the worker count.
IterationResult run_iteration(const ProblemSet& ps, const Guidance& g, const MctsConfig& cfg, int iteration,
                              int workers = 1);

struct LoopConfig {
  MctsConfig mcts{};
  TrainConfig train{};
  ModelConfig model{};
  int iterations = 4;  // search iterations, the unguided one included
  int workers = 1;
  std::string run_dir;   // empty: keep nothing on disk
  std::string problems;  // how the problem set was made, recorded for reruns
  bool resume = false;   // continue after the last iteration found in run_dir
};

std::string config_to_json(const LoopConfig& c);
LoopConfig config_from_json(const std::string& text);

std::vector<IterationReport> expert_iteration(const ProblemSet& ps, const LoopConfig& cfg);

// Names of the problems whose tree holds a proof.
std::set<std::string> evaluate(const Guidance& g, const ProblemSet& ps, const MctsConfig& cfg, int workers = 1);

struct CpRow {
  double cp = 0;
  int solved = 0;
  double avg_proofs = 0;
};
std::vector<CpRow> cp_sweep(const ProblemSet& ps, const std::vector<double>& cps, const MctsConfig& cfg,
                            int workers = 1);

std::string reports_to_csv(const std::vector<IterationReport>& rs);
// Rows of an aggregate CSV, header excluded.
std::vector<std::vector<std::string>> read_csv(const std::string& path);

}  // namespace pllcop
