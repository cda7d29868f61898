// pllcop: generate problems, prove, run expert iteration, inspect results.
//
// Exit codes: 0 success, 1 no proof within the budget (prove), 2 bad input or IO.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pllcop/arithmetic.hpp"
#include "pllcop/checker.hpp"
#include "pllcop/loop.hpp"
#include "pllcop/parser.hpp"
#include "pllcop/search_dag.hpp"

namespace fs = std::filesystem;
using namespace pllcop;

namespace {

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out || !(out << text)) throw Error("cannot write " + p.string());
}

// Problem sets are described by a single string so that a run directory can
// rebuild its own set: "ra:count=200,seed=0,ops=3,bound=3" or "dir:<path>".
std::string ra_spec(int count, std::uint64_t seed, const ra::GeneratorConfig& g) {
  return "ra:count=" + std::to_string(count) + ",seed=" + std::to_string(seed) +
         ",ops=" + std::to_string(g.n_operators) + ",bound=" + std::to_string(g.operand_bound);
}

std::vector<Problem> load_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".p") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Problem> out;
  for (const auto& f : files) out.push_back(load_problem(f.string()));
  return out;
}

std::vector<Problem> problems_from_spec(const std::string& spec) {
  if (spec.rfind("dir:", 0) == 0) return load_dir(spec.substr(4));
  if (spec.rfind("ra:", 0) != 0) throw Error("unknown problem set description '" + spec + "'");
  std::map<std::string, long long> kv;
  std::stringstream ss(spec.substr(3));
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error("malformed problem set description '" + spec + "'");
    kv[item.substr(0, eq)] = std::stoll(item.substr(eq + 1));
  }
  for (const char* key : {"count", "seed", "ops", "bound"}) {
    if (!kv.count(key)) throw Error("problem set description lacks '" + std::string(key) + "'");
  }
  return ra::generate_ra_set(static_cast<int>(kv["count"]), static_cast<std::uint64_t>(kv["seed"]),
                             {static_cast<int>(kv["ops"]), static_cast<int>(kv["bound"])});
}

void validate_mcts(const MctsConfig& c) {
  if (!(c.cp >= 0)) throw Error("--cp must be >= 0");
  if (c.inference_budget < 1) throw Error("--budget must be >= 1");
  if (c.max_depth < 1) throw Error("--max-depth must be >= 1");
}

void validate_generator(const ra::GeneratorConfig& g) {
  if (g.n_operators < 1) throw Error("--ops must be >= 1");
  if (g.operand_bound < 1) throw Error("--bound must be >= 1");
}

void add_mcts_flags(CLI::App* cmd, MctsConfig& c) {
  cmd->add_option("--cp", c.cp, "MCTS exploration constant")->capture_default_str();
  cmd->add_option("--budget", c.inference_budget, "MCTS simulations per problem")->capture_default_str();
  cmd->add_option("--max-depth", c.max_depth, "maximal path length of an open goal")->capture_default_str();
}

void add_generator_flags(CLI::App* cmd, ra::GeneratorConfig& g) {
  cmd->add_option("--ops", g.n_operators, "operators per generated expression")->capture_default_str();
  cmd->add_option("--bound", g.operand_bound, "operands are drawn from [0, bound)")->capture_default_str();
}

// gen-ra ---------------------------------------------------------------

struct GenArgs {
  int count = 1000;
  std::uint64_t seed = 0;
  ra::GeneratorConfig gen;
  std::string out_dir;
};

int cmd_gen_ra(const GenArgs& a) {
  validate_generator(a.gen);
  if (a.count < 0) throw Error("--count must be >= 0");
  fs::create_directories(a.out_dir);
  for (const Problem& p : ra::generate_ra_set(a.count, a.seed, a.gen)) {
    write_text(fs::path(a.out_dir) / (p.name + ".p"), print_problem(p));
  }
  std::cout << "wrote " << a.count << " problems to " << a.out_dir << "\n";
  return 0;
}

// prove ----------------------------------------------------------------

struct ProveArgs {
  std::string problem;
  std::string model;
  std::string out;
  MctsConfig mcts;
  std::uint64_t seed = 0;
};

int cmd_prove(const ProveArgs& a) {
  MctsConfig cfg = a.mcts;
  cfg.rng_seed = a.seed;
  validate_mcts(cfg);
  const Problem p = load_problem(a.problem);
  std::optional<PolicyModel> model;
  if (!a.model.empty()) model = load_model(a.model);
  const UniformGuidance unguided;
  const Guidance& g = model ? static_cast<const Guidance&>(*model) : unguided;
  const SearchTree t = run_mcts(p, g, cfg);
  const auto proofs = proofs_in_tree(t);
  std::cerr << tree_stats_json(t) << "\n";
  if (proofs.empty()) {
    std::cout << p.name << ": no proof within " << cfg.inference_budget << " simulations\n";
    return 1;
  }
  const Derivation& best = *std::min_element(proofs.begin(), proofs.end(),
                                             [](const Derivation& x, const Derivation& y) { return x.length() < y.length(); });
  const CheckResult check = check_proof_detailed(p, best.actions, CalculusOptions{cfg.max_depth});
  if (!check.ok) throw Error("internal error: search returned a proof the checker rejects: " + check.reason);
  nlohmann::json j{{"problem", p.name}, {"status", "proof"}, {"actions", nlohmann::json::array()}};
  for (const Action& act : best.actions) j["actions"].push_back(to_string(act));
  const std::string text = j.dump(2) + "\n";
  if (a.out.empty()) {
    std::cout << text;
  } else {
    write_text(a.out, text);
    std::cout << p.name << ": proof of " << best.length() << " steps written to " << a.out << "\n";
  }
  return 0;
}

// loop -----------------------------------------------------------------

struct LoopArgs {
  LoopConfig cfg;
  std::string losses = "nll";
  std::string optimizer = "sgd";
  std::string problem_dir;
  int count = 200;
  std::uint64_t seed = 0;
  ra::GeneratorConfig gen{3, 3};
};

int run_one(const LoopConfig& cfg) {
  const ProblemSet ps = ProblemSet::from(problems_from_spec(cfg.problems), cfg.mcts.max_depth);
  const auto reports = expert_iteration(ps, cfg);
  for (const auto& r : reports) {
    std::cout << r.loss << " iteration " << r.iteration << ": solved " << r.solved << "/" << r.problems
              << ", cumulative " << r.cumulative_solved << ", proofs per solved " << r.avg_proofs_per_solved << "\n";
  }
  return 0;
}

int cmd_loop(LoopArgs a) {
  if (a.cfg.resume) {
    if (a.cfg.run_dir.empty()) throw Error("--resume needs --run-dir");
    std::vector<fs::path> runs;
    if (fs::exists(fs::path(a.cfg.run_dir) / "config.json")) {
      runs.push_back(a.cfg.run_dir);
    } else if (fs::is_directory(a.cfg.run_dir)) {
      for (const auto& e : fs::directory_iterator(a.cfg.run_dir)) {
        if (fs::exists(e.path() / "config.json")) runs.push_back(e.path());
      }
      std::sort(runs.begin(), runs.end());
    }
    if (runs.empty()) throw Error("nothing to resume in " + a.cfg.run_dir);
    for (const auto& dir : runs) {
      std::ifstream in(dir / "config.json");
      std::stringstream text;
      text << in.rdbuf();
      LoopConfig cfg = config_from_json(text.str());
      cfg.run_dir = dir.string();
      cfg.resume = true;
      run_one(cfg);
    }
    return 0;
  }

  // everything is validated before any search starts
  std::vector<LossKind> losses;
  std::stringstream ls(a.losses);
  std::string item;
  while (std::getline(ls, item, ',')) losses.push_back(parse_loss(item));
  if (losses.empty()) throw Error("--loss is empty");
  for (auto& l : losses) {
    if (l.kind == LossKind::Kind::Merit && a.losses.find("merit:") == std::string::npos) l.beta = a.cfg.train.loss.beta;
  }
  if (a.optimizer != "sgd" && a.optimizer != "adam") {
    throw Error("unknown optimizer '" + a.optimizer + "'; valid choices: sgd, adam");
  }
  validate_mcts(a.cfg.mcts);
  validate_generator(a.gen);
  if (a.cfg.iterations < 1) throw Error("--iterations must be >= 1");
  if (a.cfg.workers < 1) throw Error("--workers must be >= 1");
  if (a.cfg.train.epochs < 0) throw Error("--epochs must be >= 0");
  if (!(a.cfg.train.learning_rate > 0)) throw Error("--lr must be > 0");
  if (a.cfg.model.dim_log2 < 4 || a.cfg.model.dim_log2 > 28) throw Error("--dim-log2 must lie in [4, 28]");
  if (a.cfg.model.hidden < 0) throw Error("--hidden must be >= 0");
  if (!(a.cfg.train.loss.beta >= 0 && a.cfg.train.loss.beta <= 1)) throw Error("--beta must lie in [0, 1]");

  a.cfg.train.optimizer = a.optimizer == "adam" ? Optimizer::Adam : Optimizer::SGD;
  a.cfg.mcts.rng_seed = a.seed;
  a.cfg.train.rng_seed = a.seed;
  a.cfg.model.init_seed = a.seed;
  a.cfg.problems = a.problem_dir.empty() ? ra_spec(a.count, a.seed, a.gen)
                                         : "dir:" + fs::absolute(a.problem_dir).string();
  if (!a.cfg.run_dir.empty() && fs::exists(a.cfg.run_dir) && !fs::is_empty(a.cfg.run_dir)) {
    throw Error("run directory " + a.cfg.run_dir + " is not empty (use --resume to continue it)");
  }
  for (const LossKind& l : losses) {
    LoopConfig cfg = a.cfg;
    cfg.train.loss = l;
    if (losses.size() > 1 && !cfg.run_dir.empty()) cfg.run_dir = (fs::path(cfg.run_dir) / to_string(l)).string();
    run_one(cfg);
  }
  return 0;
}

// dag ------------------------------------------------------------------

struct DagArgs {
  std::string problem;
  std::string out;
  int max_depth = 20;
  std::size_t max_nodes = 100000;
};

int cmd_dag(const DagArgs& a) {
  const Problem p = load_problem(a.problem);
  const SearchDag dag = enumerate_search_dag(p, a.max_depth, DagLimits{a.max_nodes});
  if (!a.out.empty()) {
    write_text(a.out + ".dot", to_dot(dag, p));
    write_text(a.out + ".json", to_json(dag, p) + "\n");
  }
  nlohmann::json stats{{"nodes", dag.nodes.size()},
                       {"proofs", dag.count(Status::Proof)},
                       {"failures", dag.count(Status::Failure)}};
  std::cout << stats.dump() << "\n";
  return 0;
}

// report ---------------------------------------------------------------

struct Run {
  std::string label;
  std::vector<std::vector<std::string>> rows;  // iteration,loss,solved,cumulative,avg_proofs,mean_len,seconds
};

std::string pad(const std::string& s, std::size_t w) { return std::string(w > s.size() ? w - s.size() : 0, ' ') + s; }

void print_table(const std::string& title, const std::vector<Run>& runs, int n_iter,
                 const std::function<std::string(const std::vector<std::string>&)>& cell) {
  std::vector<std::vector<std::string>> grid;
  grid.push_back({title});
  for (int k = 0; k < n_iter; ++k) grid[0].push_back("it" + std::to_string(k));
  for (const Run& r : runs) {
    std::vector<std::string> line{r.label};
    line.resize(static_cast<std::size_t>(n_iter) + 1, "-");
    for (const auto& row : r.rows) line[std::stoul(row[0]) + 1] = cell(row);
    grid.push_back(line);
  }
  std::vector<std::size_t> width(grid[0].size(), 0);
  for (const auto& line : grid) {
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  }
  for (const auto& line : grid) {
    std::cout << line[0] << std::string(width[0] - line[0].size(), ' ');
    for (std::size_t c = 1; c < line.size(); ++c) std::cout << "  " << pad(line[c], width[c]);
    std::cout << "\n";
  }
}

int cmd_report(const std::string& run_dir) {
  if (!fs::is_directory(run_dir)) throw Error("no such run directory: " + run_dir);
  std::vector<fs::path> csvs;
  if (fs::exists(fs::path(run_dir) / "report.csv")) csvs.push_back(fs::path(run_dir) / "report.csv");
  for (const auto& e : fs::directory_iterator(run_dir)) {
    if (e.is_directory() && fs::exists(e.path() / "report.csv")) csvs.push_back(e.path() / "report.csv");
  }
  if (csvs.empty()) throw Error("no report.csv in " + run_dir);
  std::sort(csvs.begin(), csvs.end());

  std::vector<Run> runs;
  std::map<std::string, int> per_loss;
  int n_iter = 0;
  for (const auto& path : csvs) {
    Run r;
    r.rows = read_csv(path.string());
    for (const auto& row : r.rows) {
      if (row.size() != 7) throw Error(path.string() + ": expected 7 columns");
      n_iter = std::max(n_iter, std::stoi(row[0]) + 1);
    }
    if (r.rows.empty()) continue;
    r.label = r.rows[0][1];
    ++per_loss[r.label];
    runs.push_back(std::move(r));
  }
  // the same loss twice (several seeds): tell the runs apart by directory
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (per_loss[runs[i].label] > 1) runs[i].label += " [" + csvs[i].parent_path().filename().string() + "]";
  }
  print_table("solved", runs, n_iter, [](const auto& row) { return row[2]; });
  std::cout << "\n";
  print_table("cumulative", runs, n_iter, [](const auto& row) { return row[3]; });
  std::cout << "\n";
  print_table("proofs/solved", runs, n_iter, [](const auto& row) { return row[4]; });
  return 0;
}

// cp-sweep -------------------------------------------------------------

struct SweepArgs {
  std::vector<double> cps{0.5, 1, 2, 5};
  MctsConfig mcts;
  int count = 200;
  std::uint64_t seed = 0;
  ra::GeneratorConfig gen{3, 3};
  int workers = 1;
};

int cmd_cp_sweep(SweepArgs a) {
  validate_mcts(a.mcts);
  validate_generator(a.gen);
  a.mcts.rng_seed = a.seed;
  const ProblemSet ps = ProblemSet::from(ra::generate_ra_set(a.count, a.seed, a.gen), a.mcts.max_depth);
  std::cout << std::setw(6) << "cp" << std::setw(8) << "solved" << std::setw(16) << "proofs/solved" << "\n";
  for (const CpRow& r : cp_sweep(ps, a.cps, a.mcts, a.workers)) {
    std::cout << std::setw(6) << r.cp << std::setw(8) << r.solved << std::setw(16) << r.avg_proofs << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Connection tableau prover with partial-label-learning guidance"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-ra", "write generated Robinson Arithmetic problems");
  gen_cmd->add_option("--count", gen.count, "number of problems")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "generator seed")->capture_default_str();
  gen_cmd->add_option("--out-dir", gen.out_dir, "output directory")->required();
  add_generator_flags(gen_cmd, gen.gen);

  ProveArgs prove;
  auto* prove_cmd = app.add_subcommand("prove", "search for a proof of one problem");
  prove_cmd->add_option("problem", prove.problem, "matrix file")->required();
  prove_cmd->add_option("--model", prove.model, "model file; uniform policy when absent");
  prove_cmd->add_option("--out", prove.out, "proof file; stdout when absent");
  prove_cmd->add_option("--seed", prove.seed, "search seed")->capture_default_str();
  add_mcts_flags(prove_cmd, prove.mcts);

  LoopArgs loop;
  auto* loop_cmd = app.add_subcommand("loop", "run expert iteration");
  loop_cmd->add_option("--loss", loop.losses,
                       "comma-separated losses: bs, nll, uniform, merit[:beta], libra, short, long, rand, "
                       "short_pm, long_pm, rand_pm; several losses get one subdirectory each")
      ->capture_default_str();
  loop_cmd->add_option("--beta", loop.cfg.train.loss.beta, "merit beta when --loss merit has none")->capture_default_str();
  loop_cmd->add_option("--lambda-fail", loop.cfg.train.loss.lambda_fail, "weight of the avoided failure in *_pm losses")
      ->capture_default_str();
  loop_cmd->add_option("--epochs", loop.cfg.train.epochs, "training epochs per iteration")->capture_default_str();
  loop_cmd->add_option("--lr", loop.cfg.train.learning_rate, "learning rate")->capture_default_str();
  loop_cmd->add_option("--optimizer", loop.optimizer, "sgd or adam")->capture_default_str();
  loop_cmd->add_option("--no-accumulate", [&loop](const CLI::results_t&) { loop.cfg.train.accumulate_data = false; return true; },
                       "train on the latest iteration's samples only")
      ->expected(0);
  loop_cmd->add_option("--iterations", loop.cfg.iterations, "search iterations, the unguided one included")
      ->capture_default_str();
  loop_cmd->add_option("--dim-log2", loop.cfg.model.dim_log2, "log2 of the hashed feature dimension")->capture_default_str();
  loop_cmd->add_option("--hidden", loop.cfg.model.hidden, "hidden units of the policy; 0 is linear")->capture_default_str();
  loop_cmd->add_option("--workers", loop.cfg.workers, "search threads; 1 is bit-reproducible")->capture_default_str();
  loop_cmd->add_option("--seed", loop.seed, "seed of problems, search, training and initialization")->capture_default_str();
  loop_cmd->add_option("--run-dir", loop.cfg.run_dir, "run directory; nothing is written when absent");
  loop_cmd->add_flag("--resume", loop.cfg.resume, "continue the run(s) in --run-dir from their saved config");
  loop_cmd->add_option("--problems", loop.problem_dir, "directory of .p files; generated problems when absent");
  loop_cmd->add_option("--count", loop.count, "generated problems")->capture_default_str();
  add_generator_flags(loop_cmd, loop.gen);
  add_mcts_flags(loop_cmd, loop.cfg.mcts);

  DagArgs dag;
  auto* dag_cmd = app.add_subcommand("dag", "enumerate the whole search graph of a small problem");
  dag_cmd->add_option("problem", dag.problem, "matrix file")->required();
  dag_cmd->add_option("--out", dag.out, "write <out>.dot and <out>.json");
  dag_cmd->add_option("--max-depth", dag.max_depth, "maximal path length of an open goal")->capture_default_str();
  dag_cmd->add_option("--max-nodes", dag.max_nodes, "give up beyond this many nodes")->capture_default_str();

  std::string report_dir;
  auto* report_cmd = app.add_subcommand("report", "print the tables of a run directory");
  report_cmd->add_option("run_dir", report_dir, "run directory, or a directory of runs")->required();

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("cp-sweep", "unguided search at several exploration constants");
  sweep_cmd->add_option("--cps", sweep.cps, "exploration constants")->capture_default_str();
  sweep_cmd->add_option("--count", sweep.count, "generated problems")->capture_default_str();
  sweep_cmd->add_option("--seed", sweep.seed, "problem and search seed")->capture_default_str();
  sweep_cmd->add_option("--workers", sweep.workers, "search threads")->capture_default_str();
  add_generator_flags(sweep_cmd, sweep.gen);
  sweep_cmd->add_option("--budget", sweep.mcts.inference_budget, "MCTS simulations per problem")->capture_default_str();
  sweep_cmd->add_option("--max-depth", sweep.mcts.max_depth, "maximal path length of an open goal")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*gen_cmd) return cmd_gen_ra(gen);
    if (*prove_cmd) return cmd_prove(prove);
    if (*loop_cmd) return cmd_loop(loop);
    if (*dag_cmd) return cmd_dag(dag);
    if (*report_cmd) return cmd_report(report_dir);
    if (*sweep_cmd) return cmd_cp_sweep(sweep);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
