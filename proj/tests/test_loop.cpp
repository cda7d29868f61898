#include <gtest/gtest.h>

#include <array>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "json.hpp"
#include "pllcop/arithmetic.hpp"
#include "pllcop/loop.hpp"
#include "test_util.hpp"

using namespace pllcop;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pllcop_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

ProblemSet small_set(int n = 40, std::uint64_t seed = 2) { return ProblemSet::from(ra::generate_ra_set(n, seed, {3, 3}), 20); }

LoopConfig small_config(const std::string& loss) {
  LoopConfig c;
  c.train.loss = parse_loss(loss);
  c.train.epochs = 3;
  c.mcts.inference_budget = 300;
  c.iterations = 3;
  return c;
}

IterationReport without_time(IterationReport r) {
  r.wall_time = 0;
  return r;
}

struct Output {
  int status;
  std::string text;
};

Output run_cli(const std::string& args) {
  const std::string cmd = std::string(PLLCOP_CLI) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed");
  std::string text;
  std::array<char, 4096> buf;
  while (std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) text.append(buf.data(), n);
  const int st = pclose(pipe);
  return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, text};
}

// Minimal DOT reader: digraph with node, edge, attribute and subgraph
// statements; identifiers or quoted strings as names and values.
class DotChecker {
 public:
  explicit DotChecker(std::string s) : s_(std::move(s)) {}
  bool valid() {
    try {
      ws();
      expect_word("digraph");
      id();
      block();
      ws();
      return i_ == s_.size();
    } catch (const std::exception&) {
      return false;
    }
  }

 private:
  void ws() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  bool peek(char c) {
    ws();
    return i_ < s_.size() && s_[i_] == c;
  }
  void expect(char c) {
    if (!peek(c)) throw std::runtime_error(std::string("expected ") + c + " at " + std::to_string(i_));
    ++i_;
  }
  void expect_word(const std::string& w) {
    if (id() != w) throw std::runtime_error("expected " + w);
  }
  std::string id() {
    ws();
    if (i_ >= s_.size()) throw std::runtime_error("eof");
    std::string out;
    if (s_[i_] == '"') {
      for (++i_; i_ < s_.size() && s_[i_] != '"'; ++i_) {
        if (s_[i_] == '\\') ++i_;
        out += s_[i_];
      }
      if (i_ >= s_.size()) throw std::runtime_error("open string");
      ++i_;
      return out.empty() ? std::string("\"\"") : out;
    }
    while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_' || s_[i_] == '.')) {
      out += s_[i_++];
    }
    if (out.empty()) throw std::runtime_error("expected identifier at " + std::to_string(i_));
    return out;
  }
  void attrs() {
    expect('[');
    while (!peek(']')) {
      id();
      expect('=');
      id();
      if (peek(',') || peek(';')) ++i_;
    }
    expect(']');
  }
  void block() {
    expect('{');
    while (!peek('}')) {
      const std::string first = id();
      if (first == "subgraph") {
        id();
        block();
        continue;
      }
      if (peek('=')) {
        ++i_;
        id();
      } else {
        ws();
        if (s_.compare(i_, 2, "->") == 0) {
          i_ += 2;
          id();
        }
        if (peek('[')) attrs();
      }
      expect(';');
    }
    expect('}');
  }

  std::string s_;
  std::size_t i_ = 0;
};

}  // namespace

TEST(Iteration, ExampleIsSolved) {
  const ProblemSet ps = ProblemSet::from({testutil::example_problem()}, 20);
  MctsConfig cfg;
  cfg.inference_budget = 200;
  const IterationResult r = run_iteration(ps, UniformGuidance(), cfg, 0);
  EXPECT_EQ(r.report.solved, 1);
  EXPECT_EQ(r.report.problems, 1);
  ASSERT_EQ(r.samples.size(), 1u);
  EXPECT_EQ(r.report.solved_names, std::vector<std::string>{"pelletier21"});
}

TEST(Iteration, ReportMatchesSamples) {
  const ProblemSet ps = small_set();
  MctsConfig cfg;
  cfg.inference_budget = 300;
  const IterationResult r = run_iteration(ps, UniformGuidance(), cfg, 0);
  EXPECT_EQ(r.report.solved, static_cast<int>(r.samples.size()));
  double proofs = 0, length = 0;
  for (const auto& s : r.samples) {
    proofs += s.proofs.size();
    for (const auto& d : s.proofs) length += d.length();
  }
  ASSERT_GT(r.report.solved, 0);
  EXPECT_NEAR(r.report.avg_proofs_per_solved, proofs / r.report.solved, 1e-9);
  EXPECT_NEAR(r.report.mean_proof_length, length / proofs, 1e-9);
}

TEST(Iteration, IndependentOfWorkerCount) {
  const ProblemSet ps = small_set();
  MctsConfig cfg;
  cfg.inference_budget = 300;
  cfg.dirichlet = DirichletNoise{};
  const IterationResult a = run_iteration(ps, UniformGuidance(), cfg, 1, 1);
  const IterationResult b = run_iteration(ps, UniformGuidance(), cfg, 1, 3);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_EQ(without_time(a.report), without_time(b.report));
}

TEST(Loop, SingleIterationIsUnguided) {
  LoopConfig c = small_config("nll");
  c.iterations = 1;
  const auto rs = expert_iteration(small_set(), c);
  ASSERT_EQ(rs.size(), 1u);
  EXPECT_TRUE(rs[0].policy_loss.empty());
  const IterationResult plain = run_iteration(small_set(), UniformGuidance(), c.mcts, 0);
  EXPECT_EQ(rs[0].solved, plain.report.solved);
}

TEST(Loop, RunDirectoryRoundTrip) {
  const fs::path dir = fresh_dir("rundir");
  LoopConfig c = small_config("libra");
  c.run_dir = dir.string();
  c.problems = "ra:count=40,seed=2,ops=3,bound=3";
  const auto rs = expert_iteration(small_set(), c);
  ASSERT_EQ(rs.size(), 3u);
  EXPECT_EQ(config_from_json(slurp(dir / "config.json")).problems, c.problems);
  EXPECT_EQ(config_to_json(config_from_json(slurp(dir / "config.json"))), slurp(dir / "config.json"));
  std::set<std::string> cumulative;
  for (int k = 0; k < 3; ++k) {
    const fs::path it = dir / ("iter_" + std::to_string(k));
    EXPECT_EQ(report_from_json(slurp(it / "report.json")), rs[k]);
    const auto samples = load_samples((it / "samples.jsonl").string());
    EXPECT_EQ(static_cast<int>(samples.size()), rs[k].solved);
    // avg proofs recomputed from the stored samples
    double proofs = 0;
    for (const auto& s : samples) proofs += s.proofs.size();
    if (!samples.empty()) EXPECT_NEAR(proofs / samples.size(), rs[k].avg_proofs_per_solved, 1e-9);
    for (const auto& n : rs[k].solved_names) cumulative.insert(n);
    EXPECT_EQ(rs[k].cumulative_solved, static_cast<int>(cumulative.size()));
    EXPECT_EQ(fs::exists(it / "model.bin"), k < 2);
    if (k < 2) EXPECT_EQ(rs[k].policy_loss.size(), 3u);
  }
  const auto rows = read_csv((dir / "report.csv").string());
  ASSERT_EQ(rows.size(), 3u);
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(rows[k][0], std::to_string(k));
    EXPECT_EQ(rows[k][1], "libra");
    EXPECT_EQ(rows[k][2], std::to_string(rs[k].solved));
    EXPECT_EQ(rows[k][3], std::to_string(rs[k].cumulative_solved));
  }
  fs::remove_all(dir);
}

TEST(Loop, RerunIsBitIdentical) {
  const fs::path a = fresh_dir("rerun_a"), b = fresh_dir("rerun_b");
  LoopConfig c = small_config("merit:0.5");
  c.model.hidden = 4;
  c.run_dir = a.string();
  const auto ra = expert_iteration(small_set(), c);
  c.run_dir = b.string();
  const auto rb = expert_iteration(small_set(), c);
  ASSERT_EQ(ra.size(), rb.size());
  for (std::size_t k = 0; k < ra.size(); ++k) EXPECT_EQ(without_time(ra[k]), without_time(rb[k]));
  for (int k = 0; k < 2; ++k) {
    const std::string it = "iter_" + std::to_string(k);
    EXPECT_EQ(slurp(a / it / "model.bin"), slurp(b / it / "model.bin"));
    EXPECT_EQ(slurp(a / it / "samples.jsonl"), slurp(b / it / "samples.jsonl"));
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Loop, ResumeContinuesInterruptedRun) {
  const fs::path full = fresh_dir("resume_full"), cut = fresh_dir("resume_cut");
  LoopConfig c = small_config("uniform");
  c.run_dir = full.string();
  const auto expected = expert_iteration(small_set(), c);

  c.run_dir = cut.string();
  expert_iteration(small_set(), c);
  // as if the run had stopped during the last iteration
  fs::remove(cut / "iter_2" / "report.json");
  fs::remove(cut / "report.csv");
  c.resume = true;
  const auto resumed = expert_iteration(small_set(), c);
  ASSERT_EQ(resumed.size(), expected.size());
  for (std::size_t k = 0; k < expected.size(); ++k) EXPECT_EQ(without_time(resumed[k]), without_time(expected[k]));
  EXPECT_EQ(slurp(cut / "iter_1" / "model.bin"), slurp(full / "iter_1" / "model.bin"));
  EXPECT_TRUE(fs::exists(cut / "report.csv"));
  fs::remove_all(full);
  fs::remove_all(cut);
}

TEST(Loop, Rejects) {
  LoopConfig c = small_config("nll");
  c.iterations = 0;
  EXPECT_THROW(expert_iteration(small_set(), c), Error);
  c.iterations = 1;
  EXPECT_THROW(expert_iteration(ProblemSet{}, c), Error);
  EXPECT_THROW(ProblemSet::from({testutil::example_problem(), testutil::example_problem()}, 20), Error);
}

TEST(Evaluate, SolvedSubset) {
  const ProblemSet ps = small_set();
  MctsConfig cfg;
  cfg.inference_budget = 300;
  const auto solved = evaluate(UniformGuidance(), ps, cfg);
  std::set<std::string> names;
  for (const auto& m : ps.problems) names.insert(m->problem().name);
  for (const auto& n : solved) EXPECT_TRUE(names.count(n));
  EXPECT_EQ(static_cast<int>(solved.size()), run_iteration(ps, UniformGuidance(), cfg, 0).report.solved);
  EXPECT_TRUE(evaluate(UniformGuidance(), ProblemSet{}, cfg).empty());
}

TEST(CpSweep, RowsAndDeterminism) {
  const ProblemSet ps = small_set();
  MctsConfig cfg;
  cfg.inference_budget = 300;
  const auto one = cp_sweep(ps, {2.0}, cfg);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].cp, 2.0);
  const auto a = cp_sweep(ps, {0.5, 5}, cfg);
  const auto b = cp_sweep(ps, {0.5, 5}, cfg);
  ASSERT_EQ(a.size(), 2u);
  for (int i = 0; i < 2; ++i) {
    EXPECT_EQ(a[i].solved, b[i].solved);
    EXPECT_EQ(a[i].avg_proofs, b[i].avg_proofs);
  }
  EXPECT_THROW(cp_sweep(ps, {}, cfg), Error);
}

TEST(Config, JsonRoundTrip) {
  LoopConfig c = small_config("short_pm");
  c.train.loss.lambda_fail = 0.25;
  c.train.optimizer = Optimizer::Adam;
  c.mcts.dirichlet = DirichletNoise{0.1, 0.5};
  c.model = ModelConfig{16, 32, 5};
  c.problems = "dir:/x";
  const LoopConfig d = config_from_json(config_to_json(c));
  EXPECT_EQ(config_to_json(d), config_to_json(c));
  EXPECT_EQ(d.train.loss.kind, LossKind::Kind::SinglePair);
  EXPECT_EQ(d.train.loss.lambda_fail, 0.25);
  EXPECT_EQ(d.mcts.dirichlet->alpha, 0.1);
  EXPECT_EQ(d.model.hidden, 32);
}

// ---------------------------------------------------------------- command line

TEST(Cli, HelpDocumentsDefaults) {
  for (const char* cmd : {"gen-ra", "prove", "loop", "dag", "report", "cp-sweep"}) {
    const Output o = run_cli(std::string(cmd) + " --help");
    EXPECT_EQ(o.status, 0) << cmd;
    EXPECT_NE(o.text.find("Usage"), std::string::npos) << cmd;
  }
  const Output loop = run_cli("loop --help");
  for (const char* flag : {"--cp", "--budget", "--epochs", "--loss", "--beta", "--workers", "--seed", "--resume"}) {
    EXPECT_NE(loop.text.find(flag), std::string::npos) << flag;
  }
  EXPECT_NE(loop.text.find("[2000]"), std::string::npos);
}

TEST(Cli, GenRa) {
  const fs::path a = fresh_dir("gen_a"), b = fresh_dir("gen_b"), e = fresh_dir("gen_empty");
  ASSERT_EQ(run_cli("gen-ra --count 5 --seed 3 --out-dir " + a.string()).status, 0);
  ASSERT_EQ(run_cli("gen-ra --count 5 --seed 3 --out-dir " + b.string()).status, 0);
  int files = 0;
  for (const auto& f : fs::directory_iterator(a)) {
    ++files;
    EXPECT_EQ(slurp(f.path()), slurp(b / f.path().filename()));
  }
  EXPECT_EQ(files, 5);
  ASSERT_EQ(run_cli("gen-ra --count 0 --out-dir " + e.string()).status, 0);
  EXPECT_TRUE(fs::is_empty(e));
  EXPECT_EQ(run_cli("gen-ra --count 1 --ops 0 --out-dir " + e.string()).status, 2);
  for (const auto& d : {a, b, e}) fs::remove_all(d);
}

TEST(Cli, ProveExitCodes) {
  const std::string example = std::string(PLLCOP_DATA_DIR) + "/pelletier21.p";
  const fs::path dir = fresh_dir("prove");
  fs::create_directories(dir);
  const fs::path proof = dir / "proof.json";
  EXPECT_EQ(run_cli("prove " + example + " --budget 200 --out " + proof.string()).status, 0);
  const auto j = nlohmann::json::parse(slurp(proof));
  std::vector<Action> actions;
  for (const auto& a : j.at("actions")) actions.push_back(parse_action(a.get<std::string>()));
  EXPECT_EQ(actions, testutil::example_short_proof());
  EXPECT_EQ(run_cli("prove " + example + " --budget 1").status, 1);
  EXPECT_EQ(run_cli("prove " + (dir / "missing.p").string()).status, 2);
  std::ofstream(dir / "bad.p") << "p | .\n";
  EXPECT_EQ(run_cli("prove " + (dir / "bad.p").string()).status, 2);
  fs::remove_all(dir);
}

TEST(Cli, Dag) {
  const std::string example = std::string(PLLCOP_DATA_DIR) + "/pelletier21.p";
  const fs::path dir = fresh_dir("dag");
  fs::create_directories(dir);
  const Output o = run_cli("dag " + example + " --out " + (dir / "p21").string());
  ASSERT_EQ(o.status, 0);
  const auto stats = nlohmann::json::parse(o.text);
  EXPECT_EQ(stats.at("nodes"), 14);
  EXPECT_EQ(stats.at("proofs"), 4);
  EXPECT_EQ(stats.at("failures"), 2);
  const std::string dot = slurp(dir / "p21.dot");
  EXPECT_TRUE(DotChecker(dot).valid());
  EXPECT_FALSE(DotChecker(dot.substr(0, dot.size() - 3)).valid());
  for (const char* color : {"palegreen", "lightpink", "legend"}) EXPECT_NE(dot.find(color), std::string::npos);
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "p21.json")).at("stats").at("nodes"), 14);

  std::ofstream(dir / "trivial.p") << "#start: 0\nq.\n~q.\n";
  const auto t = nlohmann::json::parse(run_cli("dag " + (dir / "trivial.p").string()).text);
  EXPECT_EQ(t.at("proofs"), 1);
  EXPECT_EQ(t.at("failures"), 0);
  EXPECT_EQ(run_cli("dag " + example + " --max-nodes 3").status, 2);
  fs::remove_all(dir);
}

TEST(Cli, LoopValidationAndReport) {
  const fs::path dir = fresh_dir("cli_loop");
  Output o = run_cli("loop --loss hinge --run-dir " + dir.string());
  EXPECT_EQ(o.status, 2);
  EXPECT_NE(o.text.find("valid choices"), std::string::npos);
  EXPECT_NE(o.text.find("libra"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir));
  EXPECT_EQ(run_cli("loop --optimizer rmsprop").status, 2);
  EXPECT_EQ(run_cli("loop --budget 0").status, 2);

  o = run_cli("loop --loss nll,bs --count 50 --iterations 3 --budget 300 --epochs 2 --run-dir " + dir.string());
  ASSERT_EQ(o.status, 0) << o.text;
  for (const char* loss : {"nll", "bs"}) {
    for (int k = 0; k < 3; ++k) EXPECT_TRUE(fs::exists(dir / loss / ("iter_" + std::to_string(k)) / "report.json"));
  }
  // an existing run is not overwritten
  EXPECT_EQ(run_cli("loop --run-dir " + dir.string()).status, 2);

  const Output table = run_cli("report " + dir.string());
  ASSERT_EQ(table.status, 0) << table.text;
  std::istringstream lines(table.text);
  std::string header, row1, row2;
  std::getline(lines, header);
  std::getline(lines, row1);
  std::getline(lines, row2);
  EXPECT_NE(header.find("it2"), std::string::npos);
  EXPECT_EQ(row1.substr(0, 2), "bs");
  EXPECT_EQ(row2.substr(0, 3), "nll");
  // cells are the CSV values unchanged
  const auto rows = read_csv((dir / "nll" / "report.csv").string());
  std::istringstream cells(row2.substr(3));
  for (const auto& r : rows) {
    std::string cell;
    cells >> cell;
    EXPECT_EQ(cell, r[2]);
  }

  // resuming a finished run changes nothing
  const std::string before = slurp(dir / "nll" / "iter_2" / "report.json");
  EXPECT_EQ(run_cli("loop --resume --run-dir " + dir.string()).status, 0);
  EXPECT_EQ(slurp(dir / "nll" / "iter_2" / "report.json"), before);

  const fs::path empty = fresh_dir("cli_empty");
  fs::create_directories(empty);
  EXPECT_EQ(run_cli("report " + empty.string()).status, 2);
  EXPECT_EQ(run_cli("report " + (empty / "nope").string()).status, 2);
  fs::remove_all(dir);
  fs::remove_all(empty);
}
