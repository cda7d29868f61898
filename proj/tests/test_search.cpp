#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>

#include "pllcop/arithmetic.hpp"
#include "pllcop/checker.hpp"
#include "pllcop/dataset.hpp"
#include "pllcop/search.hpp"
#include "pllcop/search_dag.hpp"
#include "test_util.hpp"

using namespace pllcop;

namespace {

SearchTree exhaustive_example(double cp = 1.0) {
  MctsConfig cfg;
  cfg.cp = cp;
  cfg.inference_budget = 200;
  return run_mcts(testutil::example_problem(), UniformGuidance(), cfg);
}

// Root-to-terminal paths of the enumerated DAG, counted per status.
std::map<Status, long> dag_path_counts(const SearchDag& dag) {
  std::vector<std::vector<int>> out(dag.nodes.size());
  for (const auto& e : dag.edges) out[e.from].push_back(e.to);
  std::map<int, std::map<Status, long>> memo;
  std::function<std::map<Status, long>(int)> count = [&](int n) {
    if (auto it = memo.find(n); it != memo.end()) return it->second;
    std::map<Status, long> c;
    if (dag.nodes[n].status != Status::Unknown) {
      c[dag.nodes[n].status] = 1;
    } else {
      for (int m : out[n]) {
        for (auto [s, k] : count(m)) c[s] += k;
      }
    }
    return memo[n] = c;
  };
  return count(0);
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("pllcop_" + name)).string();
}

}  // namespace

TEST(Mcts, ExhaustsExampleWithinBudget) {
  const SearchTree t = exhaustive_example();
  EXPECT_TRUE(t.complete());
  EXPECT_LT(t.simulations, 200);
  const auto proofs = proofs_in_tree(t);
  ASSERT_FALSE(proofs.empty());
  for (const auto& d : proofs) EXPECT_TRUE(check_proof(testutil::example_problem(), d.actions));
  EXPECT_NE(std::find_if(proofs.begin(), proofs.end(),
                         [](const Derivation& d) { return d.actions == testutil::example_short_proof(); }),
            proofs.end());
}

TEST(Mcts, ExhaustiveTreeMatchesDagPaths) {
  const SearchTree t = exhaustive_example();
  const auto paths = dag_path_counts(enumerate_search_dag(testutil::example_problem(), 20));
  EXPECT_EQ(static_cast<long>(proofs_in_tree(t).size()), paths.at(Status::Proof));
  EXPECT_EQ(static_cast<long>(failures_in_tree(t).size()), paths.at(Status::Failure));
}

TEST(Mcts, TreeInvariants) {
  const auto problems = ra::generate_ra_set(5, 7, {3, 3});
  for (const Problem& p : problems) {
    MctsConfig cfg;
    cfg.inference_budget = 300;
    const SearchTree t = run_mcts(p, UniformGuidance(), cfg);
    EXPECT_LE(t.simulations, cfg.inference_budget);
    EXPECT_LE(t.expansions(), static_cast<std::size_t>(cfg.inference_budget));
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
      const TreeNode& n = t.nodes[i];
      ASSERT_GE(n.visits, 1);
      EXPECT_GE(n.total_reward, 0.0);
      EXPECT_LE(n.total_reward, n.visits + 1e-12);
      if (n.status != Status::Unknown) continue;
      // visit conservation at internal nodes
      int child_visits = 0;
      for (int c : n.children) {
        if (c >= 0) {
          child_visits += t.nodes[c].visits;
          EXPECT_EQ(t.nodes[c].parent, static_cast<int>(i));
        }
      }
      EXPECT_EQ(n.visits, 1 + child_visits);
      // priors form a distribution over the legal actions
      EXPECT_NEAR(std::accumulate(n.prior.begin(), n.prior.end(), 0.0), 1.0, 1e-9);
      if (i > 0) EXPECT_EQ(n.actions, legal_actions(n.state));
    }
  }
}

TEST(Mcts, Deterministic) {
  const Problem p = ra::generate_ra_problem(11, {3, 3});
  MctsConfig cfg;
  cfg.inference_budget = 500;
  cfg.dirichlet = DirichletNoise{};
  cfg.rng_seed = 3;
  const SearchTree a = run_mcts(p, UniformGuidance(), cfg);
  const SearchTree b = run_mcts(p, UniformGuidance(), cfg);
  ASSERT_EQ(a.nodes.size(), b.nodes.size());
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    EXPECT_EQ(a.nodes[i].visits, b.nodes[i].visits);
    EXPECT_EQ(a.nodes[i].total_reward, b.nodes[i].total_reward);
    EXPECT_EQ(a.nodes[i].children, b.nodes[i].children);
    EXPECT_EQ(a.nodes[i].prior, b.nodes[i].prior);
  }
}

TEST(Mcts, NoiseChangesOnlyRootPriors) {
  const Problem p = ra::generate_ra_problem(4, {3, 3});
  MctsConfig cfg;
  cfg.inference_budget = 50;
  const SearchTree plain = run_mcts(p, UniformGuidance(), cfg);
  cfg.dirichlet = DirichletNoise{};
  const SearchTree noisy = run_mcts(p, UniformGuidance(), cfg);
  EXPECT_NEAR(std::accumulate(noisy.nodes[0].prior.begin(), noisy.nodes[0].prior.end(), 0.0), 1.0, 1e-9);
  EXPECT_EQ(plain.nodes[1].prior, noisy.nodes[1].prior);
}

TEST(Mcts, ZeroCpFollowsBestValue) {
  // Without exploration every simulation re-enters the child with the best
  // mean reward; with value 0 for new nodes and a single start clause the
  // search keeps extending the first branch it opened.
  const Problem p = ra::generate_ra_problem(2, {3, 3});
  MctsConfig cfg;
  cfg.cp = 0;
  cfg.inference_budget = 40;
  const SearchTree t = run_mcts(p, UniformGuidance(0.0), cfg);
  for (const TreeNode& n : t.nodes) {
    int expanded = 0;
    for (int c : n.children) expanded += c >= 0;
    EXPECT_LE(expanded, 1);
  }
}

TEST(Mcts, BudgetOne) {
  MctsConfig cfg;
  cfg.inference_budget = 1;
  const SearchTree t = run_mcts(testutil::example_problem(), UniformGuidance(), cfg);
  EXPECT_EQ(t.expansions(), 1u);
  EXPECT_TRUE(proofs_in_tree(t).empty());
  EXPECT_FALSE(extract_sample(t).has_value());
}

TEST(Mcts, RejectsBadConfig) {
  MctsConfig cfg;
  cfg.inference_budget = 0;
  EXPECT_THROW(run_mcts(testutil::example_problem(), UniformGuidance(), cfg), Error);
}

TEST(Targets, NormalizedAndConsistent) {
  const SearchTree t = exhaustive_example();
  for (const NodeTarget& nt : extract_targets(t)) {
    const TreeNode& n = t.nodes[nt.node];
    ASSERT_EQ(nt.policy.size(), n.actions.size());
    EXPECT_NEAR(std::accumulate(nt.policy.begin(), nt.policy.end(), 0.0), 1.0, 1e-9);
    int total = 0;
    for (int c : n.children) total += c >= 0 ? t.nodes[c].visits : 0;
    for (std::size_t a = 0; a < n.actions.size(); ++a) {
      const int v = n.children[a] >= 0 ? t.nodes[n.children[a]].visits : 0;
      EXPECT_DOUBLE_EQ(nt.policy[a], static_cast<double>(v) / total);
    }
    EXPECT_DOUBLE_EQ(nt.value, n.value());
  }
}

TEST(Targets, FailureOnlySubtreeHasValueZero) {
  // a problem without any proof: every leaf is a failure
  const Problem p = parse_problem("p | q.\n~p.\n#start: 0\n", "noproof");
  MctsConfig cfg;
  cfg.inference_budget = 50;
  const SearchTree t = run_mcts(p, UniformGuidance(0.0), cfg);
  EXPECT_TRUE(t.complete());
  EXPECT_TRUE(proofs_in_tree(t).empty());
  for (const NodeTarget& nt : extract_targets(t)) EXPECT_EQ(nt.value, 0.0);
}

// ---------------------------------------------------------------- dataset

TEST(Sample, FromExhaustiveTree) {
  const SearchTree t = exhaustive_example();
  const auto s = extract_sample(t);
  ASSERT_TRUE(s.has_value());
  EXPECT_EQ(s->problem, "pelletier21");
  EXPECT_EQ(s->proofs, proofs_in_tree(t));
  EXPECT_EQ(s->failures, failures_in_tree(t));
  const Problem p = testutil::example_problem();
  const MatrixPtr m = compile(p);
  for (const auto* list : {&s->proofs, &s->failures}) {
    for (const Derivation& d : *list) {
      // replaying reproduces the recorded status
      TableauState st = TableauState::root(m);
      for (const Action& a : d.actions) st = apply_action(st, a);
      EXPECT_EQ(status(st), d.status);
    }
  }
  for (const Derivation& d : s->proofs) EXPECT_TRUE(check_proof(p, d.actions));
  // targets mirror the internal nodes of the tree
  EXPECT_EQ(s->targets.size(), extract_targets(t).size());
  EXPECT_EQ(s->targets[0].parent, -1);
}

TEST(Select, ShortLongRand) {
  auto d = [](std::vector<int> ids) {
    Derivation x;
    x.problem = "t";
    x.status = Status::Proof;
    for (int i : ids) x.actions.push_back(Action::extension(i, 0));
    return x;
  };
  const std::vector<Derivation> ds{d({5, 5, 5, 5, 5, 5}), d({1, 1, 1, 1}), d({2, 2, 2, 2, 2, 1})};
  EXPECT_EQ(select_single(ds, {SelectionStrategy::Kind::Short, 0}).length(), 4u);
  EXPECT_EQ(select_single(ds, {SelectionStrategy::Kind::Long, 0}), ds[2]);
  const SelectionStrategy r{SelectionStrategy::Kind::Rand, 9};
  EXPECT_EQ(select_single(ds, r), select_single(ds, r));
  std::set<std::size_t> picked;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Derivation& x = select_single(ds, {SelectionStrategy::Kind::Rand, seed});
    picked.insert(static_cast<std::size_t>(&x - ds.data()));
  }
  EXPECT_EQ(picked.size(), 3u);
  EXPECT_THROW(select_single(std::vector<Derivation>{}, r), Error);
}

TEST(Select, PairWithFailure) {
  const auto s = *extract_sample(exhaustive_example());
  const auto [proof, failure] = pair_with_failure(s, {SelectionStrategy::Kind::Short, 0});
  EXPECT_EQ(proof.length(), 4u);
  ASSERT_TRUE(failure.has_value());
  EXPECT_EQ(failure->status, Status::Failure);
  for (const Derivation& f : s.failures) EXPECT_LE(failure->length(), f.length());

  PllSample none = s;
  none.failures.clear();
  EXPECT_FALSE(pair_with_failure(none, {SelectionStrategy::Kind::Long, 0}).second.has_value());
}

TEST(Samples, RoundTrip) {
  std::vector<PllSample> samples;
  for (const Problem& p : ra::generate_ra_set(150, 3, {3, 3})) {
    MctsConfig cfg;
    cfg.inference_budget = 400;
    if (auto s = extract_sample(run_mcts(p, UniformGuidance(), cfg))) samples.push_back(*s);
  }
  samples.push_back(*extract_sample(exhaustive_example()));
  ASSERT_GE(samples.size(), 10u);
  const std::string path = temp_path("samples.jsonl");
  save_samples(samples, path);
  EXPECT_EQ(load_samples(path), samples);

  save_samples({}, path);
  EXPECT_TRUE(load_samples(path).empty());
  std::remove(path.c_str());
}

TEST(Samples, MalformedInput) {
  const auto s = *extract_sample(exhaustive_example());
  const std::string path = temp_path("bad.jsonl");
  save_samples({s, s, s}, path);
  // cut the file in the middle of the third record
  std::string text;
  {
    std::ifstream in(path);
    text.assign(std::istreambuf_iterator<char>(in), {});
  }
  const std::size_t third = text.find('\n', text.find('\n', text.find('\n') + 1) + 1);
  {
    std::ofstream out(path, std::ios::trunc);
    out << text.substr(0, third + 20);
  }
  try {
    load_samples(path);
    FAIL() << "truncated file accepted";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("record 2"), std::string::npos) << e.what();
  }
  {
    std::ofstream out(path, std::ios::trunc);
    out << "{\"format\":\"pll-samples\",\"version\":7}\n";
  }
  EXPECT_THROW(load_samples(path), Error);
  EXPECT_THROW(load_samples(temp_path("missing.jsonl")), Error);
  std::remove(path.c_str());
}

TEST(Samples, ActionSyntax) {
  for (const Action& a : {Action::start(3), Action::extension(12, 1), Action::reduction(0)}) {
    EXPECT_EQ(parse_action(to_string(a)), a);
  }
  EXPECT_THROW(parse_action("ext(1)"), Error);
  EXPECT_THROW(parse_action("jump(2)"), Error);
}
