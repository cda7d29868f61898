#include "pllcop/loop.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "json.hpp"

namespace pllcop {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
  if (!out) throw Error("write failed: " + p.string());
}

fs::path iter_dir(const std::string& run_dir, int k) { return fs::path(run_dir) / ("iter_" + std::to_string(k)); }

template <typename F>
void parallel_for(std::size_t n, int workers, F&& body) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  for (std::size_t w = 0; w < count; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::uint64_t problem_seed(std::uint64_t seed, int iteration, std::size_t index) {
  return hash_combine(hash_combine(seed, static_cast<std::uint64_t>(iteration)), index);
}

}  // namespace

std::string report_to_json(const IterationReport& r) {
  json j{{"iteration", r.iteration},
         {"loss", r.loss},
         {"problems", r.problems},
         {"solved", r.solved},
         {"cumulative_solved", r.cumulative_solved},
         {"avg_proofs_per_solved", r.avg_proofs_per_solved},
         {"mean_proof_length", r.mean_proof_length},
         {"wall_time", r.wall_time},
         {"policy_loss", r.policy_loss},
         {"value_loss", r.value_loss},
         {"solved_names", r.solved_names}};
  return j.dump(2);
}

IterationReport report_from_json(const std::string& text) {
  const json j = json::parse(text);
  IterationReport r;
  r.iteration = j.at("iteration").get<int>();
  r.loss = j.at("loss").get<std::string>();
  r.problems = j.at("problems").get<int>();
  r.solved = j.at("solved").get<int>();
  r.cumulative_solved = j.at("cumulative_solved").get<int>();
  r.avg_proofs_per_solved = j.at("avg_proofs_per_solved").get<double>();
  r.mean_proof_length = j.at("mean_proof_length").get<double>();
  r.wall_time = j.at("wall_time").get<double>();
  r.policy_loss = j.at("policy_loss").get<std::vector<double>>();
  r.value_loss = j.at("value_loss").get<std::vector<double>>();
  r.solved_names = j.at("solved_names").get<std::vector<std::string>>();
  return r;
}

ProblemSet ProblemSet::from(const std::vector<Problem>& ps, int max_depth) {
  ProblemSet out;
  std::set<std::string> names;
  for (const Problem& p : ps) {
    if (!names.insert(p.name).second) throw Error("duplicate problem name " + p.name);
    out.problems.push_back(compile(p, CalculusOptions{max_depth}));
  }
  return out;
}

ProblemLookup ProblemSet::lookup() const {
  auto index = std::make_shared<std::unordered_map<std::string, MatrixPtr>>();
  for (const MatrixPtr& m : problems) index->emplace(m->problem().name, m);
  return [index](const std::string& name) -> MatrixPtr {
    auto it = index->find(name);
    if (it == index->end()) throw Error("unknown problem " + name);
    return it->second;
  };
}

IterationResult run_iteration(const ProblemSet& ps, const Guidance& g, const MctsConfig& cfg, int iteration,
                              int workers) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::optional<PllSample>> found(ps.problems.size());
  parallel_for(ps.problems.size(), workers, [&](std::size_t i) {
    MctsConfig local = cfg;
    local.rng_seed = problem_seed(cfg.rng_seed, iteration, i);
    found[i] = extract_sample(run_mcts(ps.problems[i], g, local));
  });

  IterationResult out;
  IterationReport& r = out.report;
  r.iteration = iteration;
  r.problems = static_cast<int>(ps.problems.size());
  std::size_t proofs = 0, total_length = 0;
  for (auto& s : found) {
    if (!s) continue;
    ++r.solved;
    r.solved_names.push_back(s->problem);
    proofs += s->proofs.size();
    for (const Derivation& d : s->proofs) total_length += d.length();
    out.samples.push_back(std::move(*s));
  }
  r.avg_proofs_per_solved = r.solved > 0 ? static_cast<double>(proofs) / r.solved : 0.0;
  r.mean_proof_length = proofs > 0 ? static_cast<double>(total_length) / static_cast<double>(proofs) : 0.0;
  r.cumulative_solved = r.solved;
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::string config_to_json(const LoopConfig& c) {
  json mcts{{"cp", c.mcts.cp},
            {"budget", c.mcts.inference_budget},
            {"max_depth", c.mcts.max_depth},
            {"seed", c.mcts.rng_seed}};
  if (c.mcts.dirichlet) mcts["dirichlet"] = {{"alpha", c.mcts.dirichlet->alpha}, {"weight", c.mcts.dirichlet->weight}};
  json j{{"mcts", mcts},
         {"train",
          {{"loss", to_string(c.train.loss)},
           {"beta", c.train.loss.beta},
           {"lambda_fail", c.train.loss.lambda_fail},
           {"selection_seed", c.train.loss.strategy.seed},
           {"epochs", c.train.epochs},
           {"learning_rate", c.train.learning_rate},
           {"optimizer", c.train.optimizer == Optimizer::SGD ? "sgd" : "adam"},
           {"seed", c.train.rng_seed},
           {"accumulate", c.train.accumulate_data}}},
         {"model", {{"dim_log2", c.model.dim_log2}, {"hidden", c.model.hidden}, {"init_seed", c.model.init_seed}}},
         {"iterations", c.iterations},
         {"workers", c.workers},
         {"problems", c.problems}};
  return j.dump(2);
}

LoopConfig config_from_json(const std::string& text) {
  const json j = json::parse(text);
  LoopConfig c;
  const json& m = j.at("mcts");
  c.mcts.cp = m.at("cp").get<double>();
  c.mcts.inference_budget = m.at("budget").get<int>();
  c.mcts.max_depth = m.at("max_depth").get<int>();
  c.mcts.rng_seed = m.at("seed").get<std::uint64_t>();
  if (m.contains("dirichlet")) {
    c.mcts.dirichlet = DirichletNoise{m["dirichlet"].at("alpha").get<double>(), m["dirichlet"].at("weight").get<double>()};
  }
  const json& t = j.at("train");
  c.train.loss = parse_loss(t.at("loss").get<std::string>());
  c.train.loss.beta = t.at("beta").get<double>();
  c.train.loss.lambda_fail = t.at("lambda_fail").get<double>();
  c.train.loss.strategy.seed = t.at("selection_seed").get<std::uint64_t>();
  c.train.epochs = t.at("epochs").get<int>();
  c.train.learning_rate = t.at("learning_rate").get<double>();
  c.train.optimizer = t.at("optimizer").get<std::string>() == "adam" ? Optimizer::Adam : Optimizer::SGD;
  c.train.rng_seed = t.at("seed").get<std::uint64_t>();
  c.train.accumulate_data = t.at("accumulate").get<bool>();
  const json& md = j.at("model");
  c.model.dim_log2 = md.at("dim_log2").get<int>();
  c.model.hidden = md.at("hidden").get<int>();
  c.model.init_seed = md.at("init_seed").get<std::uint64_t>();
  c.iterations = j.at("iterations").get<int>();
  c.workers = j.at("workers").get<int>();
  c.problems = j.at("problems").get<std::string>();
  return c;
}

std::vector<IterationReport> expert_iteration(const ProblemSet& ps, const LoopConfig& cfg) {
  if (cfg.iterations < 1) throw Error("iterations must be >= 1");
  if (ps.problems.empty()) throw Error("empty problem set");
  const bool on_disk = !cfg.run_dir.empty();
  const std::string loss_name = to_string(cfg.train.loss);

  std::vector<IterationReport> reports;
  std::vector<PllSample> data;
  std::set<std::string> solved_so_far;
  PolicyModel model(cfg.model);
  int first = 0;

  if (on_disk) {
    fs::create_directories(cfg.run_dir);
    const fs::path config_path = fs::path(cfg.run_dir) / "config.json";
    if (cfg.resume && fs::exists(config_path)) {
      // an iteration is finished once its report exists
      for (int k = 0; k < cfg.iterations && fs::exists(iter_dir(cfg.run_dir, k) / "report.json"); ++k) {
        reports.push_back(report_from_json(read_file(iter_dir(cfg.run_dir, k) / "report.json")));
        auto samples = load_samples((iter_dir(cfg.run_dir, k) / "samples.jsonl").string());
        if (!cfg.train.accumulate_data) data.clear();
        data.insert(data.end(), samples.begin(), samples.end());
        for (const auto& n : reports.back().solved_names) solved_so_far.insert(n);
        first = k + 1;
      }
      if (first > 0 && first < cfg.iterations) {
        model = load_model((iter_dir(cfg.run_dir, first - 1) / "model.bin").string(), cfg.model.dim_log2);
      }
    } else {
      write_file(config_path, config_to_json(cfg));
    }
  }

  const UniformGuidance unguided;
  for (int k = first; k < cfg.iterations; ++k) {
    const Guidance& g = k == 0 ? static_cast<const Guidance&>(unguided) : model;
    IterationResult res = run_iteration(ps, g, cfg.mcts, k, cfg.workers);
    IterationReport& r = res.report;
    r.loss = loss_name;
    for (const auto& n : r.solved_names) solved_so_far.insert(n);
    r.cumulative_solved = static_cast<int>(solved_so_far.size());
    if (on_disk) {
      fs::create_directories(iter_dir(cfg.run_dir, k));
      save_samples(res.samples, (iter_dir(cfg.run_dir, k) / "samples.jsonl").string());
    }
    if (!cfg.train.accumulate_data) data.clear();
    data.insert(data.end(), std::make_move_iterator(res.samples.begin()), std::make_move_iterator(res.samples.end()));

    if (k + 1 < cfg.iterations) {
      const auto t0 = std::chrono::steady_clock::now();
      if (!data.empty()) {
        TrainConfig tc = cfg.train;
        tc.rng_seed = hash_combine(cfg.train.rng_seed, static_cast<std::uint64_t>(k));
        const TrainStats stats = train(model, data, ps.lookup(), tc);
        r.policy_loss = stats.policy_loss;
        r.value_loss = stats.value_loss;
      }
      r.wall_time += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (on_disk) save_model(model, (iter_dir(cfg.run_dir, k) / "model.bin").string());
    }
    if (on_disk) write_file(iter_dir(cfg.run_dir, k) / "report.json", report_to_json(r));
    reports.push_back(std::move(r));
  }
  if (on_disk) write_file(fs::path(cfg.run_dir) / "report.csv", reports_to_csv(reports));
  return reports;
}

std::set<std::string> evaluate(const Guidance& g, const ProblemSet& ps, const MctsConfig& cfg, int workers) {
  std::vector<char> solved(ps.problems.size(), 0);
  parallel_for(ps.problems.size(), workers, [&](std::size_t i) {
    MctsConfig local = cfg;
    local.rng_seed = problem_seed(cfg.rng_seed, 0, i);
    const SearchTree t = run_mcts(ps.problems[i], g, local);
    solved[i] = proofs_in_tree(t).empty() ? 0 : 1;
  });
  std::set<std::string> out;
  for (std::size_t i = 0; i < solved.size(); ++i) {
    if (solved[i]) out.insert(ps.problems[i]->problem().name);
  }
  return out;
}

std::vector<CpRow> cp_sweep(const ProblemSet& ps, const std::vector<double>& cps, const MctsConfig& cfg, int workers) {
  if (cps.empty()) throw Error("no cp values");
  const UniformGuidance unguided;
  std::vector<CpRow> rows;
  for (double cp : cps) {
    MctsConfig c = cfg;
    c.cp = cp;
    const IterationResult r = run_iteration(ps, unguided, c, 0, workers);
    rows.push_back({cp, r.report.solved, r.report.avg_proofs_per_solved});
  }
  return rows;
}

std::string reports_to_csv(const std::vector<IterationReport>& rs) {
  std::ostringstream out;
  out << "iteration,loss,solved,cumulative,avg_proofs,mean_len,seconds\n";
  for (const auto& r : rs) {
    out << r.iteration << ',' << r.loss << ',' << r.solved << ',' << r.cumulative_solved << ','
        << r.avg_proofs_per_solved << ',' << r.mean_proof_length << ',' << r.wall_time << '\n';
  }
  return out.str();
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::vector<std::vector<std::string>> rows;
  if (!std::getline(in, line)) throw Error(path + ": empty CSV");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace pllcop
