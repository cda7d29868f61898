#include "pllcop/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

namespace pllcop {

namespace {

const std::uint64_t kVarHash = stable_hash("*");
const std::uint64_t kBiasHash = stable_hash("bias");
const std::uint64_t kGoalTag = stable_hash("goal");
const std::uint64_t kPathTag = stable_hash("path");
const std::uint64_t kOpenTag = stable_hash("open");
const std::uint64_t kDepthTag = stable_hash("depth");
const std::uint64_t kGoalsTag = stable_hash("goals");
const std::uint64_t kReductionKey = stable_hash("reduction");
const std::uint64_t kStartKey = stable_hash("start");

constexpr int kMaxWalkNodes = 48;  // subterms visited per literal
constexpr int kPathLiterals = 2;
constexpr int kOpenGoals = 6;

int bucket(int n) {
  if (n < 4) return n;
  int b = 4;
  for (int v = n / 4; v > 1; v /= 2) ++b;
  return b;
}

// Hashes of the walks of length 1..max_len ending at each subterm of `l`.
void literal_walks(const Literal& l, const Substitution& s, int max_len, std::uint64_t tag,
                   std::vector<std::uint64_t>& out) {
  std::uint64_t chain[64];
  int budget = kMaxWalkNodes;
  auto emit = [&](int depth) {
    std::uint64_t h = tag;
    for (int len = 1; len <= max_len && len <= depth + 1; ++len) {
      h = hash_combine(h, chain[depth + 1 - len]);
      out.push_back(hash_combine(h, static_cast<std::uint64_t>(len)));
    }
  };
  auto visit = [&](auto&& self, const Term& t0, std::uint64_t position, int depth) -> void {
    if (budget-- <= 0 || depth >= 63) return;
    const Term& t = deref(t0, s);
    const std::uint64_t sym = t.is_var() ? kVarHash : t.symbol().name_hash();
    chain[depth] = hash_combine(sym, position);
    emit(depth);
    if (t.is_var()) return;
    for (std::size_t i = 0; i < t.arity(); ++i) self(self, t.args()[i], i, depth + 1);
  };
  const Term& atom = deref(l.atom, s);
  chain[0] = hash_combine(atom.symbol().name_hash(), l.positive ? 1001 : 1000);
  emit(0);
  for (std::size_t i = 0; i < atom.arity(); ++i) visit(visit, atom.args()[i], i, 1);
}

std::uint64_t action_key(const TableauState& s, const Action& a) {
  switch (a.kind) {
    case Action::Kind::Extension: return s.matrix().extension_key(a.clause_id, a.literal_index);
    case Action::Kind::Reduction: {
      const int distance = s.selected_path_length() - 1 - a.path_index;
      return hash_combine(kReductionKey, static_cast<std::uint64_t>(distance));
    }
    case Action::Kind::Start: return hash_combine(kStartKey, static_cast<std::uint64_t>(a.clause_id));
  }
  return 0;
}

// State part of the policy features, shared by all actions.
std::vector<std::uint64_t> policy_context(const TableauState& s) {
  std::vector<std::uint64_t> ctx;
  if (s.is_root() || s.num_open_goals() == 0) return ctx;
  literal_walks(s.selected(), s.subst(), 3, kGoalTag, ctx);
  const auto path = s.selected_path();
  for (int i = 0; i < kPathLiterals && i < static_cast<int>(path.size()); ++i) {
    literal_walks(*path[i], s.subst(), 2, hash_combine(kPathTag, i), ctx);
  }
  ctx.push_back(hash_combine(kDepthTag, bucket(s.selected_path_length())));
  ctx.push_back(hash_combine(kGoalsTag, bucket(static_cast<int>(s.num_open_goals()))));
  std::sort(ctx.begin(), ctx.end());
  ctx.erase(std::unique(ctx.begin(), ctx.end()), ctx.end());
  return ctx;
}

FeatureVector conjoin(const std::vector<std::uint64_t>& ctx, std::uint64_t key, std::uint32_t mask) {
  FeatureVector f;
  f.index.reserve(ctx.size() + 1);
  f.index.push_back(static_cast<std::uint32_t>(key & mask));
  for (std::uint64_t c : ctx) f.index.push_back(static_cast<std::uint32_t>(hash_combine(key, c) & mask));
  std::sort(f.index.begin(), f.index.end());
  return f;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

PolicyModel::PolicyModel(ModelConfig cfg) : cfg_(cfg) {
  if (cfg.dim_log2 < 4 || cfg.dim_log2 > 26) throw Error("dim_log2 must lie in [4, 26]");
  if (cfg.hidden < 0) throw Error("hidden must be >= 0");
  const std::size_t d = dim();
  const std::size_t h = static_cast<std::size_t>(cfg.hidden);
  const std::size_t policy_size = h == 0 ? d : d * h + 2 * h;
  value_offset_ = policy_size;
  params_.assign(policy_size + d + 1, 0.0);
  if (h > 0) {
    // small random input weights; the output layer starts at zero so the
    // initial policy is uniform
    std::mt19937_64 rng(cfg.init_seed);
    std::normal_distribution<double> normal(0.0, 0.1);
    for (std::size_t i = 0; i < d * h; ++i) params_[i] = normal(rng);
  }
}

FeatureVector PolicyModel::featurize(const TableauState& s, const Action& a) const {
  return conjoin(policy_context(s), action_key(s, a), dim() - 1);
}

std::vector<FeatureVector> PolicyModel::featurize_all(const TableauState& s, std::span<const Action> actions) const {
  const auto ctx = policy_context(s);
  std::vector<FeatureVector> out;
  out.reserve(actions.size());
  for (const Action& a : actions) out.push_back(conjoin(ctx, action_key(s, a), dim() - 1));
  return out;
}

FeatureVector PolicyModel::state_features(const TableauState& s) const {
  std::vector<std::uint64_t> h{kBiasHash};
  if (!s.is_root()) {
    const auto open = s.open_literals();
    for (int i = 0; i < kOpenGoals && i < static_cast<int>(open.size()); ++i) {
      literal_walks(*open[i], s.subst(), i == 0 ? 3 : 2, i == 0 ? kGoalTag : kOpenTag, h);
    }
    h.push_back(hash_combine(kDepthTag, bucket(s.selected_path_length())));
    h.push_back(hash_combine(kGoalsTag, bucket(static_cast<int>(open.size()))));
  }
  std::sort(h.begin(), h.end());
  h.erase(std::unique(h.begin(), h.end()), h.end());
  FeatureVector f;
  for (std::uint64_t x : h) f.index.push_back(static_cast<std::uint32_t>(x & (dim() - 1)));
  std::sort(f.index.begin(), f.index.end());
  return f;
}

double PolicyModel::score(const FeatureVector& f) const {
  const std::size_t h = static_cast<std::size_t>(cfg_.hidden);
  if (h == 0) {
    double z = 0;
    for (std::uint32_t i : f.index) z += params_[i];
    return z;
  }
  const std::size_t d = dim();
  double z = 0;
  for (std::size_t k = 0; k < h; ++k) {
    double a = params_[d * h + k];
    for (std::uint32_t i : f.index) a += params_[i * h + k];
    if (a > 0) z += params_[d * h + h + k] * a;
  }
  return z;
}

double PolicyModel::value_from_features(const FeatureVector& f) const {
  double z = params_[value_offset_ + dim()];
  for (std::uint32_t i : f.index) z += params_[value_offset_ + i];
  return sigmoid(z);
}

PolicyForward PolicyModel::policy_forward(const TableauState& s, std::span<const Action> actions) const {
  if (actions.empty()) throw Error("policy over an empty action set");
  PolicyForward out;
  for (const FeatureVector& f : featurize_all(s, actions)) out.logits.push_back(score(f));
  out.probs = softmax(out.logits);
  return out;
}

double PolicyModel::value_forward(const TableauState& s) const { return value_from_features(state_features(s)); }

std::vector<double> PolicyModel::policy(const TableauState& s, std::span<const Action> actions) const {
  return policy_forward(s, actions).probs;
}

void PolicyModel::accumulate_score_grad(const FeatureVector& f, double g, std::vector<double>& grad,
                                        std::vector<std::uint32_t>& touched) const {
  const std::size_t h = static_cast<std::size_t>(cfg_.hidden);
  if (h == 0) {
    for (std::uint32_t i : f.index) {
      grad[i] += g;
      touched.push_back(i);
    }
    return;
  }
  const std::size_t d = dim();
  for (std::size_t k = 0; k < h; ++k) {
    double a = params_[d * h + k];
    for (std::uint32_t i : f.index) a += params_[i * h + k];
    if (a <= 0) continue;
    const std::size_t v = d * h + h + k;
    grad[v] += g * a;
    touched.push_back(static_cast<std::uint32_t>(v));
    const double da = g * params_[v];
    if (da == 0) continue;
    grad[d * h + k] += da;
    touched.push_back(static_cast<std::uint32_t>(d * h + k));
    for (std::uint32_t i : f.index) {
      grad[i * h + k] += da;
      touched.push_back(static_cast<std::uint32_t>(i * h + k));
    }
  }
}

void PolicyModel::accumulate_value_grad(const FeatureVector& f, double g, std::vector<double>& grad,
                                        std::vector<std::uint32_t>& touched) const {
  for (std::uint32_t i : f.index) {
    grad[value_offset_ + i] += g;
    touched.push_back(static_cast<std::uint32_t>(value_offset_ + i));
  }
  grad[value_offset_ + dim()] += g;
  touched.push_back(static_cast<std::uint32_t>(value_offset_ + dim()));
}

// ---------------------------------------------------------------------------

CompiledSample::CompiledSample(const PolicyModel& m, const PllSample& s, const MatrixPtr& matrix,
                               const TrainConfig& cfg)
    : loss_(cfg.loss) {
  if (!matrix) throw Error("unknown problem " + s.problem);
  const TableauState root = TableauState::root(matrix);

  auto make_step = [&](const TableauState& st, const std::vector<Action>& actions) {
    Step step;
    step.fixed = st.is_root();
    if (!step.fixed) step.actions = m.featurize_all(st, actions);
    else step.actions.resize(actions.size());
    steps_.push_back(std::move(step));
    return static_cast<int>(steps_.size()) - 1;
  };

  // tree targets: states of the internal nodes, in creation order
  std::vector<TableauState> states;
  states.reserve(s.targets.size());
  for (const TreeTarget& t : s.targets) {
    if (t.parent < 0) {
      states.push_back(root);
    } else {
      if (t.parent >= static_cast<int>(states.size())) throw Error("target parent out of order");
      states.push_back(apply_action(states[t.parent], t.action));
    }
    const TableauState& st = states.back();
    if (!st.is_root()) {
      value_features_.push_back(m.state_features(st));
      value_targets_.push_back(t.value);
    }
    if (loss_.kind == LossKind::Kind::BS) {
      const auto actions = legal_actions(st);
      if (actions.size() != t.policy.size()) throw Error("policy target does not match the legal actions");
      const int id = make_step(st, actions);
      steps_[id].target = t.policy;
    }
  }
  if (loss_.kind == LossKind::Kind::BS) return;

  // derivations share their prefixes: one step per distinct state
  struct TrieNode {
    TableauState state;
    std::vector<Action> actions;
    int step = -1;
    std::map<int, int> child{};  // action index -> trie node
  };
  std::vector<TrieNode> trie;
  trie.push_back({root, legal_actions(root)});
  auto add_path = [&](const Derivation& d) {
    StepPath path;
    int cur = 0;
    for (const Action& a : d.actions) {
      if (trie[cur].step < 0) {
        const int id = make_step(trie[cur].state, trie[cur].actions);
        trie[cur].step = id;
      }
      const auto& acts = trie[cur].actions;
      const auto it = std::find(acts.begin(), acts.end(), a);
      if (it == acts.end()) throw Error("derivation of " + s.problem + " does not replay at " + to_string(a));
      const int ai = static_cast<int>(it - acts.begin());
      path.steps.emplace_back(trie[cur].step, ai);
      auto c = trie[cur].child.find(ai);
      if (c == trie[cur].child.end()) {
        TableauState next = apply_action(trie[cur].state, a);
        auto next_actions = legal_actions(next);
        trie.push_back({std::move(next), std::move(next_actions)});
        c = trie[cur].child.emplace(ai, static_cast<int>(trie.size()) - 1).first;
      }
      cur = c->second;
    }
    return path;
  };

  if (loss_.kind == LossKind::Kind::Single || loss_.kind == LossKind::Kind::SinglePair) {
    SelectionStrategy strat = loss_.strategy;
    if (strat.kind == SelectionStrategy::Kind::Rand) strat.seed = hash_combine(strat.seed, cfg.rng_seed);
    const auto [proof, failure] = pair_with_failure(s, strat);
    allowed_.push_back(add_path(proof));
    if (loss_.kind == LossKind::Kind::SinglePair && failure) avoid_.push_back(add_path(*failure));
  } else {
    for (const Derivation& d : s.proofs) allowed_.push_back(add_path(d));
  }
}

std::vector<double> CompiledSample::step_logp(const PolicyModel& m, const Step& s) const {
  if (s.fixed) return std::vector<double>(s.actions.size(), -std::log(static_cast<double>(s.actions.size())));
  std::vector<double> z;
  z.reserve(s.actions.size());
  for (const FeatureVector& f : s.actions) z.push_back(m.score(f));
  return log_softmax(z);
}

std::vector<double> CompiledSample::merit_weights(const PolicyModel& m) const {
  std::vector<std::vector<double>> logp;
  for (const Step& s : steps_) logp.push_back(step_logp(m, s));
  std::vector<double> lp;
  for (const StepPath& p : allowed_) lp.push_back(derivation_logprob(p, logp));
  const double mx = *std::max_element(lp.begin(), lp.end());
  std::vector<double> w(lp.size());
  double total = 0;
  for (std::size_t d = 0; d < lp.size(); ++d) total += w[d] = std::exp(loss_.beta * (lp[d] - mx));
  for (double& x : w) x /= total;
  return w;
}

CompiledSample::Result CompiledSample::evaluate(const PolicyModel& m, std::vector<double>* grad,
                                                std::vector<std::uint32_t>* touched,
                                                const std::vector<double>* frozen_merit_weights) const {
  Result r;
  std::vector<std::vector<double>> logp;
  logp.reserve(steps_.size());
  for (const Step& s : steps_) logp.push_back(step_logp(m, s));

  if (loss_.kind == LossKind::Kind::BS) {
    const double scale = steps_.empty() ? 0.0 : 1.0 / static_cast<double>(steps_.size());
    for (std::size_t i = 0; i < steps_.size(); ++i) {
      const LossGrad node = bs_node_loss(steps_[i].target, logp[i]);
      r.policy_loss += node.value * scale;
      if (!grad || steps_[i].fixed) continue;
      for (std::size_t b = 0; b < node.grad.size(); ++b) {
        if (node.grad[b] != 0) m.accumulate_score_grad(steps_[i].actions[b], node.grad[b] * scale, *grad, *touched);
      }
    }
  } else if (!allowed_.empty()) {
    std::vector<double> allowed_lp, avoid_lp;
    for (const StepPath& p : allowed_) allowed_lp.push_back(derivation_logprob(p, logp));
    for (const StepPath& p : avoid_) avoid_lp.push_back(derivation_logprob(p, logp));
    const DerivationLoss dl = derivation_loss(loss_, allowed_lp, avoid_lp, frozen_merit_weights);
    r.policy_loss = dl.value;
    if (grad) {
      std::vector<StepPath> paths = allowed_;
      paths.insert(paths.end(), avoid_.begin(), avoid_.end());
      std::vector<double> dlogp = dl.d_allowed;
      dlogp.insert(dlogp.end(), dl.d_avoid.begin(), dl.d_avoid.end());
      const auto step_grads = assemble_sequential_gradient(paths, dlogp, logp);
      for (std::size_t i = 0; i < steps_.size(); ++i) {
        if (steps_[i].fixed) continue;
        for (std::size_t b = 0; b < step_grads[i].size(); ++b) {
          if (step_grads[i][b] != 0) m.accumulate_score_grad(steps_[i].actions[b], step_grads[i][b], *grad, *touched);
        }
      }
    }
  }

  if (!value_features_.empty()) {
    const double scale = 1.0 / static_cast<double>(value_features_.size());
    for (std::size_t i = 0; i < value_features_.size(); ++i) {
      const double v = m.value_from_features(value_features_[i]);
      const double err = v - value_targets_[i];
      r.value_loss += err * err * scale;
      if (grad) m.accumulate_value_grad(value_features_[i], 2 * err * v * (1 - v) * scale, *grad, *touched);
    }
  }
  return r;
}

// ---------------------------------------------------------------------------

TrainStats train(PolicyModel& m, const std::vector<PllSample>& samples, const ProblemLookup& problems,
                 const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw Error("epochs must be >= 1");
  if (samples.empty()) throw Error("no training samples");
  std::vector<CompiledSample> compiled;
  compiled.reserve(samples.size());
  for (const PllSample& s : samples) compiled.emplace_back(m, s, problems(s.problem), cfg);

  auto& params = m.params();
  std::vector<double> grad(params.size(), 0.0);
  std::vector<std::uint32_t> touched;
  std::vector<double> adam_m, adam_v;
  if (cfg.optimizer == Optimizer::Adam) {
    adam_m.assign(params.size(), 0.0);
    adam_v.assign(params.size(), 0.0);
  }
  long adam_t = 0;

  std::vector<std::size_t> order(compiled.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.rng_seed);
  TrainStats stats;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with our own index draw, identical across standard libraries
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    double policy_sum = 0, value_sum = 0;
    for (std::size_t idx : order) {
      touched.clear();
      const auto r = compiled[idx].evaluate(m, &grad, &touched);
      if (!std::isfinite(r.policy_loss) || !std::isfinite(r.value_loss)) {
        throw Error("non-finite loss on " + samples[idx].problem + " (learning rate too high?)");
      }
      policy_sum += r.policy_loss;
      value_sum += r.value_loss;
      std::sort(touched.begin(), touched.end());
      touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
      if (cfg.optimizer == Optimizer::SGD) {
        for (std::uint32_t i : touched) {
          params[i] -= cfg.learning_rate * grad[i];
          grad[i] = 0;
        }
      } else {
        ++adam_t;
        const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        const double c1 = 1 - std::pow(b1, static_cast<double>(adam_t));
        const double c2 = 1 - std::pow(b2, static_cast<double>(adam_t));
        for (std::uint32_t i : touched) {
          adam_m[i] = b1 * adam_m[i] + (1 - b1) * grad[i];
          adam_v[i] = b2 * adam_v[i] + (1 - b2) * grad[i] * grad[i];
          params[i] -= cfg.learning_rate * (adam_m[i] / c1) / (std::sqrt(adam_v[i] / c2) + eps);
          grad[i] = 0;
        }
      }
    }
    stats.policy_loss.push_back(policy_sum / static_cast<double>(compiled.size()));
    stats.value_loss.push_back(value_sum / static_cast<double>(compiled.size()));
  }
  return stats;
}

GradCheck grad_check(const PolicyModel& m, const PllSample& s, const MatrixPtr& matrix, const LossKind& loss,
                     double eps, std::uint64_t seed, int n_coords) {
  if (eps <= 0) throw Error("eps must be > 0");
  TrainConfig cfg;
  cfg.loss = loss;
  cfg.rng_seed = seed;
  const CompiledSample cs(m, s, matrix, cfg);
  std::vector<double> frozen;
  const std::vector<double>* frozen_ptr = nullptr;
  if (loss.kind == LossKind::Kind::Merit) {
    frozen = cs.merit_weights(m);
    frozen_ptr = &frozen;
  }

  std::vector<double> grad(m.params().size(), 0.0);
  std::vector<std::uint32_t> touched;
  cs.evaluate(m, &grad, &touched, frozen_ptr);
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> coords;
  const int from_touched = touched.empty() ? 0 : n_coords * 4 / 5;
  for (int i = 0; i < from_touched; ++i) coords.push_back(touched[rng() % touched.size()]);
  while (static_cast<int>(coords.size()) < n_coords) coords.push_back(rng() % m.params().size());

  PolicyModel probe = m;
  auto total = [&](const PolicyModel& pm) {
    const auto r = cs.evaluate(pm, nullptr, nullptr, frozen_ptr);
    return r.policy_loss + r.value_loss;
  };
  GradCheck out;
  for (std::size_t c : coords) {
    const double orig = probe.params()[c];
    auto at = [&](double offset) {
      probe.params()[c] = orig + offset;
      return total(probe);
    };
    const double near = (at(eps) - at(-eps)) / (2 * eps);
    const double far = (at(2 * eps) - at(-2 * eps)) / (4 * eps);
    probe.params()[c] = orig;
    // five-point stencil
    const double numeric = (4 * near - far) / 3;
    // on smooth stretches the two estimates agree to O(eps^2); otherwise the
    // stencil straddles a relu kink and says nothing about the gradient
    if (std::abs(near - far) > kGradCheckKinkTolerance * std::max(std::abs(numeric), 1.0)) {
      ++out.kinks;
      continue;
    }
    const double analytic = grad[c];
    const double scale = std::max(std::abs(numeric), std::abs(analytic));
    if (scale < kGradCheckNearZero) {
      out.max_abs_error_at_zero = std::max(out.max_abs_error_at_zero, std::abs(numeric - analytic));
      ++out.near_zero;
    } else {
      out.max_rel_error = std::max(out.max_rel_error, std::abs(numeric - analytic) / scale);
    }
    ++out.coordinates;
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {
constexpr char kMagic[4] = {'P', 'L', 'L', 'M'};
constexpr std::uint32_t kModelVersion = 1;

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error("truncated model file");
  return v;
}
}  // namespace

// Layout: magic "PLLM", u32 version, u32 dim_log2, u32 hidden, u64 init_seed,
// u64 parameter count, then the parameters as little-endian doubles.
void save_model(const PolicyModel& m, const std::string& path) {
  if (path.empty()) throw Error("empty model path");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kModelVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.config().dim_log2));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.config().hidden));
  put<std::uint64_t>(out, m.config().init_seed);
  put<std::uint64_t>(out, m.params().size());
  out.write(reinterpret_cast<const char*>(m.params().data()),
            static_cast<std::streamsize>(m.params().size() * sizeof(double)));
  if (!out) throw Error("write failed: " + path);
}

PolicyModel load_model(const std::string& path, int expected_dim_log2) {
  if (path.empty()) throw Error("empty model path");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw Error(path + ": not a model file");
  const auto version = get<std::uint32_t>(in);
  if (version != kModelVersion) {
    throw Error(path + ": model format version " + std::to_string(version) + ", expected " +
                std::to_string(kModelVersion));
  }
  ModelConfig cfg;
  cfg.dim_log2 = static_cast<int>(get<std::uint32_t>(in));
  cfg.hidden = static_cast<int>(get<std::uint32_t>(in));
  cfg.init_seed = get<std::uint64_t>(in);
  if (expected_dim_log2 >= 0 && cfg.dim_log2 != expected_dim_log2) {
    throw Error(path + ": feature dimension 2^" + std::to_string(cfg.dim_log2) + " does not match expected 2^" +
                std::to_string(expected_dim_log2));
  }
  const auto n = get<std::uint64_t>(in);
  PolicyModel shaped(cfg);
  if (shaped.params().size() != n) throw Error(path + ": parameter count does not match the stored shape");
  in.read(reinterpret_cast<char*>(shaped.params().data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw Error(path + ": truncated parameters");
  if (in.peek() != std::char_traits<char>::eof()) throw Error(path + ": trailing data");
  return shaped;
}

}  // namespace pllcop
