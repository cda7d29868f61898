#include "pllcop/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pllcop {

namespace {

void check_sizes(std::span<const double> p, std::span<const bool> y) {
  if (p.size() != y.size()) throw Error("probability and mask sizes differ");
}

double safe_log(double p) { return std::log(std::max(p, kProbFloor)); }

struct Allowed {
  double p_acc = 0;
  int k = 0;
};

Allowed allowed_mass(std::span<const double> p, std::span<const bool> y) {
  check_sizes(p, y);
  Allowed a;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (y[i]) {
      a.p_acc += p[i];
      ++a.k;
    }
  }
  if (a.k == 0) throw Error("no allowed label");
  return a;
}

double logsumexp(std::span<const double> v) {
  if (v.empty()) return -INFINITY;
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

LossGrad nll_loss(std::span<const double> p, std::span<const bool> y) {
  const Allowed a = allowed_mass(p, y);
  if (a.p_acc <= 0) throw Error("nll loss with zero allowed mass");
  LossGrad out{-safe_log(a.p_acc), std::vector<double>(p.size(), 0.0)};
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (y[i]) out.grad[i] = -1.0 / std::max(a.p_acc, kProbFloor);
  }
  return out;
}

LossGrad uniform_loss(std::span<const double> p, std::span<const bool> y) {
  allowed_mass(p, y);
  LossGrad out{0, std::vector<double>(p.size(), 0.0)};
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!y[i]) continue;
    if (p[i] <= 0) throw Error("uniform loss with a zero allowed probability");
    out.value -= safe_log(p[i]);
    out.grad[i] = -1.0 / std::max(p[i], kProbFloor);
  }
  return out;
}

std::vector<double> merit_weights(std::span<const double> p, std::span<const bool> y, double beta) {
  const Allowed a = allowed_mass(p, y);
  if (a.p_acc <= 0) throw Error("merit loss with zero allowed mass");
  std::vector<double> w(p.size(), 0.0);
  double total = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (y[i]) total += w[i] = std::pow(p[i] / a.p_acc, beta);
  }
  for (double& x : w) x /= total;
  return w;
}

LossGrad merit_surrogate(std::span<const double> p, std::span<const double> weights) {
  LossGrad out{0, std::vector<double>(p.size(), 0.0)};
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (weights[i] == 0) continue;
    out.value -= weights[i] * safe_log(p[i]);
    out.grad[i] = -weights[i] / std::max(p[i], kProbFloor);
  }
  return out;
}

LossGrad merit_loss(std::span<const double> p, std::span<const bool> y, double beta) {
  if (beta < 0 || beta > 1) throw Error("merit beta must lie in [0, 1]");
  const std::vector<double> w = merit_weights(p, y, beta);
  return merit_surrogate(p, w);
}

LossGrad libra_loss(std::span<const double> p, std::span<const bool> y) {
  const Allowed a = allowed_mass(p, y);
  if (a.p_acc <= 0) throw Error("libra loss with zero allowed mass");
  const double rest = std::max(1.0 - a.p_acc, kProbFloor);
  LossGrad out{std::log(rest), std::vector<double>(p.size(), 0.0)};
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!y[i]) continue;
    out.value -= safe_log(p[i]) / a.k;
    out.grad[i] = -1.0 / (a.k * std::max(p[i], kProbFloor)) - 1.0 / rest;
  }
  return out;
}

std::vector<double> log_softmax(std::span<const double> z) {
  const double lse = logsumexp(z);
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] - lse;
  return out;
}

std::vector<double> softmax(std::span<const double> z) {
  std::vector<double> out = log_softmax(z);
  for (double& x : out) x = std::exp(x);
  return out;
}

std::vector<double> softmax_backward(std::span<const double> p, std::span<const double> dp) {
  double dot = 0;
  for (std::size_t i = 0; i < p.size(); ++i) dot += p[i] * dp[i];
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] * (dp[i] - dot);
  return out;
}

LossKind parse_loss(const std::string& text) {
  using K = LossKind::Kind;
  using S = SelectionStrategy::Kind;
  LossKind k;
  auto single = [&](S s, bool pair) {
    k.kind = pair ? K::SinglePair : K::Single;
    k.strategy.kind = s;
    return k;
  };
  if (text == "bs") return k.kind = K::BS, k;
  if (text == "nll") return k.kind = K::NLL, k;
  if (text == "uniform") return k.kind = K::Uniform, k;
  if (text == "libra") return k.kind = K::Libra, k;
  if (text == "short") return single(S::Short, false);
  if (text == "long") return single(S::Long, false);
  if (text == "rand") return single(S::Rand, false);
  if (text == "short±" || text == "short_pm") return single(S::Short, true);
  if (text == "long±" || text == "long_pm") return single(S::Long, true);
  if (text == "rand±" || text == "rand_pm") return single(S::Rand, true);
  if (text.rfind("merit", 0) == 0) {
    k.kind = K::Merit;
    if (text.size() > 5) {
      if (text[5] != ':') throw Error("malformed merit loss '" + text + "' (expected merit:<beta>)");
      try {
        std::size_t used = 0;
        k.beta = std::stod(text.substr(6), &used);
        if (used != text.size() - 6) throw Error("");
      } catch (const std::exception&) {
        throw Error("malformed merit loss '" + text + "' (expected merit:<beta>)");
      }
    }
    if (!(k.beta >= 0 && k.beta <= 1)) throw Error("merit beta must lie in [0, 1]");
    return k;
  }
  throw Error("unknown loss '" + text +
              "'; valid choices: bs, nll, uniform, merit:<beta>, libra, short, long, rand, short±, long±, rand± "
              "(or short_pm, long_pm, rand_pm)");
}

std::string to_string(const LossKind& k) {
  using K = LossKind::Kind;
  auto strat = [&] {
    switch (k.strategy.kind) {
      case SelectionStrategy::Kind::Short: return std::string("short");
      case SelectionStrategy::Kind::Long: return std::string("long");
      case SelectionStrategy::Kind::Rand: return std::string("rand");
    }
    return std::string("?");
  };
  switch (k.kind) {
    case K::BS: return "bs";
    case K::NLL: return "nll";
    case K::Uniform: return "uniform";
    case K::Libra: return "libra";
    case K::Merit: {
      std::string b = std::to_string(k.beta);
      while (b.size() > 1 && b.back() == '0') b.pop_back();
      if (b.back() == '.') b.pop_back();
      return "merit:" + b;
    }
    case K::Single: return strat();
    case K::SinglePair: return strat() + "_pm";
  }
  return "?";
}

DerivationLoss derivation_loss(const LossKind& kind, std::span<const double> allowed_logp,
                               std::span<const double> avoid_logp, const std::vector<double>* frozen_merit_weights) {
  using K = LossKind::Kind;
  if (allowed_logp.empty()) throw Error("derivation loss without allowed derivations");
  const std::size_t k = allowed_logp.size();
  DerivationLoss out;
  out.d_allowed.assign(k, 0.0);
  out.d_avoid.assign(avoid_logp.size(), 0.0);
  const double log_floor = std::log(kProbFloor);
  // log P_acc, and each proof's share p_d / P_acc
  const double log_acc = logsumexp(allowed_logp);
  std::vector<double> share(k);
  for (std::size_t d = 0; d < k; ++d) share[d] = std::exp(allowed_logp[d] - log_acc);

  switch (kind.kind) {
    case K::BS: throw Error("bs is not a derivation-level loss");
    case K::NLL:
      out.value = -std::max(log_acc, log_floor);
      for (std::size_t d = 0; d < k; ++d) out.d_allowed[d] = -share[d];
      break;
    case K::Uniform:
      for (std::size_t d = 0; d < k; ++d) {
        out.value -= std::max(allowed_logp[d], log_floor);
        out.d_allowed[d] = -1.0;
      }
      break;
    case K::Merit: {
      std::vector<double> w;
      if (frozen_merit_weights) {
        w = *frozen_merit_weights;
      } else {
        // share^beta normalized, computed in log space
        std::vector<double> lw(k);
        for (std::size_t d = 0; d < k; ++d) lw[d] = kind.beta * (allowed_logp[d] - log_acc);
        const double z = logsumexp(lw);
        w.resize(k);
        for (std::size_t d = 0; d < k; ++d) w[d] = std::exp(lw[d] - z);
      }
      for (std::size_t d = 0; d < k; ++d) {
        out.value -= w[d] * std::max(allowed_logp[d], log_floor);
        out.d_allowed[d] = -w[d];
      }
      break;
    }
    case K::Libra: {
      const double acc = std::exp(log_acc);
      const double rest = std::max(1.0 - acc, kProbFloor);
      out.value = std::log(rest);
      for (std::size_t d = 0; d < k; ++d) {
        out.value -= std::max(allowed_logp[d], log_floor) / static_cast<double>(k);
        // d log(1 - P_acc) / d log p_d = -p_d / (1 - P_acc)
        out.d_allowed[d] = -1.0 / static_cast<double>(k) - std::exp(allowed_logp[d]) / rest;
      }
      break;
    }
    case K::Single:
    case K::SinglePair:
      for (std::size_t d = 0; d < k; ++d) {
        out.value -= std::max(allowed_logp[d], log_floor);
        out.d_allowed[d] = -1.0;
      }
      if (kind.kind == K::SinglePair && kind.lambda_fail > 0) {
        for (std::size_t d = 0; d < avoid_logp.size(); ++d) {
          out.value += kind.lambda_fail * std::max(avoid_logp[d], log_floor);
          out.d_avoid[d] = kind.lambda_fail;
        }
      }
      break;
  }
  return out;
}

double derivation_logprob(const StepPath& d, const std::vector<std::vector<double>>& step_logp) {
  double lp = 0;
  for (const auto& [step, a] : d.steps) lp += step_logp.at(step).at(a);
  return lp;
}

std::vector<std::vector<double>> assemble_sequential_gradient(std::span<const StepPath> paths,
                                                              std::span<const double> dlogp,
                                                              const std::vector<std::vector<double>>& step_logp) {
  if (paths.size() != dlogp.size()) throw Error("one gradient per derivation expected");
  std::vector<std::vector<double>> grads(step_logp.size());
  for (std::size_t s = 0; s < step_logp.size(); ++s) grads[s].assign(step_logp[s].size(), 0.0);
  // d log pi(a|s) / dz_b = [a == b] - pi(b|s)
  std::vector<double> coeff(step_logp.size(), 0.0);
  for (std::size_t d = 0; d < paths.size(); ++d) {
    for (const auto& [step, a] : paths[d].steps) {
      grads[step][a] += dlogp[d];
      coeff[step] += dlogp[d];
    }
  }
  for (std::size_t s = 0; s < step_logp.size(); ++s) {
    if (coeff[s] == 0) continue;
    for (std::size_t b = 0; b < grads[s].size(); ++b) grads[s][b] -= coeff[s] * std::exp(step_logp[s][b]);
  }
  return grads;
}

LossGrad bs_node_loss(std::span<const double> target, std::span<const double> logp) {
  if (target.size() != logp.size()) throw Error("target and policy sizes differ");
  LossGrad out{0, std::vector<double>(logp.size())};
  for (std::size_t i = 0; i < logp.size(); ++i) {
    if (target[i] > 0) out.value -= target[i] * logp[i];
    out.grad[i] = std::exp(logp[i]) - target[i];
  }
  return out;
}

}  // namespace pllcop
