#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "pllcop/losses.hpp"

using namespace pllcop;

namespace {

const std::vector<double> kP{0.5, 0.3, 0.2};
const std::vector<char> kY{1, 1, 0};

// allowed mask as a span-convertible bool array
struct Mask {
  std::unique_ptr<bool[]> data;
  std::size_t n;
  explicit Mask(const std::vector<char>& y) : data(new bool[y.size()]), n(y.size()) {
    for (std::size_t i = 0; i < n; ++i) data[i] = y[i] != 0;
  }
  operator std::span<const bool>() const { return {data.get(), n}; }
};

struct Case {
  std::vector<double> z;
  std::vector<char> y;
};

Case random_case(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size(2, 7);
  std::normal_distribution<double> logit(0.0, 1.0);
  Case c;
  const int n = size(rng);
  c.z.resize(n);
  c.y.resize(n);
  for (double& x : c.z) x = logit(rng);
  int k = 0;
  for (auto& b : c.y) k += b = rng() % 2;
  if (k == 0) c.y[rng() % n] = 1;
  if (k == n) c.y[rng() % n] = 0;
  return c;
}

}  // namespace

TEST(FlatLosses, ReferenceValues) {
  const Mask y(kY);
  EXPECT_NEAR(nll_loss(kP, y).value, 0.22314, 1e-5);
  EXPECT_NEAR(uniform_loss(kP, y).value, 1.89712, 1e-5);
  EXPECT_NEAR(merit_loss(kP, y, 0.5).value, 0.916118, 1e-5);
  EXPECT_NEAR(libra_loss(kP, y).value, -0.66088, 1e-5);
  const auto w = merit_weights(kP, y, 0.5);
  EXPECT_NEAR(w[0], 0.56351, 1e-5);
  EXPECT_NEAR(w[1], 0.43649, 1e-5);
  EXPECT_EQ(w[2], 0.0);
}

TEST(FlatLosses, EdgeCases) {
  const Mask one({1});
  const std::vector<double> p1{1.0};
  EXPECT_EQ(nll_loss(p1, one).value, 0.0);
  // nll depends only on P_acc
  const Mask y(kY);
  EXPECT_NEAR(nll_loss(std::vector<double>{0.1, 0.7, 0.2}, y).value, nll_loss(kP, y).value, 1e-15);
  // uniform minimum over distributions on the allowed set
  const Mask y4({1, 1, 0, 0});
  EXPECT_NEAR(uniform_loss(std::vector<double>{0.5, 0.5, 0, 0}, y4).value, 2 * std::log(2.0), 1e-12);
  // k = 1 degeneracies
  const Mask first({1, 0, 0});
  EXPECT_NEAR(uniform_loss(kP, first).value, nll_loss(kP, first).value, 1e-15);
  EXPECT_NEAR(libra_loss(kP, first).value, -std::log(0.5) + std::log(0.5), 1e-15);
  // errors
  EXPECT_THROW(nll_loss(std::vector<double>{0.0, 1.0}, Mask({1, 0})), Error);
  EXPECT_THROW(uniform_loss(std::vector<double>{0.0, 1.0}, Mask({1, 1})), Error);
  EXPECT_THROW(merit_loss(kP, y, 1.5), Error);
  EXPECT_THROW(nll_loss(kP, Mask({0, 0, 0})), Error);
  EXPECT_THROW(nll_loss(kP, Mask({1, 0})), Error);
}

TEST(FlatLosses, ProbabilityAndLogitGradients) {
  std::mt19937_64 rng(1);
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const Case c = random_case(rng);
    const Mask y(c.y);
    const double beta = std::uniform_real_distribution<double>(0, 1)(rng);
    const auto p = softmax(c.z);
    const auto w = merit_weights(p, y, beta);
    std::vector<std::function<LossGrad(const std::vector<double>&)>> losses{
        [&](const auto& q) { return nll_loss(q, y); },
        [&](const auto& q) { return uniform_loss(q, y); },
        [&](const auto& q) { return merit_surrogate(q, w); },
        [&](const auto& q) { return libra_loss(q, y); }};
    for (const auto& loss : losses) {
      const LossGrad g = loss(p);
      // probability level; the loss is a function on the positive orthant
      for (std::size_t i = 0; i < p.size(); ++i) {
        auto hi = p, lo = p;
        hi[i] += h;
        lo[i] -= h;
        const double fd = (loss(hi).value - loss(lo).value) / (2 * h);
        EXPECT_LE(std::abs(fd - g.grad[i]), 1e-5 * std::max(1.0, std::abs(fd)));
      }
      // logit level
      const auto gz = softmax_backward(p, g.grad);
      for (std::size_t i = 0; i < c.z.size(); ++i) {
        auto hi = c.z, lo = c.z;
        hi[i] += h;
        lo[i] -= h;
        const double fd = (loss(softmax(hi)).value - loss(softmax(lo)).value) / (2 * h);
        EXPECT_LE(std::abs(fd - gz[i]), 1e-5 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST(FlatLosses, MeritInterpolatesNllAndUniform) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const Case c = random_case(rng);
    const Mask y(c.y);
    const auto p = softmax(c.z);
    const int k = std::accumulate(c.y.begin(), c.y.end(), 0);
    const auto m1 = softmax_backward(p, merit_loss(p, y, 1.0).grad);
    const auto m0 = softmax_backward(p, merit_loss(p, y, 0.0).grad);
    const auto nll = softmax_backward(p, nll_loss(p, y).grad);
    const auto uni = softmax_backward(p, uniform_loss(p, y).grad);
    for (std::size_t i = 0; i < p.size(); ++i) {
      EXPECT_NEAR(m1[i], nll[i], 1e-9);
      EXPECT_NEAR(m0[i], uni[i] / k, 1e-9);
    }
  }
}

TEST(FlatLosses, LibraPushesAllowedEqually) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Case c = random_case(rng);
    const Mask y(c.y);
    const auto p = softmax(c.z);
    const int k = std::accumulate(c.y.begin(), c.y.end(), 0);
    double acc = 0;
    for (std::size_t i = 0; i < p.size(); ++i) acc += c.y[i] ? p[i] : 0;
    const auto gz = softmax_backward(p, libra_loss(p, y).grad);
    for (std::size_t i = 0; i < p.size(); ++i) {
      EXPECT_NEAR(gz[i], c.y[i] ? -1.0 / k : p[i] / (1 - acc), 1e-9);
    }
  }
}

TEST(FlatLosses, LibraDescentKeepsRatios) {
  std::vector<double> z{0.3, -0.2, 1.0, 0.1};
  const Mask y({1, 1, 0, 0});
  const auto p0 = softmax(z);
  const double ratio = p0[0] / p0[1];
  double acc = p0[0] + p0[1];
  for (int step = 0; step < 100; ++step) {
    const auto p = softmax(z);
    const auto g = softmax_backward(p, libra_loss(p, y).grad);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] -= 0.1 * g[i];
    const auto q = softmax(z);
    EXPECT_NEAR(q[0] / q[1], ratio, 1e-6);
    EXPECT_GT(q[0] + q[1], acc);
    acc = q[0] + q[1];
  }
}

TEST(FlatLosses, NllFavoursInitialArgmax) {
  // The allowed-logit gradient is p_i (1 - 1/P_acc): larger allowed
  // probabilities grow faster, so ratios drift toward the initial argmax.
  for (int seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> logit(0.0, 1.0);
    std::vector<double> z(5);
    for (double& x : z) x = logit(rng);
    const Mask y({1, 1, 1, 0, 0});
    const auto p0 = softmax(z);
    const int first = static_cast<int>(std::max_element(p0.begin(), p0.begin() + 3) - p0.begin());
    double share = p0[first] / (p0[0] + p0[1] + p0[2]);
    for (int step = 0; step < 500; ++step) {
      const auto p = softmax(z);
      const auto g = softmax_backward(p, nll_loss(p, y).grad);
      for (std::size_t i = 0; i < z.size(); ++i) z[i] -= 0.5 * g[i];
      const auto q = softmax(z);
      const double next = q[first] / (q[0] + q[1] + q[2]);
      EXPECT_GE(next, share - 1e-12);
      share = next;
    }
    const auto p = softmax(z);
    EXPECT_EQ(std::max_element(p.begin(), p.end()) - p.begin(), first);
  }
}

TEST(FlatLosses, UniformConvergesToUniform) {
  std::vector<double> z{1.2, -0.5, 0.3, 0.0};
  const Mask y({1, 1, 1, 0});
  for (int step = 0; step < 4000; ++step) {
    const auto p = softmax(z);
    const auto g = softmax_backward(p, uniform_loss(p, y).grad);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] -= 0.5 * g[i];
  }
  const auto p = softmax(z);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(p[i], 1.0 / 3, 1e-4);
}

TEST(LossNames, ParseAndPrint) {
  for (const char* name : {"bs", "nll", "uniform", "libra", "short", "long", "rand", "short_pm", "long_pm", "rand_pm"}) {
    EXPECT_EQ(to_string(parse_loss(name)), name);
  }
  EXPECT_EQ(to_string(parse_loss("merit")), "merit:0.5");
  EXPECT_EQ(parse_loss("merit:0.25").beta, 0.25);
  EXPECT_EQ(parse_loss("short±").kind, LossKind::Kind::SinglePair);
  EXPECT_THROW(parse_loss("merit:2"), Error);
  EXPECT_THROW(parse_loss("merit:x"), Error);
  try {
    parse_loss("hinge");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("libra"), std::string::npos);
  }
}

TEST(DerivationLosses, MatchFlatLossesOnLogProbabilities) {
  // With the proofs as the allowed labels, derivation losses equal the flat
  // ones evaluated on their probabilities.
  const std::vector<double> lp{std::log(0.5), std::log(0.3)};
  const Mask y(kY);
  EXPECT_NEAR(derivation_loss(parse_loss("nll"), lp).value, nll_loss(kP, y).value, 1e-12);
  EXPECT_NEAR(derivation_loss(parse_loss("uniform"), lp).value, uniform_loss(kP, y).value, 1e-12);
  EXPECT_NEAR(derivation_loss(parse_loss("merit:0.5"), lp).value, merit_loss(kP, y, 0.5).value, 1e-12);
  EXPECT_NEAR(derivation_loss(parse_loss("libra"), lp).value, libra_loss(kP, y).value, 1e-12);
  EXPECT_THROW(derivation_loss(parse_loss("bs"), lp), Error);
  EXPECT_THROW(derivation_loss(parse_loss("nll"), std::vector<double>{}), Error);
}

TEST(DerivationLosses, GradientsInLogProbabilities) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-4.0, -0.2);
  const double h = 1e-6;
  for (const char* name : {"nll", "uniform", "merit:0.3", "libra", "short", "short_pm"}) {
    const LossKind kind = parse_loss(name);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> allowed(1 + rng() % 3), avoid(rng() % 2);
      // keep the proofs' total probability below 1
      for (double& x : allowed) x = u(rng) - 1.2;
      for (double& x : avoid) x = u(rng);
      const auto g = derivation_loss(kind, allowed, avoid);
      std::vector<double> frozen;
      if (kind.kind == LossKind::Kind::Merit) {
        // the merit gradient holds its weights fixed
        const double lse = std::log(std::accumulate(allowed.begin(), allowed.end(), 0.0,
                                                    [](double s, double x) { return s + std::exp(x); }));
        double z = 0;
        for (double x : allowed) z += std::exp(kind.beta * (x - lse));
        for (double x : allowed) frozen.push_back(std::exp(kind.beta * (x - lse)) / z);
      }
      const auto* fw = frozen.empty() ? nullptr : &frozen;
      for (std::size_t d = 0; d < allowed.size(); ++d) {
        auto hi = allowed, lo = allowed;
        hi[d] += h;
        lo[d] -= h;
        const double fd = (derivation_loss(kind, hi, avoid, fw).value - derivation_loss(kind, lo, avoid, fw).value) / (2 * h);
        EXPECT_NEAR(fd, g.d_allowed[d], 1e-6) << name;
      }
      for (std::size_t d = 0; d < avoid.size(); ++d) {
        auto hi = avoid, lo = avoid;
        hi[d] += h;
        lo[d] -= h;
        const double fd = (derivation_loss(kind, allowed, hi).value - derivation_loss(kind, allowed, lo).value) / (2 * h);
        EXPECT_NEAR(fd, g.d_avoid[d], 1e-6) << name;
        // a likelier failure costs more
        if (kind.kind == LossKind::Kind::SinglePair) EXPECT_GT(g.d_avoid[d], 0.0);
      }
    }
  }
}

TEST(DerivationLosses, SinglePairWithoutWeightIsSingle) {
  LossKind pair = parse_loss("short_pm");
  pair.lambda_fail = 0;
  const std::vector<double> allowed{-1.0}, avoid{-2.0};
  const auto a = derivation_loss(pair, allowed, avoid);
  const auto b = derivation_loss(parse_loss("short"), allowed, {});
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.d_allowed, b.d_allowed);
  EXPECT_EQ(a.d_avoid[0], 0.0);
}

TEST(Sequential, LogProbabilityIsSumOfSteps) {
  const std::vector<std::vector<double>> steps{{std::log(0.5), std::log(0.5)}, {std::log(0.4), std::log(0.6)}};
  EXPECT_NEAR(derivation_logprob({{{0, 0}, {1, 0}}}, steps), std::log(0.2), 1e-15);
  EXPECT_NEAR(derivation_logprob({{{1, 1}}}, steps), std::log(0.6), 1e-15);
}

TEST(Sequential, ChainRuleOnToyTree) {
  // two derivations sharing their first step, a third one branching off
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n01(0, 1);
  std::vector<std::vector<double>> z{{0, 0, 0}, {0, 0}, {0, 0, 0, 0}};
  for (auto& s : z) for (double& x : s) x = n01(rng);
  const std::vector<StepPath> paths{{{{0, 0}, {1, 0}}}, {{{0, 0}, {1, 1}}}, {{{0, 2}, {2, 3}}}};
  auto loss_at = [&](const std::vector<std::vector<double>>& zz, const LossKind& k) {
    std::vector<std::vector<double>> lp;
    for (const auto& s : zz) lp.push_back(log_softmax(s));
    std::vector<double> dl;
    for (const auto& p : paths) dl.push_back(derivation_logprob(p, lp));
    return std::make_pair(lp, derivation_loss(k, dl));
  };
  for (const char* name : {"nll", "uniform", "libra"}) {
    const LossKind k = parse_loss(name);
    const auto [lp, dl] = loss_at(z, k);
    const auto grads = assemble_sequential_gradient(paths, dl.d_allowed, lp);
    for (std::size_t s = 0; s < z.size(); ++s) {
      for (std::size_t a = 0; a < z[s].size(); ++a) {
        auto hi = z, lo = z;
        hi[s][a] += 1e-6;
        lo[s][a] -= 1e-6;
        const double fd = (loss_at(hi, k).second.value - loss_at(lo, k).second.value) / 2e-6;
        EXPECT_NEAR(fd, grads[s][a], 1e-7) << name << " step " << s << " action " << a;
      }
    }
  }
}

TEST(Sequential, SingleDerivationIsStepCrossEntropy) {
  const std::vector<std::vector<double>> lp{log_softmax(std::vector<double>{0.2, 0.9}),
                                            log_softmax(std::vector<double>{1.0, -1.0, 0.0})};
  const std::vector<StepPath> path{{{{0, 1}, {1, 2}}}};
  const std::vector<double> d{-1.0};
  const auto g = assemble_sequential_gradient(path, d, lp);
  for (std::size_t s = 0; s < 2; ++s) {
    const int taken = path[0].steps[s].second;
    for (std::size_t a = 0; a < lp[s].size(); ++a) {
      EXPECT_NEAR(g[s][a], std::exp(lp[s][a]) - (static_cast<int>(a) == taken ? 1.0 : 0.0), 1e-15);
    }
  }
  // a step no derivation uses gets no gradient
  const auto g2 = assemble_sequential_gradient(std::vector<StepPath>{{{{0, 1}}}}, d, lp);
  for (double x : g2[1]) EXPECT_EQ(x, 0.0);
}

TEST(BsLoss, CrossEntropy) {
  const std::vector<double> lp = log_softmax(std::vector<double>{0.0, 0.0});
  const auto g = bs_node_loss(std::vector<double>{1.0, 0.0}, lp);
  EXPECT_NEAR(g.value, std::log(2.0), 1e-15);
  EXPECT_NEAR(g.grad[0], -0.5, 1e-15);
  EXPECT_NEAR(g.grad[1], 0.5, 1e-15);
  // the floor is the target's entropy, reached when the model matches it
  const std::vector<double> t{0.2, 0.8};
  const auto at = bs_node_loss(t, std::vector<double>{std::log(0.2), std::log(0.8)});
  EXPECT_NEAR(at.value, -(0.2 * std::log(0.2) + 0.8 * std::log(0.8)), 1e-15);
  EXPECT_THROW(bs_node_loss(t, lp.size() == 2 ? std::vector<double>{0.0} : lp), Error);
}
