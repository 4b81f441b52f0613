#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "symbranch/asymptotics.hpp"
#include "symbranch/chain.hpp"
#include "symbranch/lattice.hpp"
#include "symbranch/lyapunov.hpp"
#include "symbranch/return_source.hpp"
#include "symbranch/volterra.hpp"

using namespace symbranch;

namespace {

Generator two_state() {
  Eigen::MatrixXd r(2, 2);
  r << 0, 1, 1, 0;
  return Generator::from_rates(r);
}

// E^0[e^{L_1}] for the symmetric two-state chain: M = [[0,1],[1,-1]] has eigenvalues
// l = (-1 +- sqrt 5)/2 with eigenvectors (1, l), so (e^M 1)_0 = sum e^l (1 + l) / (1 + l^2).
double two_state_by_hand() {
  double sum = 0.0;
  for (double sign : {1.0, -1.0}) {
    const double l = (-1.0 + sign * std::sqrt(5.0)) / 2.0;
    sum += std::exp(l) * (1.0 + l) / (1.0 + l * l);
  }
  return sum;
}

// Chains with up to five states and sparse random rates; every state has an exit.
Generator random_chain(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size(1, 5);
  std::uniform_real_distribution<double> rate(0.05, 3.0), coin(0.0, 1.0);
  const int n = size(rng);
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && coin(rng) < 0.6) r(i, j) = rate(rng);
    }
  }
  return Generator::from_rates(r);
}

const Kernel& bar3() {
  static const Kernel k = symmetrize(make_kernel(DiscreteLaplacian{3}));
  return k;
}

}  // namespace

TEST(VolterraSolve, ConstantReturnGivesExponential) {
  const auto g = volterra_solve(SingleState{}, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(g.values().front(), 1.0);
  EXPECT_NEAR(g.back(), std::exp(1.0), 1e-8);
}

TEST(VolterraSolve, ExponentialReturnClosedForm) {
  EXPECT_NEAR(volterra_solve(ExponentialReturn{1.0}, 2.0, 1.0).back(), 2.0 * std::exp(1.0) - 1.0, 1e-8);
}

TEST(VolterraSolve, CallableSourceMatchesClosedForm) {
  const CallableReturn f([](double t) { return std::exp(-t); });
  EXPECT_NEAR(volterra_solve(f, 2.0, 1.0).back(), 2.0 * std::exp(1.0) - 1.0, 1e-8);
}

TEST(VolterraSolve, TwoStateChain) {
  const double oracle = two_state_by_hand();
  EXPECT_NEAR(oracle, 2.138324438024, 1e-12);
  EXPECT_NEAR(exact_chain_moment(two_state(), 0, 1.0, 1.0), oracle, 1e-12);
  const auto direct = CallableReturn([](double t) { return 0.5 * (1.0 + std::exp(-2.0 * t)); });
  EXPECT_NEAR(volterra_solve(direct, 1.0, 1.0).back() / oracle, 1.0, 1e-8);
  EXPECT_NEAR(volterra_solve(ChainReturn(two_state(), 0), 1.0, 1.0).back() / oracle, 1.0, 1e-8);
}

TEST(VolterraSolve, ReportsSecondOrderResidualAndError) {
  const ChainReturn f(two_state(), 0);
  const auto coarse = volterra_solve(f, 1.0, 2.0, {0.02, true, true});
  const auto fine = volterra_solve(f, 1.0, 2.0, {0.01, true, true});
  EXPECT_LT(coarse.max_residual(), 1e-3);
  EXPECT_GT(coarse.max_error(), 0.0);
  EXPECT_NEAR(coarse.max_error() / fine.max_error(), 4.0, 0.5);
  EXPECT_DOUBLE_EQ(coarse.step(), 0.02);
}

TEST(VolterraSolve, ShrinksStepToEndOnHorizon) {
  const auto g = volterra_solve(SingleState{}, 1.0, 1.0, {0.3, true, false});
  EXPECT_DOUBLE_EQ(g.times().back(), 1.0);
  EXPECT_NEAR(g.step(), 0.25, 1e-15);
}

TEST(VolterraSolve, RejectsDegenerateStep) {
  try {
    volterra_solve(SingleState{}, 1000.0, 1.0, {0.01, false, false});
    FAIL() << "expected StepTooLarge";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::StepTooLarge);
  }
  EXPECT_THROW(volterra_solve(SingleState{}, 1.0, -1.0), Error);
  EXPECT_THROW(volterra_solve(CallableReturn([](double) { return 0.5; }), 1.0, 1.0), Error);
}

TEST(ExactChainMoment, TrivialCases) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(exact_chain_moment(random_chain(rng), 0, 0.0, 3.0), 1.0, 1e-12);
  const Generator absorbing(Eigen::MatrixXd::Zero(1, 1));
  EXPECT_NEAR(exact_chain_moment(absorbing, 0, 1.0, 2.0), std::exp(2.0), 1e-12);
}

TEST(ExactChainMoment, RejectsInvalidGenerators) {
  Eigen::MatrixXd bad(2, 2);
  bad << -1, 0.5, 1, -1;
  EXPECT_THROW(Generator{bad}, Error);
  bad << 1, -1, 1, -1;
  EXPECT_THROW(Generator{bad}, Error);
  EXPECT_THROW(Generator(Eigen::MatrixXd::Zero(11, 11)), Error);
  try {
    Generator{bad};
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidGenerator);
  }
}

TEST(ChainOracle, SolverMatchesMatrixExponential) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 12; ++trial) {
    const auto q = random_chain(rng);
    const std::size_t state = std::uniform_int_distribution<std::size_t>(0, q.size() - 1)(rng);
    const ChainReturn f(q, state);
    for (double kappa : {-2.0, -0.5, 0.5, 2.0}) {
      for (double horizon : {1.0, 5.0}) {
        const auto g = volterra_solve(f, kappa, horizon, {1e-3, true, false});
        const double exact = exact_chain_moment(q, state, kappa, horizon);
        EXPECT_NEAR(g.back() / exact, 1.0, 1e-6) << "trial " << trial << " kappa " << kappa << " T " << horizon;
      }
    }
  }
}

TEST(MomentCurve, OrderAndSandwichBounds) {
  const LatticeReturn bar(symmetrize(make_kernel(DiscreteLaplacian{1})));
  for (double kappa : {-2.0, -0.5, 0.5, 2.0}) {
    const auto g = volterra_solve(bar, kappa, 8.0, {0.02, true, false});
    const auto& t = g.times();
    const auto& v = g.values();
    for (std::size_t i = 0; i < t.size(); ++i) {
      EXPECT_GE(v[i], std::exp(std::min(kappa, 0.0) * t[i]) * (1 - 1e-12));
      EXPECT_LE(v[i], std::exp(std::max(kappa, 0.0) * t[i]) * (1 + 1e-12));
      if (i == 0) continue;
      if (kappa > 0) EXPECT_GE(v[i], v[i - 1]);
      else EXPECT_LE(v[i], v[i - 1]);
    }
  }
}

TEST(MomentCurve, Submultiplicative) {
  const LatticeReturn bar(symmetrize(make_kernel(DiscreteLaplacian{2})));
  const auto g = volterra_solve(bar, 1.5, 6.0, {0.02, true, false});
  const auto& v = g.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = 0; i + j < v.size(); ++j) ASSERT_LE(v[i + j], v[i] * v[j] * (1.0 + 5.0 * g.step()));
  }
}

TEST(LaplaceTransform, ElementaryCases) {
  EXPECT_DOUBLE_EQ(SingleState{}.laplace(4.0), 0.25);
  const LatticeReturn bar1(symmetrize(make_kernel(DiscreteLaplacian{1})));
  EXPECT_NEAR(bar1.laplace(1.0), 1.0 / std::sqrt(5.0), 1e-9);
  const LatticeReturn p3(make_kernel(DiscreteLaplacian{3}));
  double previous = 0.0;
  for (double lambda : {1e-2, 1e-4, 1e-6, 1e-8}) {
    const double v = p3.laplace(lambda);
    EXPECT_GT(v, previous);
    previous = v;
  }
  EXPECT_NEAR(previous, 1.516386059152, 2e-4);
  EXPECT_NEAR(p3.laplace(0.0), 1.516386059152, 1e-7);
}

TEST(LaplaceTransform, DecreasingAndConvex) {
  const LatticeReturn bar(bar3());
  std::vector<double> v;
  for (double lambda = 0.05; lambda < 3.0; lambda *= 1.5) v.push_back(bar.laplace(lambda));
  for (std::size_t i = 1; i < v.size(); ++i) EXPECT_LT(v[i], v[i - 1]);
  // Convexity on a geometric grid: slopes increase.
  double lambda = 0.05;
  std::vector<double> x;
  for (std::size_t i = 0; i < v.size(); ++i, lambda *= 1.5) x.push_back(lambda);
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    EXPECT_GT((v[i + 1] - v[i]) / (x[i + 1] - x[i]), (v[i] - v[i - 1]) / (x[i] - x[i - 1]));
  }
}

TEST(LaplaceTransform, IdentityForSubcriticalMoment) {
  const LatticeReturn bar(bar3());
  const double kappa = 0.5, lambda = 0.2, horizon = 100.0;
  const auto g = volterra_solve(bar, kappa, horizon, {0.05, true, false});
  const auto& t = g.times();
  const auto& v = g.values();
  double integral = 0.0;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    integral += 0.5 * (t[i + 1] - t[i]) * (std::exp(-lambda * t[i]) * v[i] + std::exp(-lambda * t[i + 1]) * v[i + 1]);
  }
  // g is bounded by its limit; the neglected tail is below g(T) e^{-lambda T} / lambda.
  const double tail = v.back() * std::exp(-lambda * horizon) / lambda;
  const double expected = 1.0 / (lambda * (1.0 - kappa * bar.laplace(lambda)));
  EXPECT_NEAR((integral + 0.5 * tail) / expected, 1.0, 1e-3);
  EXPECT_LT(tail / expected, 1e-6);
}

TEST(LyapunovRate, ClosedFormSources) {
  EXPECT_NEAR(lyapunov_rate(SingleState{}, 3.0), 3.0, 3e-10);
  EXPECT_NEAR(lyapunov_rate(ExponentialReturn{1.0}, 3.0), 2.0, 1e-8);
  EXPECT_EQ(lyapunov_rate(ExponentialReturn{1.0}, 0.8), 0.0);
  EXPECT_EQ(lyapunov_rate(ExponentialReturn{1.0}, 1.0), 0.0);
  EXPECT_THROW(lyapunov_rate(SingleState{}, 0.0), Error);
}

TEST(LyapunovRate, TransientThreshold) {
  const LatticeReturn bar(bar3());
  EXPECT_NEAR(1.0 / bar.green(), 2.0 / 1.516386059152, 1e-6);
  EXPECT_EQ(lyapunov_rate(bar, 1.0), 0.0);
  EXPECT_EQ(lyapunov_rate(bar, 1.318), 0.0);
  EXPECT_GT(lyapunov_rate(bar, 1.32), 0.0);
}

TEST(LyapunovRate, ApproachesKappaForLargeKappa) {
  const LatticeReturn p(make_kernel(DiscreteLaplacian{1}));
  const double r = lyapunov_rate(p, 100.0);
  EXPECT_GT(r / 100.0, 0.9);
  EXPECT_LE(r, 100.0);
}

TEST(LyapunovRate, ReportInvariants) {
  const LatticeReturn bar(bar3());
  std::vector<double> kappas;
  for (double k = 1.0; k <= 2.0 + 1e-12; k += 0.05) kappas.push_back(k);
  const auto rep = lyapunov_report(bar, kappas);
  EXPECT_NEAR(rep.kappa_cr, 2.0 / 1.516386059152, 1e-6);
  std::vector<double> live_k, live_r;
  for (const auto& s : rep.samples) {
    EXPECT_LE(s.rate, s.kappa);
    if (s.kappa <= rep.kappa_cr) {
      EXPECT_EQ(s.rate, 0.0);
      EXPECT_EQ(s.regime, Regime::Subcritical);
    } else {
      EXPECT_EQ(s.regime, Regime::Supercritical);
      live_k.push_back(s.kappa);
      live_r.push_back(s.rate);
    }
  }
  for (std::size_t i = 1; i < live_r.size(); ++i) EXPECT_GT(live_r[i], live_r[i - 1]);
  for (std::size_t i = 1; i + 1 < live_r.size(); ++i) {
    EXPECT_GT(live_r[i + 1] - 2 * live_r[i] + live_r[i - 1], 0.0) << "kappa " << live_k[i];
  }
}

TEST(LyapunovRate, GrowthRateMatchesLongTimeSlope) {
  const double single = std::log(volterra_solve(SingleState{}, 0.3, 50.0).back()) / 50.0;
  EXPECT_NEAR(single / lyapunov_rate(SingleState{}, 0.3), 1.0, 0.05);
  const double expo = std::log(volterra_solve(ExponentialReturn{1.0}, 3.0, 50.0).back()) / 50.0;
  EXPECT_NEAR(expo / lyapunov_rate(ExponentialReturn{1.0}, 3.0), 1.0, 0.05);
}

TEST(RateAsymptotics, ClosedForms) {
  const double c = 1.0 / (2.0 * std::sqrt(M_PI));
  for (double kappa : {0.01, 0.3, 2.0}) {
    EXPECT_NEAR(rate_asymptotics(c, 0.5, kappa, INFINITY, INFINITY).value, kappa * kappa / 4.0, 1e-15);
  }
  const auto a1 = rate_asymptotics(0.2, 1.0, 0.5, INFINITY, INFINITY);
  EXPECT_TRUE(a1.logarithmic);
  EXPECT_DOUBLE_EQ(a1.value, -1.0 / (0.2 * 0.5));
  const auto above = rate_asymptotics(1.0, 3.0, 2.5, 0.5, 0.5);
  EXPECT_NEAR(above.value, (0.25 / 0.5) * 0.5, 1e-15);
  EXPECT_THROW(rate_asymptotics(1.0, 3.0, 1.5, 0.5, 0.5), Error);
  EXPECT_THROW(rate_asymptotics(1.0, 1.5, 1.0, INFINITY, INFINITY), Error);
}

TEST(RateAsymptotics, RecurrentSmallKappa) {
  const LatticeReturn bar(symmetrize(make_kernel(DiscreteLaplacian{1})));
  std::vector<double> ratios;
  for (double kappa : {0.2, 0.05, 0.01}) ratios.push_back(lyapunov_rate(bar, kappa) / (kappa * kappa / 4.0));
  for (std::size_t i = 1; i < ratios.size(); ++i) {
    EXPECT_LT(std::abs(ratios[i] - 1.0), std::abs(ratios[i - 1] - 1.0));
  }
  EXPECT_NEAR(ratios.back(), 1.0, 0.02);
}

TEST(RateAsymptotics, LinearSlopeAboveThresholdForFastDecay) {
  // f(t) = (1+t)^-3: G = 1/2, H = 1/2, threshold 2, slope G^2/H = 1/2.
  const CallableReturn f([](double t) { return std::pow(1.0 + t, -3.0); });
  EXPECT_NEAR(f.green(), 0.5, 1e-9);
  for (double excess : {2e-3, 5e-4}) {
    const double r = lyapunov_rate(f, 2.0 + excess);
    EXPECT_NEAR(r / rate_asymptotics(1.0, 3.0, 2.0 + excess, 0.5, 0.5).value, 1.0, 0.03) << excess;
  }
}

TEST(RateAsymptotics, IntermediateExponentConverges) {
  // d = 3 symmetrization: 1 < alpha = 3/2 < 2.
  const LatticeReturn bar(bar3());
  const double green = bar.green();
  const double c = std::pow(4.0 * M_PI / 3.0, -1.5);
  std::vector<double> ratios;
  for (double excess : {0.05, 0.01, 0.002}) {
    const double kappa = 1.0 / green + excess;
    ratios.push_back(lyapunov_rate(bar, kappa) / rate_asymptotics(c, 1.5, kappa, green, INFINITY).value);
  }
  for (std::size_t i = 1; i < ratios.size(); ++i) EXPECT_LT(std::abs(ratios[i] - 1.0), std::abs(ratios[i - 1] - 1.0));
  EXPECT_NEAR(ratios.back(), 1.0, 0.1);
}

TEST(SubexpAsymptotics, Constants) {
  const auto neg = subexp_asymptotics(0.1, 1.5, -1.0, 1.516386, INFINITY, SubexpRegime::Negative);
  EXPECT_NEAR(neg.constant, 1.0 / (1.0 + 1.516386), 1e-15);
  EXPECT_NEAR(neg.constant, 0.397396, 1e-6);
  const double c = 1.0 / (2.0 * std::sqrt(M_PI));
  const auto half = subexp_asymptotics(c, 0.5, -1.0, INFINITY, INFINITY, SubexpRegime::Negative);
  EXPECT_NEAR(half.constant, 2.0 / std::sqrt(M_PI), 1e-14);
  EXPECT_NEAR(half(100.0), 1.128379167 / 10.0, 1e-9);
  const auto crit = subexp_asymptotics(1.0, 3.0, 2.0, 0.5, 0.25, SubexpRegime::Critical);
  EXPECT_NEAR(crit(10.0), 10.0 / (2.0 * 0.25), 1e-12);
  const auto sub = subexp_asymptotics(0.1, 1.5, 0.5, 0.758193, INFINITY, SubexpRegime::Subcritical);
  EXPECT_NEAR(sub.constant, 1.0 / (1.0 - 0.5 * 0.758193), 1e-15);
  EXPECT_THROW(subexp_asymptotics(0.1, 1.5, 2.0, 0.758193, INFINITY, SubexpRegime::Subcritical), Error);
  EXPECT_THROW(subexp_asymptotics(0.1, 1.5, 1.0, 0.758193, INFINITY, SubexpRegime::Negative), Error);
}

TEST(SubexpAsymptotics, NegativeRegimeTailConstant) {
  const LatticeReturn bar(symmetrize(make_kernel(DiscreteLaplacian{1})));
  const auto g = volterra_solve(bar, -1.0, 400.0, {0.05, true, false});
  std::vector<double> scaled;
  for (double t : {25.0, 100.0, 400.0}) scaled.push_back(g(t) * std::sqrt(t));
  const double target = 2.0 / std::sqrt(M_PI);
  for (std::size_t i = 1; i < scaled.size(); ++i) {
    EXPECT_LT(std::abs(scaled[i] - target), std::abs(scaled[i - 1] - target));
  }
  EXPECT_NEAR(scaled.back() / target, 1.0, 0.05);
}
