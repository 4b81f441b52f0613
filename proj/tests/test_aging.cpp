#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "symbranch/aging.hpp"

using namespace symbranch;

namespace {

const Kernel& k1() {
  static const Kernel k = make_kernel(DiscreteLaplacian{1});
  return k;
}
const Kernel& k2() {
  static const Kernel k = make_kernel(DiscreteLaplacian{2});
  return k;
}

// p(u) = 1/(1+u), m = 1: every integral is a logarithm.
double log_kernel_correlation(double t, double s) {
  return std::log((2 * t + s + 1) / (s + 1)) / std::sqrt(std::log(2 * t + 1) * std::log(2 * (t + s) + 1));
}

// Negative-regime limit at alpha = 1/2 in closed form: r = 1 - v^2 turns the integral into
// sqrt(2) asin(sqrt(2/(2+a))), and the normalization is pi/sqrt(2).
double negative_half_limit(double a) { return 2.0 / M_PI * std::asin(std::sqrt(2.0 / (2.0 + a))); }

}  // namespace

TEST(MomentFunction, ModelClasses) {
  const auto super = moment_function(SuperRandomWalk{}, k1(), 1.0, 10.0);
  EXPECT_TRUE(super.constant());
  EXPECT_EQ(super(7.0), 1.0);
  const auto stone = moment_function(SteppingStone{0.5}, k1(), 1.0, 10.0);
  EXPECT_DOUBLE_EQ(stone(0.0), 0.25);
  EXPECT_LT(stone(10.0), 0.25);
  const auto bounded = moment_function(BoundedDiffusion{0.5, 2.0}, k1(), 1.0, 10.0);
  EXPECT_EQ(bounded(3.0), 2.0);
  const auto anderson = moment_function(Anderson{}, k1(), 0.7, 10.0);
  const auto pam = moment_function(Symbiotic{1.0}, k1(), 0.7, 10.0);
  for (double t : {0.0, 1.0, 9.5}) EXPECT_DOUBLE_EQ(anderson(t), pam(t));
  EXPECT_THROW(moment_function(SteppingStone{1.0}, k1(), 1.0, 10.0), Error);
  EXPECT_THROW(moment_function(BoundedDiffusion{2.0, 1.0}, k1(), 1.0, 10.0), Error);
}

TEST(MomentFunction, NegativeMomentSplicesOntoAsymptote) {
  const auto m = moment_function(Symbiotic{-1.0}, k1(), 1.0, 1e6);
  ASSERT_TRUE(m.splice());
  EXPECT_DOUBLE_EQ(*m.splice(), 200.0);
  // Continuous at the splice and decaying like t^(-1/2) beyond it.
  EXPECT_NEAR(m(200.0 * (1 + 1e-12)) / m(200.0), 1.0, 1e-9);
  EXPECT_NEAR(m(1e6) / m(1e4), 0.1, 1e-3);
  EXPECT_THROW(moment_function(Symbiotic{0.5}, k1(), 1.0, 1e5), Error);
}

TEST(Correlation, SingleStateClosedForm) {
  auto one = [](double) { return 1.0; };
  EXPECT_NEAR(correlation_from(one, one, 3.0, 1.0), std::sqrt(0.75), 1e-12);
  EXPECT_NEAR(correlation_from(one, one, 10.0, 30.0), 0.5, 1e-12);
}

TEST(Correlation, LogKernelClosedForm) {
  auto p = [](double u) { return 1.0 / (1.0 + u); };
  auto one = [](double) { return 1.0; };
  for (double t : {1.0, 1e2, 1e4, 1e8}) {
    for (double a : {0.25, 0.5, 0.75}) {
      const double s = std::pow(t, a);
      EXPECT_NEAR(correlation_from(p, one, t, s), log_kernel_correlation(t, s), 1e-10) << t << " " << a;
    }
  }
}

TEST(Correlation, LogKernelDeviationShrinks) {
  double previous = 1.0;
  for (double t : {1e4, 1e6, 1e8}) {
    const double dev = std::abs(log_kernel_correlation(t, std::sqrt(t)) - 0.5);
    EXPECT_LT(dev, previous);
    previous = dev;
  }
}

TEST(Correlation, ZeroLagIsOne) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> time(0.5, 500.0), rho(-1.0, 0.5);
  for (int i = 0; i < 10; ++i) {
    const double t = time(rng);
    const DiffusionModel model = Symbiotic{std::min(0.0, rho(rng))};
    EXPECT_EQ(correlation({k1(), model, 1.0, t, 0.0}).value, 1.0);
    const ReturnProbability p(k1());
    const auto m = moment_function(model, k1(), 1.0, t);
    EXPECT_NEAR(correlation_from(p, m, t, 0.0), 1.0, 1e-8);
  }
}

TEST(Correlation, PrefactorInvariance) {
  const ReturnProbability p(k1());
  const auto m = moment_function(Symbiotic{-0.5}, k1(), 1.0, 60.0);
  for (double factor : {1e-3, 3.7, 1e4}) {
    auto scaled = [&](double u) { return factor * m(u); };
    EXPECT_NEAR(correlation_from(p, scaled, 40.0, 20.0), correlation_from(p, m, 40.0, 20.0), 1e-12);
  }
}

TEST(Correlation, SteppingStoneIndependentOfW) {
  for (double t : {5.0, 50.0}) {
    const double a = correlation({k1(), SteppingStone{0.5}, 1.0, t, t}).value;
    const double b = correlation({k1(), SteppingStone{0.9}, 1.0, t, t}).value;
    EXPECT_NEAR(a, b, 1e-10);
  }
}

TEST(Correlation, VarianceMatchesDualityFormula) {
  const ReturnProbability p(k1());
  const double kappa = 1.0, t = 10.0;
  for (double rho : {-0.5, 0.5}) {
    const auto m = moment_function(Symbiotic{rho}, k1(), kappa, t);
    const double lhs = 1.0 + covariance_integral(p, m, kappa, t, 0.0);
    const double rhs = 1.0 - 1.0 / rho + m(t) / rho;
    EXPECT_NEAR(lhs / rhs, 1.0, 1e-6) << "rho " << rho;
  }
}

TEST(Correlation, UncorrelatedOneDimensionalLinearScaling) {
  const double limit = (std::sqrt(1.5) - std::sqrt(0.5)) / std::pow(2.0, 0.25);
  const auto c = correlation({k1(), Symbiotic{0.0}, 1.0, 1e6, 1e6});
  EXPECT_EQ(c.path, "asymptotic");
  ASSERT_TRUE(c.crossover);
  EXPECT_LT(*c.crossover, 1e4);
  EXPECT_NEAR(c.value, limit, 1e-3);
  const auto exact = correlation({k1(), Symbiotic{0.0}, 1.0, 100.0, 100.0});
  EXPECT_EQ(exact.path, "exact");
  EXPECT_FALSE(exact.crossover);
  EXPECT_GT(std::abs(exact.value - limit), std::abs(c.value - limit));
}

TEST(Correlation, ValuesInUnitInterval) {
  for (const DiffusionModel& model : std::vector<DiffusionModel>{Symbiotic{-1.0}, Symbiotic{0.0}, Symbiotic{0.6},
                                                                 SuperRandomWalk{}, SteppingStone{0.3}}) {
    for (double s : {0.1, 5.0, 80.0}) {
      const double v = correlation({k1(), model, 1.0, 20.0, s}).value;
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Correlation, BoundedModelReportsEnvelope) {
  const auto c = correlation({k1(), BoundedDiffusion{0.5, 2.0}, 1.0, 30.0, 30.0});
  EXPECT_NEAR(c.lower, c.value * 0.25, 1e-15);
  EXPECT_LE(c.lower, c.value);
  EXPECT_GE(c.upper, c.value);
  EXPECT_LE(c.upper, 1.0);
}

TEST(Correlation, RejectsAsymmetricKernels) {
  const auto drift = make_kernel(FiniteRange{1, {{{1, 0, 0}, 0.7}, {{-1, 0, 0}, 0.3}}});
  try {
    correlation({drift, Symbiotic{0.0}, 1.0, 10.0, 1.0});
    FAIL() << "expected AsymmetricKernel";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AsymmetricKernel);
  }
  EXPECT_THROW(aging_sweep(drift, Symbiotic{0.0}, 1.0, AgingScaling::Linear, {1.0}, {10.0}), Error);
}

TEST(AgingLimit, ClosedForms) {
  EXPECT_NEAR(aging_limit(AgingRegime::Zero, 1.0, AgingScaling::Logarithmic, 0.3), 0.7, 1e-15);
  EXPECT_EQ(aging_limit(AgingRegime::Zero, 1.0, AgingScaling::Logarithmic, 1.4), 0.0);
  const double half = aging_limit(AgingRegime::Zero, 0.5, AgingScaling::Linear, 1.0);
  EXPECT_NEAR(half, (std::sqrt(1.5) - std::sqrt(0.5)) / std::pow(2.0, 0.25), 1e-15);
  EXPECT_NEAR(half, 0.43528001, 1e-8);
  EXPECT_EQ(aging_limit(AgingRegime::Zero, 0.5, AgingScaling::Linear, 0.0), 1.0);
  EXPECT_EQ(aging_limit(AgingRegime::Positive, 0.5, AgingScaling::Linear, 1.0), 0.0);
  EXPECT_EQ(aging_limit(AgingRegime::Negative, 1.5, AgingScaling::Linear, 1.0), 0.0);
}

TEST(AgingLimit, NegativeRegimeIntegral) {
  for (double a : {0.0, 0.01, 0.5, 1.0, 3.0, 1e4}) {
    EXPECT_NEAR(aging_limit(AgingRegime::Negative, 0.5, AgingScaling::Linear, a), negative_half_limit(a), 1e-8) << a;
  }
  EXPECT_NEAR(aging_limit(AgingRegime::Negative, 0.5, AgingScaling::Linear, 0.0), 1.0, 1e-8);
  EXPECT_LT(aging_limit(AgingRegime::Negative, 0.5, AgingScaling::Linear, 1e4), 0.05);
  // Other exponents: the a = 0 value is the Beta-function normalization.
  for (double alpha : {0.25, 0.75}) {
    EXPECT_NEAR(aging_limit(AgingRegime::Negative, alpha, AgingScaling::Linear, 0.0), 1.0, 1e-7) << alpha;
  }
}

TEST(AgingLimit, ScalingMustMatchExponent) {
  EXPECT_THROW(aging_limit(AgingRegime::Zero, 1.0, AgingScaling::Linear, 0.5), Error);
  EXPECT_THROW(aging_limit(AgingRegime::Zero, 0.5, AgingScaling::Logarithmic, 0.5), Error);
  EXPECT_THROW(aging_limit(AgingRegime::Zero, 0.5, AgingScaling::Linear, -1.0), Error);
}

TEST(AgingSweep, TwoDimensionalLogarithmicScaling) {
  const auto rep = aging_sweep(k2(), Symbiotic{0.0}, 1.0, AgingScaling::Logarithmic, {0.5}, {1e4, 1e6, 1e8});
  ASSERT_EQ(rep.rows.size(), 3u);
  EXPECT_DOUBLE_EQ(rep.alpha, 1.0);
  EXPECT_TRUE(rep.passed());
  for (std::size_t i = 1; i < rep.rows.size(); ++i) EXPECT_LT(rep.rows[i].deviation, rep.rows[i - 1].deviation);
  EXPECT_EQ(rep.rows.back().path, "asymptotic");
  EXPECT_LT(rep.rows.back().deviation, 0.1);
}

TEST(AgingSweep, OneDimensionalLinearScaling) {
  const auto rep = aging_sweep(k1(), Symbiotic{0.0}, 1.0, AgingScaling::Linear, {0.5, 1.0}, {1e2, 1e4, 1e6});
  EXPECT_TRUE(rep.passed());
  for (const auto& r : rep.rows) EXPECT_LT(r.deviation, 2e-3);
}

TEST(AgingSweep, NegativeCorrelation) {
  const auto rep = aging_sweep(k1(), Symbiotic{-0.5}, 1.0, AgingScaling::Linear, {0.01, 1.0}, {1e2, 1e4, 1e6});
  EXPECT_TRUE(rep.passed()) << rep.csv();
  EXPECT_NEAR(rep.rows.back().numeric, negative_half_limit(1.0), 0.05);
}

TEST(AgingSweep, AndersonModelDoesNotAge) {
  const auto rep = aging_sweep(k1(), Anderson{}, 1.0, AgingScaling::Linear, {1.0}, {10.0, 100.0, 1000.0});
  ASSERT_EQ(rep.rows.size(), 3u);
  for (std::size_t i = 1; i < rep.rows.size(); ++i) EXPECT_LT(rep.rows[i].numeric, rep.rows[i - 1].numeric);
  EXPECT_LT(rep.rows.back().numeric, 1e-3);
  EXPECT_TRUE(rep.passed());
}

TEST(AgingSweep, BoundedModelAssertsNoLimit) {
  const auto rep = aging_sweep(k1(), BoundedDiffusion{0.5, 1.0}, 1.0, AgingScaling::Linear, {1.0}, {10.0, 100.0});
  for (const auto& r : rep.rows) {
    EXPECT_FALSE(r.limit);
    EXPECT_LE(r.lower, r.upper);
  }
  EXPECT_TRUE(rep.trend.empty());
}

TEST(AgingSweep, CsvLayout) {
  const auto rep = aging_sweep(k1(), Symbiotic{0.0}, 1.0, AgingScaling::Linear, {1.0}, {10.0, 100.0});
  const auto csv = rep.csv();
  EXPECT_NE(csv.find("t,s,a,numeric,limit,deviation,path\n"), std::string::npos);
  EXPECT_EQ(csv.front(), '#');
}
