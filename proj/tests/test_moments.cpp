#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "symbranch/aging.hpp"
#include "symbranch/moments.hpp"

using namespace symbranch;

namespace {

const Kernel& k1() {
  static const Kernel k = make_kernel(DiscreteLaplacian{1});
  return k;
}
const Kernel& k3() {
  static const Kernel k = make_kernel(DiscreteLaplacian{3});
  return k;
}

constexpr double kHalfWatson = 0.758193029576;

}  // namespace

TEST(SecondMoments, UncorrelatedNoiseKeepsMixedMomentAtOne) {
  for (const auto* k : {&k1(), &k3()}) {
    const auto r = second_moments({*k, 2.0, 0.0}, 10.0);
    for (double v : r.mixed) EXPECT_EQ(v, 1.0);
    EXPECT_DOUBLE_EQ(r.second.front(), 1.0);
    for (std::size_t i = 1; i < r.second.size(); ++i) EXPECT_GE(r.second[i], r.second[i - 1]);
  }
}

TEST(SecondMoments, UncorrelatedTransientLimit) {
  const auto r = second_moments({k3(), 1.0, 0.0}, 400.0, {0.1, true, false});
  const double limit = 1.0 + kHalfWatson;
  EXPECT_LT(r.second.back(), limit);
  // E[L_t] approaches G with a t^(-1/2) gap.
  const double gap = 2.0 * std::pow(4.0 * M_PI / 3.0, -1.5) / std::sqrt(400.0);
  EXPECT_NEAR(r.second.back(), limit - gap, 1e-4);
}

TEST(SecondMoments, PerfectCorrelationEqualsMixed) {
  const auto r = second_moments({k1(), 0.7, 1.0}, 5.0);
  ASSERT_EQ(r.second.size(), r.mixed.size());
  for (std::size_t i = 0; i < r.mixed.size(); ++i) EXPECT_NEAR(r.second[i], r.mixed[i], 1e-14);
}

TEST(SecondMoments, AnticorrelatedRecurrentApproachesTwo) {
  const auto r = second_moments({k1(), 1.0, -1.0}, 200.0, {0.05, true, false});
  EXPECT_DOUBLE_EQ(r.second.front(), 1.0);
  for (std::size_t i = 1; i < r.second.size(); ++i) ASSERT_GE(r.second[i], r.second[i - 1] - 1e-12);
  EXPECT_LT(r.second.back(), 2.0);
  EXPECT_NEAR(r.second.back(), 2.0, 0.1);
  // The gap is g_{-1}(t) ~ (2/sqrt(pi))/sqrt(t).
  EXPECT_NEAR((2.0 - r.second.back()) * std::sqrt(200.0), 2.0 / std::sqrt(M_PI), 0.06);
}

TEST(SecondMoments, NegativeCorrelationBoundedWithAsymptoticTail) {
  const double rho = -0.5, t = 1e4;
  const auto m = moment_function(Symbiotic{rho}, k1(), 1.0, t);
  ASSERT_TRUE(m.splice());
  const double second = 1.0 - 1.0 / rho + m(t) / rho;
  EXPECT_NEAR(second / 3.0, 1.0, 0.1);
  EXPECT_LT(second, 3.0);
}

TEST(Intermittency, NonPositiveCorrelationNeverIntermittent) {
  for (const auto* k : {&k1(), &k3()}) {
    for (double rho : {-1.0, -0.3, 0.0}) {
      for (double kappa : {0.1, 1.0, 50.0}) {
        const auto r = classify_intermittency({*k, kappa, rho});
        EXPECT_EQ(r.verdict, Verdict::NonIntermittent);
        EXPECT_EQ(r.gamma2, 0.0);
      }
    }
  }
}

TEST(Intermittency, RecurrentWalkIntermittentForAnyPositiveCorrelation) {
  for (double kappa : {0.05, 1.0}) {
    const auto r = classify_intermittency({k1(), kappa, 0.2});
    EXPECT_EQ(r.verdict, Verdict::Intermittent);
    EXPECT_GT(r.gamma2, 0.0);
    EXPECT_EQ(r.kappa_cr, 0.0);
  }
}

TEST(Intermittency, TransientThreshold) {
  const auto below = classify_intermittency({k3(), 1.0, 1.0});
  EXPECT_EQ(below.verdict, Verdict::NonIntermittent);
  EXPECT_NEAR(below.green_bar, kHalfWatson, 1e-8);
  EXPECT_NEAR(below.kappa_cr, 1.0 / kHalfWatson, 1e-6);
  const auto at = classify_intermittency({k3(), 1.0 / (0.5 * below.green_bar), 0.5});
  EXPECT_EQ(at.verdict, Verdict::Boundary);
  EXPECT_EQ(at.gamma2, 0.0);
  const auto above = classify_intermittency({k3(), 1.4, 1.0});
  EXPECT_EQ(above.verdict, Verdict::Intermittent);
  EXPECT_GT(above.gamma2, 0.0);
}

TEST(Intermittency, VerdictAgreesWithFiniteHorizonGrowth) {
  for (double rho : {0.5, -0.5}) {
    const ModelParams p{k1(), 1.0, rho};
    const auto r = second_moments(p, 50.0);
    const double slope = std::log(r.mixed.back()) / 50.0;
    EXPECT_EQ(classify_intermittency(p).verdict == Verdict::Intermittent, slope > 1e-3) << "rho " << rho;
  }
}

TEST(Intermittency, GammaTwoMonotoneInCorrelation) {
  const std::vector<double> rhos{0.1, 0.3, 0.5, 0.8, 1.0};
  for (double kappa : {0.2, 0.5, 1.0, 2.0, 4.0}) {
    double previous = 0.0;
    for (double rho : rhos) {
      const double g2 = classify_intermittency({k1(), kappa, rho}).gamma2;
      EXPECT_GE(g2, previous) << "kappa " << kappa << " rho " << rho;
      EXPECT_LE(g2, kappa * rho);
      previous = g2;
    }
  }
}

TEST(Intermittency, RejectsInvalidParameters) {
  EXPECT_THROW(classify_intermittency({k1(), 0.0, 0.5}), Error);
  EXPECT_THROW(classify_intermittency({k1(), 1.0, 1.5}), Error);
  EXPECT_THROW(classify_intermittency({k1(), 1.0, 0.5, false}), Error);
}

TEST(Gamma2Curve, SingleStateIsLinearAndFlagged) {
  const std::vector<double> kappas{0.5, 1.0, 1.5, 2.0};
  const auto rep = gamma2_curve_from(SingleState{}, 1.0, kappas, std::nullopt);
  for (const auto& s : rep.lyapunov.samples) EXPECT_NEAR(s.rate, s.kappa, 1e-9);
  EXPECT_EQ(rep.checks[0].name, "convexity");
  EXPECT_EQ(rep.checks[0].status, CheckStatus::Degenerate);
  EXPECT_EQ(rep.checks[1].status, CheckStatus::Pass);
}

TEST(Gamma2Curve, RecurrentQuadraticOnset) {
  std::vector<double> kappas;
  for (double k = 0.02; k < 1.0; k *= 1.6) kappas.push_back(k);
  const auto rep = gamma2_curve(k1(), 1.0, kappas);
  for (const auto& c : rep.checks) EXPECT_EQ(c.status, CheckStatus::Pass) << c.name << ": " << c.detail;
  const auto& first = rep.lyapunov.samples.front();
  EXPECT_NEAR(first.rate / (first.kappa * first.kappa / 4.0), 1.0, 0.05);
}

TEST(Gamma2Curve, TransientOnsetAboveThreshold) {
  const double kcr = 1.0 / kHalfWatson;
  std::vector<double> kappas;
  for (double e : {0.3, 0.1, 0.03, 0.01, 0.003}) kappas.insert(kappas.begin(), kcr + e);
  const auto rep = gamma2_curve(k3(), 1.0, kappas);
  EXPECT_NEAR(rep.lyapunov.kappa_cr, kcr, 1e-6);
  for (const auto& c : rep.checks) EXPECT_EQ(c.status, CheckStatus::Pass) << c.name << ": " << c.detail;
}

TEST(Gamma2Curve, CorrelationRescalesThreshold) {
  const std::vector<double> kappas{2.0, 2.5, 3.0, 3.5};
  const auto half = gamma2_curve(k3(), 0.5, kappas);
  EXPECT_NEAR(half.lyapunov.kappa_cr, 2.0 / kHalfWatson, 1e-5);
  const auto full = gamma2_curve(k3(), 1.0, std::vector<double>{1.0, 1.25, 1.5, 1.75});
  for (std::size_t i = 0; i < kappas.size(); ++i) {
    EXPECT_NEAR(half.lyapunov.samples[i].rate, full.lyapunov.samples[i].rate, 1e-9);
  }
  EXPECT_THROW(gamma2_curve(k3(), 0.0, kappas), Error);
}

TEST(MomentAsymptote, UncorrelatedCases) {
  const auto tr = second_moment_asymptote({k3(), 2.0, 0.0});
  EXPECT_EQ(tr.case_label, "rho=0, alpha>1");
  EXPECT_NEAR(tr.form(1e6), 1.0 + 2.0 * kHalfWatson, 1e-7);
  const auto rec = second_moment_asymptote({k1(), 1.0, 0.0});
  EXPECT_EQ(rec.case_label, "rho=0, alpha<1");
  // kappa c/(1-alpha) t^(1-alpha) with c = 1/(2 sqrt(pi)), alpha = 1/2.
  EXPECT_NEAR(rec.form(100.0), 10.0 / std::sqrt(M_PI), 1e-12);
  const auto two = second_moment_asymptote({make_kernel(DiscreteLaplacian{2}), 1.0, 0.0});
  EXPECT_EQ(two.case_label, "rho=0, alpha=1");
  EXPECT_NEAR(two.form(std::exp(3.0)), 3.0 / (2.0 * M_PI), 1e-12);
}

TEST(MomentAsymptote, AnticorrelatedTransientConstant) {
  const auto a = second_moment_asymptote({k3(), 0.5, -1.0});
  EXPECT_EQ(a.case_label, "rho<0, alpha>1");
  const double expected = 2.0 + 1.0 / (-1.0 * (1.0 + 0.5 * kHalfWatson));
  EXPECT_NEAR(expected, 1.27488759, 1e-8);
  EXPECT_NEAR(a.form(1e8), expected, 1e-7);
}

TEST(MomentAsymptote, AnticorrelatedRecurrentOffset) {
  const auto a = second_moment_asymptote({k1(), 1.0, -0.5});
  EXPECT_EQ(a.case_label, "rho<0, alpha<=1");
  EXPECT_NEAR(a.form(1e12), 3.0, 1e-5);
  EXPECT_LT(a.form(1e4), 3.0);
}

TEST(MomentAsymptote, PositiveSubcriticalComposedLimit) {
  const double kappa = 1.0, rho = 0.5;
  const auto a = second_moment_asymptote({k3(), kappa, rho});
  EXPECT_EQ(a.case_label, "rho>0, subcritical");
  const double limit = 1.0 - 1.0 / rho + 1.0 / (rho * (1.0 - kappa * rho * kHalfWatson));
  EXPECT_NEAR(a.form(1.0), limit, 1e-7);
  // The Volterra solution closes in on the composed limit at the t^(-1/2) rate.
  const auto r = second_moments({k3(), kappa, rho}, 200.0, {0.05, true, false});
  const double gap50 = std::abs(limit - r.second[std::size_t(std::llround(50.0 / 0.05))]);
  const double gap200 = std::abs(limit - r.second.back());
  EXPECT_LT(gap200, 0.6 * gap50);
  EXPECT_NEAR(gap200 / gap50, 0.5, 0.05);
  EXPECT_LT(gap200 / limit, 0.03);
}

TEST(MomentAsymptote, ExponentialGrowthIsAMismatch) {
  EXPECT_THROW(second_moment_asymptote({k1(), 1.0, 0.5}), Error);
  EXPECT_THROW(second_moment_asymptote({k3(), 2.0, 1.0}), Error);
  const auto crit = second_moment_asymptote({k3(), 1.0 / kHalfWatson, 1.0});
  EXPECT_EQ(crit.case_label, "rho>0, critical");
  EXPECT_GT(crit.form(1e4), crit.form(1e2));
}

TEST(CriticalMoment, Values) {
  EXPECT_EQ(critical_moment(0.0), 2.0);
  EXPECT_EQ(critical_moment(1.0), 1.0);
  EXPECT_TRUE(std::isinf(critical_moment(-1.0)));
  EXPECT_NEAR(critical_moment(0.5), 1.5, 1e-15);
  EXPECT_NEAR(critical_moment(0.5), M_PI / (M_PI / 2.0 + std::atan(0.5 / std::sqrt(0.75))), 1e-15);
  EXPECT_THROW(critical_moment(1.2), Error);
}

TEST(CriticalMoment, StrictlyDecreasing) {
  double previous = critical_moment(-1.0);
  for (int i = 1; i <= 100; ++i) {
    const double rho = -1.0 + 0.02 * i;
    const double p = critical_moment(rho);
    EXPECT_LT(p, previous) << rho;
    EXPECT_GE(p, 1.0);
    previous = p;
  }
}
