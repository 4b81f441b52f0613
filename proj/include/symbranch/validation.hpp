#pragma once

// Cross-oracle validation suites. Each criterion returns its measured values alongside the
// verdict so failures are diagnosable from the table alone.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "symbranch/aging.hpp"
#include "symbranch/chain.hpp"
#include "symbranch/kernel.hpp"
#include "symbranch/lattice.hpp"
#include "symbranch/lyapunov.hpp"
#include "symbranch/moments.hpp"
#include "symbranch/montecarlo.hpp"
#include "symbranch/return_source.hpp"
#include "symbranch/volterra.hpp"

namespace symbranch {

struct CheckResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct Criterion {
  int id;
  std::string name;
  std::function<CheckResult()> run;
};

namespace validation {

// Collects sub-checks into one verdict plus a readable detail line.
class Tally {
 public:
  void check(bool ok, const std::string& what) {
    ok_ = ok_ && ok;
    if (!detail_.empty()) detail_ += "; ";
    detail_ += (ok ? "" : "FAILED ") + what;
  }
  void note(const std::string& what) {
    if (!detail_.empty()) detail_ += "; ";
    detail_ += what;
  }
  bool ok() const { return ok_; }
  const std::string& detail() const { return detail_; }

 private:
  bool ok_ = true;
  std::string detail_;
};

inline std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}
inline std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}
inline std::string fmt(const char* f, double a, double b, double c) {
  char buf[192];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

inline constexpr double kWatson = 1.516386;
inline constexpr double kCriticalD3 = 1.3189;

// A random irreducible generator on 2..5 states.
inline Generator random_generator(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size(2, 5);
  std::uniform_real_distribution<double> rate(0.1, 2.0);
  const int n = size(rng);
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) r(i, j) = rate(rng);
    }
  }
  return Generator::from_rates(r);
}

inline CheckResult oracle_equivalence() {
  Tally tally;
  std::mt19937_64 rng(20240601);
  double worst = 0.0;
  for (int g = 0; g < 10; ++g) {
    const auto q = random_generator(rng);
    const ChainReturn f(q, 0);
    for (double kappa : {-2.0, -0.5, 0.5, 2.0}) {
      const auto curve = volterra_solve(f, kappa, 5.0, {1e-3, true, false}, "chain");
      worst = std::max(worst, rel(curve.back(), exact_chain_moment(q, 0, kappa, 5.0)));
    }
  }
  tally.check(worst <= 1e-6, fmt("max relative error %.3g over 40 solves (<= 1e-6)", worst));
  return {1, "", tally.ok(), tally.detail()};
}

inline CheckResult closed_form_volterra() {
  Tally tally;
  const double e1 = volterra_solve(SingleState{}, 1.0, 1.0).back() - std::exp(1.0);
  const double e2 = volterra_solve(ExponentialReturn{1.0}, 2.0, 1.0).back() - (2.0 * std::exp(1.0) - 1.0);
  tally.check(std::abs(e1) <= 1e-8, fmt("f=1: g(1)-e = %.3g", e1));
  tally.check(std::abs(e2) <= 1e-8, fmt("f=exp(-t), kappa=2: g(1)-(2e-1) = %.3g", e2));
  return {2, "", tally.ok(), tally.detail()};
}

inline CheckResult lyapunov_correctness() {
  Tally tally;
  double worst_single = 0.0, worst_exp = 0.0;
  for (double kappa : {0.1, 1.0, 3.0, 10.0}) {
    worst_single = std::max(worst_single, rel(lyapunov_rate(SingleState{}, kappa), kappa));
  }
  for (double kappa : {0.5, 1.5, 3.0, 7.0}) {
    worst_exp = std::max(worst_exp, std::abs(lyapunov_rate(ExponentialReturn{1.0}, kappa) - std::max(kappa - 1.0, 0.0)));
  }
  tally.check(worst_single <= 1e-10, fmt("single state |r/kappa-1| %.3g", worst_single));
  tally.check(worst_exp <= 1e-8, fmt("exponential |r-(kappa-1)+| %.3g", worst_exp));
  const auto k3 = make_kernel(DiscreteLaplacian{3});
  const double watson = green_values(k3).green;
  const double kcr = 1.0 / LatticeReturn(symmetrize(k3)).green();
  tally.check(std::abs(watson - kWatson) <= 1e-3, fmt("Watson %.9f", watson));
  tally.check(std::abs(kcr - kCriticalD3) <= 2e-3, fmt("kappa_cr %.6f", kcr));
  return {3, "", tally.ok(), tally.detail()};
}

inline CheckResult tauberian_constant() {
  Tally tally;
  const LatticeReturn bar(symmetrize(make_kernel(DiscreteLaplacian{1})));
  const auto g = volterra_solve(bar, -1.0, 1000.0, {0.05, true, false}, "symmetrization");
  const double scaled = g.back() * std::sqrt(1000.0);
  const double target = 2.0 / std::sqrt(M_PI);
  tally.check(rel(scaled, target) <= 0.03, fmt("g(1000) sqrt(1000) = %.8f vs %.8f (rel %.3g)", scaled, target,
                                               rel(scaled, target)));
  return {4, "", tally.ok(), tally.detail()};
}

inline CheckResult subcritical_limit() {
  Tally tally;
  const LatticeReturn bar(symmetrize(make_kernel(DiscreteLaplacian{3})));
  const double green = bar.green();
  const double limit = 1.0 / (1.0 - 0.5 * green);
  const auto g = volterra_solve(bar, 0.5, 200.0, {0.0, true, false}, "symmetrization");
  tally.check(rel(g.back(), limit) <= 0.01,
              fmt("g(200) = %.8f vs 1/(1-0.5 G) = %.8f (rel %.3g, <= 0.01)", g.back(), limit, rel(g.back(), limit)));
  return {5, "", tally.ok(), tally.detail()};
}

inline CheckResult intermittency_dichotomy() {
  Tally tally;
  const std::vector<Kernel> kernels{
      make_kernel(DiscreteLaplacian{1}), make_kernel(DiscreteLaplacian{2}), make_kernel(DiscreteLaplacian{3}),
      make_kernel(RiemannWalk{0.5, 1000}),
      make_kernel(FiniteRange{1, {{{1, 0, 0}, 0.7}, {{-1, 0, 0}, 0.2}, {{2, 0, 0}, 0.1}}})};
  int wrong = 0;
  for (const auto& k : kernels) {
    for (double rho : {-1.0, -0.75, -0.5, -0.25, 0.0}) {
      const auto r = classify_intermittency({k, 1.0, rho});
      if (r.verdict != Verdict::NonIntermittent || r.gamma2 != 0.0) ++wrong;
    }
  }
  tally.check(wrong == 0, fmt("%.0f of 25 non-positive rho cells misclassified", double(wrong)));
  const auto k3 = make_kernel(DiscreteLaplacian{3});
  const LatticeReturn bar(symmetrize(k3));
  double change = std::numeric_limits<double>::quiet_NaN();
  double previous = 0.0;
  for (double kappa = 1.28; kappa <= 1.36 + 1e-12; kappa += 0.0025) {
    const double g2 = lyapunov_rate(bar, kappa);
    if (previous == 0.0 && g2 > 0.0 && std::isnan(change)) change = kappa;
    previous = g2;
  }
  tally.check(std::abs(change - kCriticalD3) <= 0.01, fmt("gamma2 turns positive at kappa = %.4f", change));
  return {6, "", tally.ok(), tally.detail()};
}

inline CheckResult aging_limits() {
  Tally tally;
  const auto k1 = make_kernel(DiscreteLaplacian{1});
  const auto k2 = make_kernel(DiscreteLaplacian{2});
  const double half = correlation({k1, Symbiotic{0.0}, 1.0, 1e6, 1e6}).value;
  tally.check(std::abs(half - 0.435275) <= 0.02, fmt("rho=0 alpha=1/2 a=1: %.6f", half));
  for (double a : {0.25, 0.5, 0.75}) {
    const double t = 1e8;
    const auto c = correlation({k2, Symbiotic{0.0}, 1.0, t, std::pow(t, a)});
    tally.check(std::abs(c.value - (1.0 - a)) <= 0.1 && c.path == "asymptotic",
                fmt("rho=0 alpha=1 a=%.2f: %.6f", a, c.value));
  }
  const double lim = aging_limit(AgingRegime::Negative, 0.5, AgingScaling::Linear, 0.0);
  const double near_zero = correlation({k1, Symbiotic{-0.5}, 1.0, 1e6, 1e3}).value;
  tally.check(std::abs(lim - 1.0) <= 0.05, fmt("rho<0 alpha=1/2 limit at a=0: %.6f", lim));
  tally.check(std::abs(near_zero - 1.0) <= 0.05, fmt("rho<0 numeric at t=1e6, a=1e-3: %.6f", near_zero));
  return {7, "", tally.ok(), tally.detail()};
}

inline CheckResult monte_carlo(std::size_t replicas = 10000) {
  Tally tally;
  const auto k1 = make_kernel(DiscreteLaplacian{1});
  const LatticeReturn bar(symmetrize(k1));
  for (double rho : {0.5, -0.5}) {
    SimConfig cfg;
    cfg.kernel = k1;
    cfg.side = 64;
    cfg.kappa = 1.0;
    cfg.rho = rho;
    cfg.horizon = 2.0;
    cfg.dt = 1e-3;
    cfg.replicas = replicas;
    cfg.seed = 1234;
    const auto res = simulate_lattice(cfg, {{ObservableKind::MeanU}, {ObservableKind::MixedUV}});
    const auto& mean = res.at("E[u]");
    const auto& mixed = res.at("E[uv]");
    const double g = volterra_solve(bar, rho, 2.0).back();
    const double bias = std::abs(scheme_second_moments(cfg).mixed - g);
    tally.check(std::abs(mean.estimate - 1.0) <= 3.0 * mean.stderr_,
                fmt("rho=%+.1f E[u] = %.5f +- %.5f", rho, mean.estimate, mean.stderr_));
    tally.check(std::abs(mixed.estimate - g) <= 3.0 * mixed.stderr_ + bias,
                fmt("E[uv] = %.5f +- %.5f vs %.6f", mixed.estimate, mixed.stderr_, g) + fmt(" (bias %.2g)", bias));
  }
  SimConfig cons;
  cons.kernel = k1;
  cons.rho = -1.0;
  cons.u0 = cons.v0 = 0.5;
  cons.replicas = 50;
  const auto c = simulate_lattice(cons, {{ObservableKind::MeanU}});
  tally.check(c.max_sum_drift / cons.horizon <= 1e-10, fmt("rho=-1 max |u+v-1| per unit time %.3g", c.max_sum_drift / cons.horizon));
  SimConfig same = cons;
  same.rho = 1.0;
  same.u0 = same.v0 = 1.0;
  const auto s = simulate_lattice(same, {{ObservableKind::MeanU}});
  tally.check(s.max_difference == 0.0, fmt("rho=1 max |u-v| %.3g", s.max_difference));
  return {8, "", tally.ok(), tally.detail()};
}

inline CheckResult property_suites() {
  Tally tally;
  // Row sums.
  double worst_sum = 0.0;
  for (const auto& spec : std::vector<KernelSpec>{DiscreteLaplacian{1}, DiscreteLaplacian{3}, RiemannWalk{0.5, 3},
                                                  RiemannWalk{1.5, 10000},
                                                  FiniteRange{2, {{{1, 1, 0}, 3.0}, {{-2, 0, 0}, 0.25}}}}) {
    const auto k = make_kernel(spec);
    double s = 0.0;
    for (const auto& j : k.jumps()) s += j.rate;
    worst_sum = std::max(worst_sum, std::abs(s - 1.0));
  }
  tally.check(worst_sum <= 1e-12, fmt("row sums within %.2g of 1", worst_sum));

  // Symmetrization identity on a 20-point grid.
  double worst_sym = 0.0;
  for (int d : {1, 2, 3}) {
    const auto k = make_kernel(DiscreteLaplacian{d});
    const ReturnProbability p(k), pb(symmetrize(k));
    for (int i = 0; i < 20; ++i) {
      const double t = 0.25 * std::pow(1.5, i);
      worst_sym = std::max(worst_sym, std::abs(pb(t) - p(2.0 * t)) / (2.0 * p.tolerance()));
    }
  }
  tally.check(worst_sym < 1.0, fmt("|p_bar(t) - p(2t)| / (2 tol) <= %.3g", worst_sym));

  // Submultiplicativity and exponential bounds of g.
  const LatticeReturn bar(symmetrize(make_kernel(DiscreteLaplacian{1})));
  bool submult = true, bounds = true;
  for (double kappa : {-1.0, 0.5, 2.0}) {
    const auto g = volterra_solve(bar, kappa, 10.0, {0.02, true, false});
    const auto& t = g.times();
    const auto& v = g.values();
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double lo = std::exp(std::min(kappa, 0.0) * t[i]), hi = std::exp(std::max(kappa, 0.0) * t[i]);
      if (v[i] < lo * (1 - 1e-12) || v[i] > hi * (1 + 1e-12)) bounds = false;
      if (kappa <= 0.0) continue;
      for (std::size_t j = 0; i + j < t.size(); ++j) {
        if (v[i + j] > v[i] * v[j] * (1.0 + 5.0 * g.step())) submult = false;
      }
    }
  }
  tally.check(submult, "g(t+s) <= g(t) g(s) (1+5h) on all grid pairs");
  tally.check(bounds, "exp(min(kappa,0) t) <= g(t) <= exp(max(kappa,0) t)");

  // Prefactor invariance of correlations.
  const auto k1 = make_kernel(DiscreteLaplacian{1});
  const ReturnProbability p1(k1);
  const auto m = moment_function(Symbiotic{-0.5}, k1, 1.0, 30.0);
  auto scaled = [&](double u) { return 3.7 * m(u); };
  const double c1 = correlation_from(p1, m, 20.0, 10.0), c2 = correlation_from(p1, scaled, 20.0, 10.0);
  tally.check(std::abs(c1 - c2) <= 1e-12, fmt("prefactor changes correlation by %.2g", std::abs(c1 - c2)));

  // Determinism of seeded runs.
  SimConfig cfg;
  cfg.kernel = k1;
  cfg.side = 16;
  cfg.horizon = 0.5;
  cfg.rho = 0.3;
  cfg.replicas = 64;
  cfg.seed = 99;
  const auto a = simulate_lattice(cfg, {{ObservableKind::SecondU}, {ObservableKind::MixedUV}});
  cfg.threads = 3;
  const auto b = simulate_lattice(cfg, {{ObservableKind::SecondU}, {ObservableKind::MixedUV}});
  const auto da = simulate_dual_pair(k1, 1.0, 0.3, 2.0, PairStart::Same, 500, 7);
  const auto db = simulate_dual_pair(k1, 1.0, 0.3, 2.0, PairStart::Same, 500, 7, 2);
  const bool same = a.to_json().dump() == b.to_json().dump() && da.to_json().dump() == db.to_json().dump();
  tally.check(same, "seeded runs bit-identical across thread counts");
  return {9, "", tally.ok(), tally.detail()};
}

}  // namespace validation

inline std::vector<Criterion> acceptance_criteria() {
  using namespace validation;
  return {
      {1, "oracle equivalence", oracle_equivalence},
      {2, "closed-form Volterra checks", closed_form_volterra},
      {3, "Lyapunov correctness", lyapunov_correctness},
      {4, "Tauberian constant, negative regime", tauberian_constant},
      {5, "subcritical limit", subcritical_limit},
      {6, "intermittency dichotomy", intermittency_dichotomy},
      {7, "aging limits", aging_limits},
      {8, "Monte Carlo cross-validation", [] { return monte_carlo(); }},
      {9, "property suites", property_suites},
  };
}

// Fast invariant checks for `validate --suite quick`.
inline std::vector<Criterion> quick_criteria() {
  using namespace validation;
  return {
      {2, "closed-form Volterra checks", closed_form_volterra},
      {3, "Lyapunov correctness", lyapunov_correctness},
      {4, "Tauberian constant, negative regime", tauberian_constant},
      {9, "property suites", property_suites},
      {8, "Monte Carlo cross-validation (1000 replicas)", [] { return monte_carlo(1000); }},
  };
}

inline CheckResult run_criterion(const Criterion& c) {
  const auto start = std::chrono::steady_clock::now();
  CheckResult r;
  try {
    r = c.run();
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("error: ") + e.what();
  }
  r.id = c.id;
  r.name = c.name;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace symbranch
