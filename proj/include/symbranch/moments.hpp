#pragma once

// Second moments of the symbiotic branching model with u0 = v0 = 1, through the local time L_t of
// the symmetrized walk at 0:
//   E[u v]  = E[exp(kappa rho L_t)]
//   E[u^2]  = 1 + kappa E[L_t]                                  (rho = 0)
//           = 1 - 1/rho + E[exp(kappa rho L_t)] / rho           (rho != 0)

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "symbranch/asymptotics.hpp"
#include "symbranch/errors.hpp"
#include "symbranch/kernel.hpp"
#include "symbranch/lyapunov.hpp"
#include "symbranch/return_curve.hpp"
#include "symbranch/return_source.hpp"
#include "symbranch/volterra.hpp"

namespace symbranch {

struct ModelParams {
  Kernel kernel;
  double kappa = 1.0;
  double rho = 0.0;
  bool homogeneous = true;

  void validate() const {
    require(std::isfinite(kappa) && kappa > 0.0, ErrorCode::InvalidArgument, "branching rate kappa must be > 0");
    require(rho >= -1.0 && rho <= 1.0, ErrorCode::InvalidArgument, "correlation rho must lie in [-1, 1]");
    require(homogeneous, ErrorCode::InvalidArgument, "only homogeneous initial conditions are supported");
  }
};

enum class Verdict { Intermittent, Boundary, NonIntermittent };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Intermittent: return "intermittent";
    case Verdict::Boundary: return "boundary";
    case Verdict::NonIntermittent: return "non-intermittent";
  }
  return "?";
}

struct IntermittencyResult {
  Verdict verdict = Verdict::NonIntermittent;
  double gamma2 = 0.0;
  double green_bar = 0.0;  // G_inf of the symmetrization
  double kappa_cr = std::numeric_limits<double>::infinity();  // threshold in kappa at this rho
};

inline IntermittencyResult classify_intermittency(const ModelParams& p) {
  p.validate();
  const LatticeReturn bar(symmetrize(p.kernel));
  IntermittencyResult r;
  r.green_bar = bar.green();
  if (p.rho > 0.0) r.kappa_cr = std::isfinite(r.green_bar) ? 1.0 / (p.rho * r.green_bar) : 0.0;
  if (p.rho <= 0.0) return r;
  const double x = p.kappa * p.rho;
  switch (classify_rate(x, r.green_bar)) {
    case Regime::Supercritical:
      r.verdict = Verdict::Intermittent;
      r.gamma2 = lyapunov_rate(bar, x);
      break;
    case Regime::Critical: r.verdict = Verdict::Boundary; break;
    case Regime::Subcritical: break;
  }
  return r;
}

// c, alpha, G and H of the symmetrized walk; c is fitted when theory only supplies alpha.
inline TailParameters symmetrized_tail(const Kernel& k, double fit_horizon = 1e4) {
  const Kernel bar = symmetrize(k);
  TailParameters tp;
  auto tail = bar.analytic_tail();
  if (!tail || !tail->c_analytic) tail = return_curve(bar, geometric_grid(fit_horizon, 20)).tail();
  tp.c = tail->c;
  tp.alpha = tail->alpha;
  const auto gv = green_values(bar);
  tp.green = gv.green;
  tp.green_t = gv.green_t;
  return tp;
}

struct MomentAsymptote {
  std::string case_label;
  AsymptoticForm form;  // E[u^2](t) ~ form(t)
};

inline MomentAsymptote second_moment_asymptote(double kappa, double rho, const TailParameters& bar) {
  require(kappa > 0.0 && rho >= -1.0 && rho <= 1.0, ErrorCode::InvalidArgument, "bad model parameters");
  const double x = kappa * rho;
  const double alpha = bar.alpha;
  MomentAsymptote out;
  if (rho == 0.0) {
    if (alpha < 1.0 && !detail::near(alpha, 1.0)) {
      out.form = {0.0, kappa * bar.c / (1.0 - alpha), 1.0 - alpha, 0.0, "kappa*c/(1-alpha)*t^(1-alpha)"};
      out.case_label = "rho=0, alpha<1";
    } else if (detail::near(alpha, 1.0)) {
      out.form = {0.0, kappa * bar.c, 0.0, 1.0, "kappa*c*log t"};
      out.case_label = "rho=0, alpha=1";
    } else {
      require(std::isfinite(bar.green), ErrorCode::RegimeMismatch, "alpha > 1 needs a finite G_inf");
      out.form = {0.0, 1.0 + kappa * bar.green, 0.0, 0.0, "1+kappa*G"};
      out.case_label = "rho=0, alpha>1";
    }
    return out;
  }
  const double shift = 1.0 - 1.0 / rho;
  if (rho > 0.0) {
    require(alpha > 1.0 && std::isfinite(bar.green), ErrorCode::RegimeMismatch,
            "recurrent symmetrization with rho > 0: second moments grow exponentially");
    const double xg = x * bar.green;
    if (std::abs(xg - 1.0) <= kCriticalTolerance) {
      auto g = subexp_asymptotics(bar.c, alpha, 1.0 / bar.green, bar.green, bar.green_t, SubexpRegime::Critical);
      g.constant /= rho;
      g.label = "(1/rho)*" + g.label;
      out.form = g;
      out.case_label = "rho>0, critical";
      return out;
    }
    require(xg < 1.0, ErrorCode::RegimeMismatch, "kappa*rho above 1/G_inf: second moments grow exponentially");
    const auto g = subexp_asymptotics(bar.c, alpha, x, bar.green, bar.green_t, SubexpRegime::Subcritical);
    out.form = {0.0, shift + g.constant / rho, 0.0, 0.0, "1-1/rho+1/(rho*(1-kappa*rho*G))"};
    out.case_label = "rho>0, subcritical";
    return out;
  }
  auto g = subexp_asymptotics(bar.c, alpha, x, bar.green, bar.green_t, SubexpRegime::Negative);
  if (alpha > 1.0 && !detail::near(alpha, 1.0)) {
    out.form = {0.0, shift + g.constant / rho, 0.0, 0.0, "1-1/rho+1/(rho*(1-rho*kappa*G))"};
    out.case_label = "rho<0, alpha>1";
  } else {
    // Leading term is the offset 1 - 1/rho; the decaying g correction is kept.
    g.offset = shift;
    g.constant /= rho;
    g.label = "1-1/rho+(1/rho)*" + g.label;
    out.form = g;
    out.case_label = "rho<0, alpha<=1";
  }
  return out;
}

inline MomentAsymptote second_moment_asymptote(const ModelParams& p) {
  p.validate();
  return second_moment_asymptote(p.kappa, p.rho, symmetrized_tail(p.kernel));
}

struct MomentReport {
  std::vector<double> t;
  std::vector<double> mixed;   // E[u v]
  std::vector<double> second;  // E[u^2]
  std::vector<double> error;   // Richardson estimate carried over from g, or 0
  IntermittencyResult intermittency;
  std::string asymptote;
};

// E[L_t] = int_0^t p_bar on the uniform grid, Simpson per cell from midpoint samples.
template <class F>
std::vector<double> expected_local_time(const F& p_bar, double horizon, double step) {
  const std::size_t cells = std::max<std::size_t>(3, std::size_t(std::ceil(horizon / step - 1e-9)));
  const double h = horizon / double(cells);
  const auto samples = detail::sample_source(p_bar, 0.5 * h, 2 * cells);
  std::vector<double> out(cells + 1, 0.0);
  for (std::size_t j = 0; j < cells; ++j) {
    out[j + 1] = out[j] + h * (samples[2 * j] + 4.0 * samples[2 * j + 1] + samples[2 * j + 2]) / 6.0;
  }
  return out;
}

template <ReturnSource S>
MomentReport second_moments_from(const S& p_bar, double kappa, double rho, double horizon, VolterraOptions opts = {}) {
  MomentReport r;
  if (rho == 0.0) {
    const double h = opts.step > 0.0 ? opts.step : default_step(0.0, horizon);
    const auto local = expected_local_time(p_bar, horizon, h);
    const double hh = horizon / double(local.size() - 1);
    for (std::size_t i = 0; i < local.size(); ++i) {
      r.t.push_back(i + 1 == local.size() ? horizon : hh * double(i));
      r.mixed.push_back(1.0);
      r.second.push_back(1.0 + kappa * local[i]);
      r.error.push_back(0.0);
    }
    return r;
  }
  const auto g = volterra_solve(p_bar, kappa * rho, horizon, opts, "symmetrization");
  r.t = g.times();
  r.mixed = g.values();
  r.error = g.errors();
  for (double v : r.mixed) r.second.push_back(1.0 - 1.0 / rho + v / rho);
  for (auto& e : r.error) e /= std::abs(rho);
  return r;
}

inline MomentReport second_moments(const ModelParams& p, double horizon, VolterraOptions opts = {}) {
  p.validate();
  const LatticeReturn bar(symmetrize(p.kernel));
  MomentReport r = second_moments_from(bar, p.kappa, p.rho, horizon, opts);
  r.intermittency = classify_intermittency(p);
  try {
    const auto a = second_moment_asymptote(p);
    r.asymptote = a.case_label + ": " + a.form.label;
  } catch (const Error& e) {
    r.asymptote = r.intermittency.verdict == Verdict::Intermittent ? "exponential growth" : e.what();
  }
  return r;
}

// p_crit such that E[u(t)^p] stays bounded for p < p_crit.
inline double critical_moment(double rho) {
  require(rho >= -1.0 && rho <= 1.0, ErrorCode::InvalidArgument, "rho must lie in [-1, 1]");
  if (rho == 1.0) return 1.0;
  if (rho == -1.0) return std::numeric_limits<double>::infinity();
  return M_PI / (M_PI / 2.0 + std::asin(rho));
}

enum class CheckStatus { Pass, Fail, Degenerate };

inline const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::Degenerate: return "degenerate";
  }
  return "?";
}

struct CheckOutcome {
  std::string name;
  CheckStatus status = CheckStatus::Pass;
  std::string detail;
  std::vector<double> measured;
};

struct Gamma2Report {
  LyapunovReport lyapunov;  // kappa on the model scale, rate = gamma2(kappa, rho)
  std::vector<CheckOutcome> checks;
};

namespace detail {

inline std::string join_numbers(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%.6g", i ? " " : "", v[i]);
    s += buf;
  }
  return s;
}

// |x - 1| shrinks toward the limit end, with one exception tolerated.
inline bool approaches_one(const std::vector<double>& toward_limit) {
  int violations = 0;
  for (std::size_t i = 1; i < toward_limit.size(); ++i) {
    if (std::abs(toward_limit[i] - 1.0) > std::abs(toward_limit[i - 1] - 1.0)) ++violations;
  }
  return violations <= 1;
}

}  // namespace detail

template <ReturnSource S>
Gamma2Report gamma2_curve_from(const S& p_bar, double rho, std::span<const double> kappas,
                               std::optional<TailParameters> tail) {
  require(rho > 0.0 && rho <= 1.0, ErrorCode::InvalidArgument, "gamma2 curves need rho in (0, 1]");
  require(kappas.size() >= 3, ErrorCode::InvalidArgument, "gamma2 curves need at least three kappa values");
  for (std::size_t i = 1; i < kappas.size(); ++i) {
    require(kappas[i] > kappas[i - 1], ErrorCode::InvalidArgument, "kappa grid must be increasing");
  }
  Gamma2Report out;
  std::vector<double> products;
  for (double k : kappas) products.push_back(k * rho);
  const auto base = lyapunov_report(p_bar, products, tail);
  out.lyapunov.kappa_cr = base.kappa_cr / rho;
  for (std::size_t i = 0; i < kappas.size(); ++i) {
    auto s = base.samples[i];
    s.kappa = kappas[i];
    out.lyapunov.samples.push_back(s);
  }
  const auto& smp = out.lyapunov.samples;

  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < smp.size(); ++i) {
    if (smp[i].regime == Regime::Supercritical) live.push_back(i);
  }

  {
    CheckOutcome c{"convexity", CheckStatus::Pass, "", {}};
    double scale = 0.0;
    for (auto i : live) scale = std::max(scale, smp[i].rate);
    bool any_negative = false, all_flat = true;
    for (std::size_t m = 1; m + 1 < live.size(); ++m) {
      const auto &a = smp[live[m - 1]], &b = smp[live[m]], &d = smp[live[m + 1]];
      const double s1 = (b.rate - a.rate) / (b.kappa - a.kappa);
      const double s2 = (d.rate - b.rate) / (d.kappa - b.kappa);
      const double second = 2.0 * (s2 - s1) / (d.kappa - a.kappa);
      c.measured.push_back(second);
      const double noise = 1e-8 * std::max(1.0, scale) / std::pow(d.kappa - a.kappa, 2);
      if (second < -noise) any_negative = true;
      if (second > noise) all_flat = false;
    }
    if (live.size() < 3) {
      c.status = CheckStatus::Degenerate;
      c.detail = "fewer than three supercritical points";
    } else if (any_negative) {
      c.status = CheckStatus::Fail;
      c.detail = "negative second difference";
    } else if (all_flat) {
      c.status = CheckStatus::Degenerate;
      c.detail = "second differences vanish (linear gamma2)";
    } else {
      bool strict = true;
      for (double v : c.measured) strict = strict && v > 0.0;
      c.status = strict ? CheckStatus::Pass : CheckStatus::Degenerate;
      c.detail = strict ? "strictly convex" : "some second differences vanish";
    }
    out.checks.push_back(c);
  }

  {
    CheckOutcome c{"bound", CheckStatus::Pass, "", {}};
    for (const auto& s : smp) {
      const double ratio = s.rate / (s.kappa * rho);
      c.measured.push_back(ratio);
      if (ratio > 1.0 + 1e-10) c.status = CheckStatus::Fail;
    }
    int drops = 0;
    for (std::size_t m = 1; m < live.size(); ++m) {
      const double r0 = c.measured[live[m - 1]], r1 = c.measured[live[m]];
      if (r1 < r0 - 1e-9) ++drops;
    }
    if (c.status == CheckStatus::Pass && drops > 0) c.status = CheckStatus::Fail;
    c.detail = "gamma2/(kappa rho) = " + detail::join_numbers(c.measured);
    out.checks.push_back(c);
  }

  {
    CheckOutcome c{"asymptotics", CheckStatus::Pass, "", {}};
    if (!tail || !(tail->c > 0.0)) {
      c.status = CheckStatus::Degenerate;
      c.detail = "no tail constants for the symmetrization";
    } else {
      // Ratios ordered toward the limit point: kappa -> 0 (recurrent) or kappa -> kappa_cr (transient).
      std::vector<double> ratios;
      for (auto it = live.rbegin(); it != live.rend(); ++it) {
        const auto& s = smp[*it];
        const double x = s.kappa * rho;
        if (detail::near(tail->alpha, 1.0)) {
          ratios.push_back(tail->c * x * std::log(s.rate) / -1.0);
        } else if (s.prediction && *s.prediction > 0.0) {
          ratios.push_back(s.rate / *s.prediction);
        }
      }
      c.measured = ratios;
      if (ratios.size() < 2) {
        c.status = CheckStatus::Degenerate;
        c.detail = "not enough supercritical points";
      } else {
        c.status = detail::approaches_one(ratios) ? CheckStatus::Pass : CheckStatus::Fail;
        c.detail = std::string(detail::near(tail->alpha, 1.0) ? "c kappa log(gamma2)/(-1)" : "gamma2/prediction") +
                   " toward the limit: " + detail::join_numbers(ratios);
      }
    }
    out.checks.push_back(c);
  }
  return out;
}

inline Gamma2Report gamma2_curve(const Kernel& kernel, double rho, std::span<const double> kappas) {
  const LatticeReturn bar(symmetrize(kernel));
  std::optional<TailParameters> tail;
  try {
    tail = symmetrized_tail(kernel);
  } catch (const Error&) {
  }
  return gamma2_curve_from(bar, rho, kappas, tail);
}

}  // namespace symbranch
