#pragma once

// Exponential growth rate r(kappa) of g(t) = E[exp(kappa L_t)]: the root of f^(lambda) = 1/kappa,
// zero when kappa <= 1/G_inf.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "symbranch/asymptotics.hpp"
#include "symbranch/errors.hpp"
#include "symbranch/return_source.hpp"

namespace symbranch {

inline constexpr double kRateBracketFloor = 1e-14;

template <ReturnSource S>
double lyapunov_rate(const S& f, double kappa, double rel_tol = 1e-10) {
  require(kappa > 0.0 && std::isfinite(kappa), ErrorCode::InvalidArgument, "growth rate needs kappa > 0");
  const double green = f.green();
  if (std::isfinite(green) && kappa * green <= 1.0) return 0.0;

  auto transform = [&](double lambda) {
    if constexpr (HasFastLaplace<S>) return f.laplace_fast(lambda);
    else return f.laplace(lambda);
  };
  const double target = 1.0 / kappa;
  auto excess = [&](double lambda) { return transform(lambda) - target; };

  // 0 < r <= kappa because f <= 1.
  double hi = kappa;
  double f_hi = excess(hi);
  if (f_hi >= 0.0) return hi;
  double lo = kRateBracketFloor;
  double f_lo = excess(lo);
  while (f_lo <= 0.0 && lo > 1e-300) {
    hi = lo;
    f_hi = f_lo;
    lo *= 1e-4;
    f_lo = excess(lo);
  }
  if (f_lo <= 0.0) return lo;

  std::uintmax_t iterations = 200;
  auto tol = [rel_tol](double a, double b) { return std::abs(b - a) <= rel_tol * std::min(std::abs(a), std::abs(b)); };
  const auto [a, b] = boost::math::tools::toms748_solve(excess, lo, hi, f_lo, f_hi, tol, iterations);
  return 0.5 * (a + b);
}

// Growth rate for a lattice walk; total_rate rescales the jump rates (2 for the symmetrization).
inline double lyapunov_rate(const Kernel& k, double kappa, std::optional<double> total_rate = std::nullopt) {
  return lyapunov_rate(LatticeReturn(k, total_rate), kappa);
}

enum class Regime { Subcritical, Critical, Supercritical };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::Subcritical: return "subcritical";
    case Regime::Critical: return "critical";
    case Regime::Supercritical: return "supercritical";
  }
  return "?";
}

inline Regime classify_rate(double kappa, double green) {
  if (!std::isfinite(green)) return kappa > 0.0 ? Regime::Supercritical : Regime::Subcritical;
  const double x = kappa * green;
  if (std::abs(x - 1.0) <= 1e-9) return Regime::Critical;
  return x > 1.0 ? Regime::Supercritical : Regime::Subcritical;
}

// Power-tail data of the return function used for closed-form predictions.
struct TailParameters {
  double c = 0.0;
  double alpha = 0.0;
  double green = std::numeric_limits<double>::infinity();
  double green_t = std::numeric_limits<double>::infinity();
};

struct LyapunovSample {
  double kappa = 0.0;
  double rate = 0.0;
  Regime regime = Regime::Subcritical;
  std::optional<double> prediction;
};

struct LyapunovReport {
  double kappa_cr = 0.0;
  std::vector<LyapunovSample> samples;
};

inline std::optional<double> predicted_rate(const TailParameters& tail, double kappa) {
  if (!(tail.c > 0.0) || !std::isfinite(tail.c)) return std::nullopt;
  if (std::isfinite(tail.green) && kappa * tail.green <= 1.0) return 0.0;
  try {
    return rate_asymptotics(tail.c, tail.alpha, kappa, tail.green, tail.green_t).rate();
  } catch (const Error&) {
    return std::nullopt;
  }
}

template <ReturnSource S>
LyapunovReport lyapunov_report(const S& f, std::span<const double> kappas, std::optional<TailParameters> tail = std::nullopt) {
  LyapunovReport report;
  const double green = f.green();
  report.kappa_cr = std::isfinite(green) ? 1.0 / green : 0.0;
  for (double kappa : kappas) {
    LyapunovSample s;
    s.kappa = kappa;
    s.rate = lyapunov_rate(f, kappa);
    s.regime = classify_rate(kappa, green);
    if (tail) s.prediction = predicted_rate(*tail, kappa);
    report.samples.push_back(s);
  }
  return report;
}

}  // namespace symbranch
