#pragma once

// Closed-form large-time and small-rate behaviour of g(t) = E[exp(kappa L_t)] for return
// functions with f(t) ~ c t^(-alpha).

#include <cmath>
#include <limits>
#include <string>

#include "symbranch/errors.hpp"

namespace symbranch {

namespace detail {

inline bool near(double a, double b) { return std::abs(a - b) <= 1e-12; }

inline void check_tail(double c, double alpha) {
  require(std::isfinite(c) && c > 0.0, ErrorCode::InvalidArgument, "tail constant c must be positive");
  require(std::isfinite(alpha) && alpha > 0.0, ErrorCode::InvalidArgument, "tail exponent alpha must be positive");
}

}  // namespace detail

struct RatePrediction {
  double value = 0.0;
  // For alpha = 1 only the exponent is known: value holds log r = -1/(c kappa).
  bool logarithmic = false;

  double rate() const { return logarithmic ? std::exp(value) : value; }
};

// Small-excess behaviour of the growth rate r(kappa) = f^-1(1/kappa).
inline RatePrediction rate_asymptotics(double c, double alpha, double kappa, double green, double green_t) {
  detail::check_tail(c, alpha);
  require(kappa > 0.0, ErrorCode::RegimeMismatch, "rate asymptotics need kappa > 0");
  if (alpha < 1.0 && !detail::near(alpha, 1.0)) {
    return {std::pow(c * kappa * std::tgamma(1.0 - alpha), 1.0 / (1.0 - alpha)), false};
  }
  if (detail::near(alpha, 1.0)) return {-1.0 / (c * kappa), true};

  require(std::isfinite(green) && green > 0.0, ErrorCode::RegimeMismatch, "alpha > 1 needs a finite G_inf");
  const double excess = kappa - 1.0 / green;
  require(excess > 0.0, ErrorCode::RegimeMismatch, "kappa must exceed the critical rate 1/G_inf");
  const double g2 = green * green;
  if (alpha < 2.0 && !detail::near(alpha, 2.0)) {
    return {std::pow(excess * g2 * (alpha - 1.0) / (c * std::tgamma(2.0 - alpha)), 1.0 / (alpha - 1.0)), false};
  }
  if (detail::near(alpha, 2.0)) {
    require(excess < 1.0, ErrorCode::RegimeMismatch, "alpha = 2 form needs kappa - kappa_cr < 1");
    return {(g2 / c) * excess / std::log(1.0 / excess), false};
  }
  require(std::isfinite(green_t) && green_t > 0.0, ErrorCode::RegimeMismatch, "alpha > 2 needs a finite H_inf");
  return {(g2 / green_t) * excess, false};
}

enum class SubexpRegime { Subcritical, Critical, Negative };

inline const char* to_string(SubexpRegime r) {
  switch (r) {
    case SubexpRegime::Subcritical: return "subcritical";
    case SubexpRegime::Critical: return "critical";
    case SubexpRegime::Negative: return "negative";
  }
  return "?";
}

// offset + constant * t^power * (log t)^log_power
struct AsymptoticForm {
  double offset = 0.0;
  double constant = 0.0;
  double power = 0.0;
  double log_power = 0.0;
  std::string label;

  double operator()(double t) const {
    double v = constant;
    if (power != 0.0) v *= std::pow(t, power);
    if (log_power != 0.0) v *= std::pow(std::log(t), log_power);
    return offset + v;
  }

  bool bounded() const { return power < 0.0 || (power == 0.0 && log_power <= 0.0); }
};

inline constexpr double kCriticalTolerance = 1e-6;

inline AsymptoticForm subexp_asymptotics(double c, double alpha, double kappa, double green, double green_t,
                                         SubexpRegime regime) {
  detail::check_tail(c, alpha);
  AsymptoticForm form;
  switch (regime) {
    case SubexpRegime::Subcritical: {
      require(kappa > 0.0, ErrorCode::RegimeMismatch, "subcritical regime needs kappa > 0");
      require(alpha > 1.0 && std::isfinite(green), ErrorCode::RegimeMismatch, "subcritical regime needs a finite G_inf");
      require(kappa * green < 1.0 - kCriticalTolerance, ErrorCode::RegimeMismatch, "subcritical regime needs kappa G_inf < 1");
      form.constant = 1.0 / (1.0 - kappa * green);
      form.label = "1/(1-kappa*G)";
      return form;
    }
    case SubexpRegime::Critical: {
      require(kappa > 0.0, ErrorCode::RegimeMismatch, "critical regime needs kappa > 0");
      require(alpha > 1.0 && std::isfinite(green), ErrorCode::RegimeMismatch, "critical regime needs a finite G_inf");
      require(std::abs(kappa * green - 1.0) <= kCriticalTolerance, ErrorCode::RegimeMismatch,
              "critical regime needs kappa = 1/G_inf");
      if (alpha < 2.0 && !detail::near(alpha, 2.0)) {
        form.constant = (alpha - 1.0) / (kappa * c * std::tgamma(2.0 - alpha) * std::tgamma(alpha));
        form.power = alpha - 1.0;
        form.label = "t^(alpha-1)*(alpha-1)/(kappa*c*Gamma(2-alpha)*Gamma(alpha))";
      } else if (detail::near(alpha, 2.0)) {
        form.constant = 1.0 / (kappa * c);
        form.power = 1.0;
        form.log_power = -1.0;
        form.label = "(t/log t)/(kappa*c)";
      } else {
        require(std::isfinite(green_t), ErrorCode::RegimeMismatch, "critical alpha > 2 needs a finite H_inf");
        form.constant = 1.0 / (kappa * green_t);
        form.power = 1.0;
        form.label = "t/(kappa*H)";
      }
      return form;
    }
    case SubexpRegime::Negative: {
      require(kappa < 0.0, ErrorCode::RegimeMismatch, "negative regime needs kappa < 0");
      if (alpha < 1.0 && !detail::near(alpha, 1.0)) {
        form.constant = 1.0 / (-kappa * c * std::tgamma(1.0 - alpha) * std::tgamma(alpha));
        form.power = alpha - 1.0;
        form.label = "t^(alpha-1)/(-kappa*c*Gamma(1-alpha)*Gamma(alpha))";
      } else if (detail::near(alpha, 1.0)) {
        form.constant = 1.0 / (-kappa * c);
        form.log_power = -1.0;
        form.label = "1/(-kappa*c*log t)";
      } else {
        require(std::isfinite(green), ErrorCode::RegimeMismatch, "negative alpha > 1 needs a finite G_inf");
        form.constant = 1.0 / (1.0 - kappa * green);
        form.label = "1/(1-kappa*G)";
      }
      return form;
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown regime");
}

}  // namespace symbranch
