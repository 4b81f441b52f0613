#pragma once

// Two-time correlations cor[u(t,k), u(t+s,k)] for homogeneous initial data and symmetric
// kernels:
//   cov(t, s) = kappa int_0^t p_{2r+s} m(t-r) dr,   cor = cov(t,s) / sqrt(cov(t,0) cov(t+s,0))
// with p the base-walk return probability and m(t) = E[f(u(t,k))] of the model.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "symbranch/asymptotics.hpp"
#include "symbranch/errors.hpp"
#include "symbranch/io.hpp"
#include "symbranch/kernel.hpp"
#include "symbranch/lattice.hpp"
#include "symbranch/moments.hpp"
#include "symbranch/return_curve.hpp"
#include "symbranch/volterra.hpp"

namespace symbranch {

struct Symbiotic {
  double rho = 0.0;
};
struct Anderson {};
struct BoundedDiffusion {
  double lower = 1.0;
  double upper = 1.0;
};
struct SuperRandomWalk {};
struct SteppingStone {
  double w = 0.5;
};

using DiffusionModel = std::variant<Symbiotic, Anderson, BoundedDiffusion, SuperRandomWalk, SteppingStone>;

inline std::string model_name(const DiffusionModel& m) {
  struct {
    std::string operator()(const Symbiotic& s) const { return "symbiotic(rho=" + format_double(s.rho) + ")"; }
    std::string operator()(const Anderson&) const { return "anderson"; }
    std::string operator()(const BoundedDiffusion& b) const {
      return "bounded(" + format_double(b.lower) + "," + format_double(b.upper) + ")";
    }
    std::string operator()(const SuperRandomWalk&) const { return "superRW"; }
    std::string operator()(const SteppingStone& s) const { return "steppingstone(w=" + format_double(s.w) + ")"; }
  } visit;
  return std::visit(visit, m);
}

inline void validate_model(const DiffusionModel& m) {
  if (auto* s = std::get_if<Symbiotic>(&m)) {
    require(s->rho >= -1.0 && s->rho <= 1.0, ErrorCode::InvalidArgument, "rho must lie in [-1, 1]");
  } else if (auto* b = std::get_if<BoundedDiffusion>(&m)) {
    require(b->lower > 0.0 && b->upper >= b->lower && std::isfinite(b->upper), ErrorCode::InvalidArgument,
            "bounded model needs 0 < lower <= upper");
  } else if (auto* w = std::get_if<SteppingStone>(&m)) {
    require(w->w > 0.0 && w->w < 1.0, ErrorCode::InvalidArgument, "stepping stone needs w in (0, 1)");
  }
}

// Sign class of the aging theorem each model falls under.
enum class AgingRegime { Positive, Zero, Negative };

inline const char* to_string(AgingRegime r) {
  switch (r) {
    case AgingRegime::Positive: return "rho>0";
    case AgingRegime::Zero: return "rho=0";
    case AgingRegime::Negative: return "rho<0";
  }
  return "?";
}

inline AgingRegime aging_regime(const DiffusionModel& m) {
  if (auto* s = std::get_if<Symbiotic>(&m)) {
    return s->rho > 0.0 ? AgingRegime::Positive : s->rho < 0.0 ? AgingRegime::Negative : AgingRegime::Zero;
  }
  if (std::holds_alternative<Anderson>(m)) return AgingRegime::Positive;
  if (std::holds_alternative<SteppingStone>(m)) return AgingRegime::Negative;
  return AgingRegime::Zero;
}

struct AgingOptions {
  double exact_limit = 1e4;        // beyond this t the base return probability switches to c t^(-alpha)
  double crossover_tolerance = 0.01;
  double moment_horizon = 200.0;   // decaying m solved up to here, then continued by its asymptote
  double growth_horizon = 5000.0;  // exponentially growing m cannot be continued
  std::size_t max_cells = 20000;
};

// t -> m(t) as solved on [0, horizon] and optionally continued past the splice point.
class MomentFunction {
 public:
  MomentFunction() = default;
  MomentFunction(double constant, std::string label) : constant_(constant), label_(std::move(label)) {}
  MomentFunction(std::shared_ptr<const MomentCurve> curve, double prefactor, std::optional<AsymptoticForm> tail,
                 std::string label)
      : constant_(prefactor), curve_(std::move(curve)), tail_(std::move(tail)), label_(std::move(label)) {}

  double operator()(double t) const {
    if (!curve_) return constant_;
    if (t <= curve_->horizon()) return constant_ * (*curve_)(t);
    require(tail_.has_value(), ErrorCode::InvalidArgument,
            "moment function requested at t = " + format_double(t) + " beyond its horizon");
    const double at_splice = curve_->back();
    return constant_ * at_splice * (*tail_)(t) / (*tail_)(curve_->horizon());
  }

  bool constant() const noexcept { return !curve_; }
  std::optional<double> splice() const {
    if (curve_ && tail_) return curve_->horizon();
    return std::nullopt;
  }
  double horizon() const {
    if (!curve_ || tail_) return std::numeric_limits<double>::infinity();
    return curve_->horizon();
  }
  const std::string& label() const noexcept { return label_; }
  const MomentCurve* curve() const noexcept { return curve_.get(); }

 private:
  double constant_ = 1.0;
  std::shared_ptr<const MomentCurve> curve_;
  std::optional<AsymptoticForm> tail_;
  std::string label_;
};

namespace detail {

inline MomentFunction exponential_moment(const Kernel& k, double x, double horizon, double prefactor,
                                         const AgingOptions& opts, std::string label) {
  if (x == 0.0) return MomentFunction(prefactor, std::move(label));
  const LatticeReturn bar(symmetrize(k));
  std::optional<AsymptoticForm> tail;
  double solve_to = horizon;
  if (x < 0.0) {
    solve_to = std::min(horizon, opts.moment_horizon);
    if (solve_to < horizon) {
      const auto tp = symmetrized_tail(k);
      tail = subexp_asymptotics(tp.c, tp.alpha, x, tp.green, tp.green_t, SubexpRegime::Negative);
    }
  } else {
    require(horizon <= opts.growth_horizon, ErrorCode::InvalidArgument,
            "exponentially growing moments are only solved up to t = " + format_double(opts.growth_horizon));
  }
  solve_to = std::max(solve_to, 1.0);
  VolterraOptions vo;
  vo.step = std::max(default_step(x, solve_to), solve_to / double(opts.max_cells));
  vo.residual = false;
  auto curve = std::make_shared<const MomentCurve>(volterra_solve(bar, x, solve_to, vo, "symmetrization"));
  return MomentFunction(std::move(curve), prefactor, tail, std::move(label));
}

}  // namespace detail

// m(t) = E[f(u(t,k))] for the model's second-moment test function, on [0, horizon].
inline MomentFunction moment_function(const DiffusionModel& model, const Kernel& k, double kappa, double horizon,
                                      const AgingOptions& opts = {}) {
  validate_model(model);
  require(kappa > 0.0 && std::isfinite(kappa), ErrorCode::InvalidArgument, "kappa must be > 0");
  require(horizon > 0.0, ErrorCode::InvalidArgument, "horizon must be positive");
  if (auto* s = std::get_if<Symbiotic>(&model)) {
    return detail::exponential_moment(k, kappa * s->rho, horizon, 1.0, opts, "g(kappa*rho)");
  }
  if (std::holds_alternative<Anderson>(model)) {
    return detail::exponential_moment(k, kappa, horizon, 1.0, opts, "g(kappa)");
  }
  if (auto* w = std::get_if<SteppingStone>(&model)) {
    return detail::exponential_moment(k, -kappa, horizon, w->w - w->w * w->w, opts, "(w-w^2)*g(-kappa)");
  }
  if (auto* b = std::get_if<BoundedDiffusion>(&model)) return MomentFunction(b->upper, "upper envelope");
  return MomentFunction(1.0, "1");
}

// Base-walk return probability: exact for u <= crossover, c u^(-alpha) beyond.
class HybridReturn {
 public:
  HybridReturn(const Kernel& k, bool asymptotic, const AgingOptions& opts = {}) : p_(k) {
    if (!asymptotic) return;
    auto tail = k.analytic_tail();
    if (!tail || !tail->c_analytic) tail = return_curve(k, geometric_grid(opts.exact_limit, 20)).tail();
    c_ = tail->c;
    alpha_ = tail->alpha;
    // Smallest grid point from which exact and asymptotic stay within the tolerance.
    const auto grid = geometric_grid(opts.exact_limit, 20, 1.0);
    crossover_ = opts.exact_limit;
    for (auto it = grid.rbegin(); it != grid.rend() && *it >= 1.0; ++it) {
      const double ratio = p_(*it) / (c_ * std::pow(*it, -alpha_));
      if (std::abs(ratio - 1.0) > opts.crossover_tolerance) break;
      crossover_ = *it;
    }
    asymptotic_ = true;
  }

  double operator()(double u) const {
    if (asymptotic_ && u > crossover_) return c_ * std::pow(u, -alpha_);
    return p_(u);
  }

  bool asymptotic() const noexcept { return asymptotic_; }
  std::optional<double> crossover() const {
    if (asymptotic_) return crossover_;
    return std::nullopt;
  }

 private:
  ReturnProbability p_;
  bool asymptotic_ = false;
  double c_ = 0.0, alpha_ = 0.0;
  double crossover_ = std::numeric_limits<double>::infinity();
};

namespace detail {

// Breakpoints on [0, t]: geometric toward both ends plus the caller's kinks.
inline std::vector<double> correlation_breaks(double t, std::vector<double> kinks) {
  std::vector<double> b{0.0, t};
  for (double d = 0.25; d < t; d *= 4.0) {
    b.push_back(d);
    b.push_back(t - d);
  }
  for (double k : kinks) {
    if (k > 0.0 && k < t) b.push_back(k);
  }
  std::sort(b.begin(), b.end());
  std::vector<double> out;
  for (double x : b) {
    if (out.empty() || x - out.back() > 1e-12 * std::max(1.0, t)) out.push_back(x);
  }
  out.back() = t;
  return out;
}

}  // namespace detail

// kappa int_0^t p(2r+s) m(t-r) dr for callables p and m.
template <class P, class M>
double covariance_integral(const P& p, const M& m, double kappa, double t, double s, std::vector<double> kinks = {}) {
  require(t >= 0.0 && s >= 0.0, ErrorCode::InvalidArgument, "times must be nonnegative");
  if (t == 0.0) return 0.0;
  using Rule = boost::math::quadrature::gauss<double, 20>;
  std::vector<double> r_kinks;
  for (double u : kinks) {
    r_kinks.push_back((u - s) / 2.0);  // 2r+s = u
    r_kinks.push_back(t - u);         // t-r = u
  }
  const auto b = detail::correlation_breaks(t, r_kinks);
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < b.size(); ++i) {
    sum += Rule::integrate([&](double r) { return p(2.0 * r + s) * m(t - r); }, b[i], b[i + 1]);
  }
  return kappa * sum;
}

template <class P, class M>
double correlation_from(const P& p, const M& m, double t, double s, std::vector<double> kinks = {}) {
  require(t > 0.0 && s >= 0.0, ErrorCode::InvalidArgument, "correlation needs t > 0 and s >= 0");
  const double num = covariance_integral(p, m, 1.0, t, s, kinks);
  const double v1 = s == 0.0 ? num : covariance_integral(p, m, 1.0, t, 0.0, kinks);
  const double v2 = s == 0.0 ? num : covariance_integral(p, m, 1.0, t + s, 0.0, kinks);
  require(v1 > 0.0 && v2 > 0.0, ErrorCode::InvalidArgument, "variance integrals must be positive");
  return num / std::sqrt(v1 * v2);
}

enum class AgingScaling { Linear, Logarithmic };  // s = a t, or log s / log t = a

inline const char* to_string(AgingScaling s) { return s == AgingScaling::Linear ? "s=a*t" : "log s/log t=a"; }

inline double lag_for(AgingScaling scaling, double a, double t) {
  require(a >= 0.0 && t > 0.0, ErrorCode::InvalidArgument, "scaling needs a >= 0 and t > 0");
  return scaling == AgingScaling::Linear ? a * t : std::pow(t, a);
}

struct AgingQuery {
  Kernel kernel;
  DiffusionModel model = Symbiotic{0.0};
  double kappa = 1.0;
  double t = 1.0;
  double s = 0.0;
};

struct CorrelationValue {
  double value = 0.0;
  double lower = 0.0;  // envelope for bounded models, else equal to value
  double upper = 0.0;
  std::string path;    // exact | asymptotic
  std::optional<double> crossover;
  std::optional<double> splice;
};

inline CorrelationValue correlation(const AgingQuery& q, const AgingOptions& opts = {}) {
  require(q.kernel.symmetric(), ErrorCode::AsymmetricKernel, "aging correlations need a symmetric kernel");
  require(q.t > 0.0 && q.s >= 0.0, ErrorCode::InvalidArgument, "correlation needs t > 0 and s >= 0");
  const bool asymptotic = q.t > opts.exact_limit;
  const HybridReturn p(q.kernel, asymptotic, opts);
  const auto m = moment_function(q.model, q.kernel, q.kappa, q.t + q.s, opts);
  std::vector<double> kinks;
  if (auto c = p.crossover()) kinks.push_back(*c);
  if (auto sp = m.splice()) kinks.push_back(*sp);

  CorrelationValue out;
  out.value = q.s == 0.0 ? 1.0 : correlation_from(p, m, q.t, q.s, kinks);
  out.lower = out.upper = out.value;
  if (auto* b = std::get_if<BoundedDiffusion>(&q.model)) {
    out.lower = out.value * b->lower / b->upper;
    out.upper = std::min(1.0, out.value * b->upper / b->lower);
  }
  out.path = asymptotic ? "asymptotic" : "exact";
  out.crossover = p.crossover();
  out.splice = m.splice();
  return out;
}

// Large-t limit of the correlation in the given regime for return exponent alpha.
inline double aging_limit(AgingRegime regime, double alpha, AgingScaling scaling, double a) {
  require(alpha > 0.0 && a >= 0.0, ErrorCode::InvalidArgument, "aging limit needs alpha > 0 and a >= 0");
  if (regime == AgingRegime::Positive) return 0.0;
  if (alpha > 1.0 && !detail::near(alpha, 1.0)) return 0.0;
  if (detail::near(alpha, 1.0)) {
    require(scaling == AgingScaling::Logarithmic, ErrorCode::RegimeMismatch, "alpha = 1 aging uses log s/log t = a");
    return std::max(0.0, 1.0 - a);
  }
  require(scaling == AgingScaling::Linear, ErrorCode::RegimeMismatch, "alpha < 1 aging uses s = a t");
  if (regime == AgingRegime::Zero) {
    const double e = 1.0 - alpha;
    if (a == 0.0) return 1.0;
    return (std::pow(1.0 + a / 2.0, e) - std::pow(a / 2.0, e)) / std::pow(1.0 + a, e / 2.0);
  }
  // r = 1 - z^(1/alpha) turns (1-r)^(alpha-1) dr into dz/alpha. Near z = 1 the integrator's
  // complement 1 - z keeps r accurate where (2r)^(-alpha) is singular.
  boost::math::quadrature::tanh_sinh<double> integrator;
  const double integral = integrator.integrate(
      [&](double z, double zc) {
        const double one_minus_z = z > 0.5 ? zc : 1.0 - z;
        const double r = -std::expm1(std::log1p(-one_minus_z) / alpha);
        return std::pow(2.0 * r + a, -alpha);
      },
      0.0, 1.0) / alpha;
  return integral / (std::pow(2.0, -alpha) * std::tgamma(alpha) * std::tgamma(1.0 - alpha));
}

struct AgingRow {
  double t = 0.0, s = 0.0, a = 0.0;
  double numeric = 0.0, lower = 0.0, upper = 0.0;
  std::optional<double> limit;
  double deviation = std::numeric_limits<double>::quiet_NaN();
  std::string path;
};

struct AgingReport {
  std::string model;
  AgingRegime regime = AgingRegime::Zero;
  AgingScaling scaling = AgingScaling::Linear;
  double alpha = 0.0;
  std::vector<AgingRow> rows;
  // Per a: deviations shrink along the t list (one exception tolerated).
  std::vector<std::pair<double, bool>> trend;

  bool passed() const {
    return std::all_of(trend.begin(), trend.end(), [](const auto& p) { return p.second; });
  }

  std::string csv() const {
    CsvTable table({"t", "s", "a", "numeric", "limit", "deviation", "path"});
    table.comment("model " + model + ", " + to_string(regime) + ", alpha " + format_double(alpha) + ", " +
                  to_string(scaling));
    for (const auto& [a, ok] : trend) {
      table.comment("a " + format_double(a) + ": deviation " + (ok ? "decreasing" : "not decreasing") + " along t");
    }
    for (const auto& r : rows) {
      table.row({format_double(r.t), format_double(r.s), format_double(r.a), format_double(r.numeric),
                 r.limit ? format_double(*r.limit) : "nan", format_double(r.deviation), r.path});
    }
    return table.str();
  }
};

inline AgingReport aging_sweep(const Kernel& k, const DiffusionModel& model, double kappa, AgingScaling scaling,
                               const std::vector<double>& a_list, const std::vector<double>& t_list,
                               const AgingOptions& opts = {}) {
  require(k.symmetric(), ErrorCode::AsymmetricKernel, "aging sweeps need a symmetric kernel");
  auto tail = k.analytic_tail();
  require(tail.has_value(), ErrorCode::InvalidArgument, "aging sweeps need a kernel with a known return exponent");
  AgingReport rep;
  rep.model = model_name(model);
  rep.regime = aging_regime(model);
  rep.scaling = scaling;
  rep.alpha = tail->alpha;
  for (double a : a_list) {
    std::optional<double> limit;
    // Bounded models only carry envelopes; no limit is asserted.
    if (!std::holds_alternative<BoundedDiffusion>(model)) {
      try {
        limit = aging_limit(rep.regime, rep.alpha, scaling, a);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::RegimeMismatch) throw;
      }
    }
    std::vector<double> devs;
    for (double t : t_list) {
      AgingRow row;
      row.t = t;
      row.a = a;
      row.s = lag_for(scaling, a, t);
      const auto c = correlation(AgingQuery{k, model, kappa, t, row.s}, opts);
      row.numeric = c.value;
      row.lower = c.lower;
      row.upper = c.upper;
      row.path = c.path;
      row.limit = limit;
      if (limit) {
        row.deviation = std::abs(c.value - *limit);
        devs.push_back(row.deviation);
      }
      rep.rows.push_back(row);
    }
    if (devs.size() >= 2) {
      int violations = 0;
      for (std::size_t i = 1; i < devs.size(); ++i) {
        if (devs[i] > devs[i - 1]) ++violations;
      }
      rep.trend.emplace_back(a, violations <= 1 && devs.back() < devs.front());
    }
  }
  return rep;
}

}  // namespace symbranch
