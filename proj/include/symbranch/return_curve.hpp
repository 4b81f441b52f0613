#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include "symbranch/interpolation.hpp"

#include "symbranch/errors.hpp"
#include "symbranch/kernel.hpp"
#include "symbranch/lattice.hpp"

namespace symbranch {

enum class WalkKind { Base, Symmetrization };

inline const char* to_string(WalkKind k) { return k == WalkKind::Base ? "base" : "symmetrization"; }

inline void validate_grid(const std::vector<double>& t) {
  require(t.size() >= 4, ErrorCode::InvalidArgument, "time grid needs at least 4 points");
  require(t.front() == 0.0, ErrorCode::InvalidArgument, "time grid must start at 0");
  for (std::size_t i = 1; i < t.size(); ++i) {
    require(std::isfinite(t[i]) && t[i] > t[i - 1], ErrorCode::InvalidArgument,
            "time grid must be finite and strictly increasing");
  }
}

inline std::vector<double> uniform_grid(double t_end, std::size_t intervals) {
  require(t_end > 0.0 && intervals >= 1, ErrorCode::InvalidArgument, "bad uniform grid");
  std::vector<double> t(intervals + 1);
  for (std::size_t i = 0; i <= intervals; ++i) t[i] = t_end * double(i) / double(intervals);
  return t;
}

// 0 followed by points uniform on [0, t_first] and geometric on [t_first, t_end].
inline std::vector<double> geometric_grid(double t_end, std::size_t per_decade, double t_first = 0.5) {
  require(t_end > t_first && t_first > 0.0 && per_decade >= 1, ErrorCode::InvalidArgument, "bad geometric grid");
  std::vector<double> t{0.0};
  const std::size_t head = 8;
  for (std::size_t i = 1; i < head; ++i) t.push_back(t_first * double(i) / double(head));
  const double decades = std::log10(t_end / t_first);
  const auto n = std::size_t(std::ceil(decades * double(per_decade)));
  for (std::size_t i = 0; i <= n; ++i) t.push_back(t_first * std::pow(t_end / t_first, double(i) / double(n)));
  t.back() = t_end;
  return t;
}

// Least-squares fit of log p = log c - alpha log t over the last decade of the grid.
inline TailAsymptote fit_tail(const std::vector<double>& t, const std::vector<double>& p,
                              std::optional<double> fixed_alpha = std::nullopt) {
  const double t_max = t.back();
  std::vector<double> x, y;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] >= t_max / 10.0 && t[i] > 0.0 && p[i] > 0.0) {
      x.push_back(std::log(t[i]));
      y.push_back(std::log(p[i]));
    }
  }
  require(x.size() >= 2, ErrorCode::InvalidArgument, "tail fit needs two points in the last decade");
  const double n = double(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / n, my += y[i] / n;
  TailAsymptote tail;
  if (fixed_alpha) {
    tail.alpha = *fixed_alpha;
    tail.alpha_analytic = true;
  } else {
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) sxx += (x[i] - mx) * (x[i] - mx), sxy += (x[i] - mx) * (y[i] - my);
    tail.alpha = -sxy / sxx;
  }
  const double log_c = my + tail.alpha * mx;
  tail.c = std::exp(log_c);
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (log_c - tail.alpha * x[i]);
    ss += r * r;
  }
  tail.fit_residual = std::sqrt(ss / n);
  return tail;
}

// Sampled p_t(0,0) with monotone cubic interpolation and a power-law continuation past the grid.
class ReturnCurve {
 public:
  ReturnCurve(std::vector<double> t, std::vector<double> p, std::optional<TailAsymptote> tail,
              WalkKind kind, double tolerance)
      : t_(std::move(t)), p_(std::move(p)), tail_(tail), kind_(kind), tolerance_(tolerance) {
    validate_grid(t_);
    require(p_.size() == t_.size(), ErrorCode::InvalidArgument, "curve values do not match grid");
    require(std::abs(p_.front() - 1.0) <= 1e-12, ErrorCode::InvalidArgument, "p_0 must equal 1");
    for (double v : p_) require(v > 0.0 && v <= 1.0 + 1e-12, ErrorCode::InvalidArgument, "p_t out of (0,1]");
    auto x = t_;
    auto y = p_;
    interp_ = std::make_shared<const Interpolant>(std::move(x), std::move(y));
  }

  const std::vector<double>& times() const noexcept { return t_; }
  const std::vector<double>& values() const noexcept { return p_; }
  const std::optional<TailAsymptote>& tail() const noexcept { return tail_; }
  WalkKind kind() const noexcept { return kind_; }
  double tolerance() const noexcept { return tolerance_; }
  double horizon() const noexcept { return t_.back(); }

  double operator()(double t) const {
    require(t >= 0.0, ErrorCode::InvalidArgument, "negative time");
    if (t <= t_.back()) return (*interp_)(t);
    require(tail_.has_value(), ErrorCode::InvalidArgument, "time beyond curve horizon and no tail attached");
    return p_.back() * std::pow(t / t_.back(), -tail_->alpha);
  }

 private:
  using Interpolant = MonotoneCubic;

  std::vector<double> t_;
  std::vector<double> p_;
  std::optional<TailAsymptote> tail_;
  WalkKind kind_;
  double tolerance_;
  std::shared_ptr<const Interpolant> interp_;
};

// Tail of p_t(0,0) at the requested total rate: analytic where known, fitted otherwise.
inline std::optional<TailAsymptote> scaled_analytic_tail(const Kernel& k, std::optional<double> total_rate) {
  auto tail = k.analytic_tail();
  if (tail && total_rate && std::isfinite(tail->c)) tail->c *= std::pow(*total_rate / k.total_rate(), -tail->alpha);
  return tail;
}

inline ReturnCurve return_curve(const Kernel& k, const std::vector<double>& grid,
                                std::optional<double> total_rate = std::nullopt, QuadratureOptions opts = {}) {
  validate_grid(grid);
  ReturnProbability p(k, total_rate, opts);
  std::vector<double> values(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) values[i] = p(grid[i]);
  std::optional<TailAsymptote> tail = scaled_analytic_tail(k, total_rate);
  if (!tail) {
    tail = fit_tail(grid, values);
  } else if (!tail->c_analytic) {
    const auto fitted = fit_tail(grid, values, tail->alpha);
    tail->c = fitted.c;
    tail->fit_residual = fitted.fit_residual;
  }
  return ReturnCurve(grid, std::move(values), tail,
                     k.symmetrizations() > 0 ? WalkKind::Symmetrization : WalkKind::Base,
                     p.tolerance());
}

}  // namespace symbranch
