#pragma once

// g(t) = 1 + kappa int_0^t f(r) g(t - r) dr on a uniform grid.
//
// Product trapezoidal marching: g is linear between grid points and f is integrated exactly
// against the two hat functions of each cell, so a rapidly varying f near 0 costs nothing in
// accuracy. The newest value g_n enters through the first cell only and is solved for implicitly.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <memory>
#include <string>
#include <vector>

#include "symbranch/interpolation.hpp"

#include "symbranch/errors.hpp"
#include "symbranch/quadrature.hpp"
#include "symbranch/return_source.hpp"

namespace symbranch {

struct VolterraOptions {
  double step = 0.0;  // 0 picks min(0.01/|kappa|, T/1000)
  bool richardson = true;
  bool residual = true;
};

class MomentCurve {
 public:
  MomentCurve() = default;
  MomentCurve(std::vector<double> t, std::vector<double> g, std::vector<double> residual, std::vector<double> error,
              double kappa, double step, std::string provenance)
      : t_(std::move(t)), g_(std::move(g)), residual_(std::move(residual)), error_(std::move(error)),
        kappa_(kappa), step_(step), provenance_(std::move(provenance)) {
    require(t_.size() >= 4 && t_.size() == g_.size(), ErrorCode::InvalidArgument, "moment curve needs >= 4 points");
    auto x = t_;
    auto y = g_;
    interp_ = std::make_shared<const Interpolant>(std::move(x), std::move(y));
  }

  const std::vector<double>& times() const noexcept { return t_; }
  const std::vector<double>& values() const noexcept { return g_; }
  const std::vector<double>& residuals() const noexcept { return residual_; }
  const std::vector<double>& errors() const noexcept { return error_; }
  double kappa() const noexcept { return kappa_; }
  double step() const noexcept { return step_; }
  const std::string& provenance() const noexcept { return provenance_; }
  double horizon() const noexcept { return t_.back(); }
  double back() const noexcept { return g_.back(); }

  double operator()(double t) const {
    require(t >= 0.0 && t <= t_.back() * (1.0 + 1e-12), ErrorCode::InvalidArgument,
            "time " + std::to_string(t) + " outside solved horizon");
    return (*interp_)(std::min(t, t_.back()));
  }

  double max_error() const { return error_.empty() ? 0.0 : *std::max_element(error_.begin(), error_.end()); }
  double max_residual() const {
    double m = 0.0;
    for (double r : residual_) m = std::max(m, std::abs(r));
    return m;
  }

 private:
  using Interpolant = MonotoneCubic;

  std::vector<double> t_, g_, residual_, error_;
  double kappa_ = 0.0;
  double step_ = 0.0;
  std::string provenance_;
  std::shared_ptr<const Interpolant> interp_;
};

inline double default_step(double kappa, double horizon) {
  double h = horizon / 1000.0;
  if (kappa != 0.0) h = std::min(h, 0.01 / std::abs(kappa));
  return h;
}

namespace detail {

// Cell moments from samples at spacing h/2 (Simpson on each cell, exact for cubic f).
inline CellMoments simpson_moments(const std::vector<double>& samples, std::size_t stride, double h, std::size_t cells) {
  CellMoments m{std::vector<double>(cells), std::vector<double>(cells)};
  for (std::size_t j = 0; j < cells; ++j) {
    const double f0 = samples[2 * stride * j];
    const double fm = samples[2 * stride * j + stride];
    const double f1 = samples[2 * stride * (j + 1)];
    m.zeroth[j] = h * (f0 + 4.0 * fm + f1) / 6.0;
    m.first[j] = h * h * (2.0 * fm + f1) / 6.0;
  }
  return m;
}

inline std::vector<double> march(const CellMoments& m, double h, double kappa) {
  const std::size_t n_cells = m.zeroth.size();
  std::vector<double> a(n_cells), b(n_cells);
  for (std::size_t j = 0; j < n_cells; ++j) {
    b[j] = m.first[j] / h;
    a[j] = m.zeroth[j] - b[j];
  }
  const double diagonal = 1.0 - kappa * a[0];
  if (!(diagonal > 0.0)) {
    fail(ErrorCode::StepTooLarge, "implicit diagonal 1 - kappa*w0 = " + std::to_string(diagonal) +
                                      " is not positive; reduce the step");
  }
  // w[k] multiplies g_{n-k} for 1 <= k <= n-1.
  std::vector<double> w(n_cells, 0.0);
  for (std::size_t k = 1; k < n_cells; ++k) w[k] = a[k] + b[k - 1];

  std::vector<double> g(n_cells + 1);
  g[0] = 1.0;
  for (std::size_t n = 1; n <= n_cells; ++n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    const double* gp = g.data();
    std::size_t k = 1;
    for (; k + 3 < n; k += 4) {
      s0 += w[k] * gp[n - k];
      s1 += w[k + 1] * gp[n - k - 1];
      s2 += w[k + 2] * gp[n - k - 2];
      s3 += w[k + 3] * gp[n - k - 3];
    }
    for (; k < n; ++k) s0 += w[k] * gp[n - k];
    const double history = (s0 + s1) + (s2 + s3) + b[n - 1] * g[0];
    g[n] = (1.0 + kappa * history) / diagonal;
  }
  return g;
}

// g_n - 1 - kappa int_0^{t_n} f(r) g(t_n - r) dr with Simpson on the output grid.
inline std::vector<double> renewal_residual(const std::vector<double>& f, const std::vector<double>& g, double h,
                                            double kappa) {
  std::vector<double> r(g.size(), 0.0);
  std::vector<double> y(g.size());
  for (std::size_t n = 1; n < g.size(); ++n) {
    for (std::size_t k = 0; k <= n; ++k) y[k] = f[k] * g[n - k];
    r[n] = g[n] - 1.0 - kappa * quad::simpson(y.data(), n, h);
  }
  return r;
}

template <class F>
std::vector<double> sample_source(const F& f, double step, std::size_t count) {
  if constexpr (HasSampler<F>) {
    return f.sample(step, count);
  } else {
    std::vector<double> out(count + 1);
    for (std::size_t k = 0; k <= count; ++k) out[k] = f(step * double(k));
    return out;
  }
}

}  // namespace detail

template <class F>
  requires std::invocable<const F&, double>
MomentCurve volterra_solve(const F& f, double kappa, double horizon, VolterraOptions opts = {},
                           std::string provenance = "callable") {
  require(std::isfinite(kappa), ErrorCode::InvalidArgument, "kappa must be finite");
  require(horizon > 0.0 && std::isfinite(horizon), ErrorCode::InvalidArgument, "horizon must be positive");
  double h = opts.step > 0.0 ? opts.step : default_step(kappa, horizon);
  require(h <= horizon, ErrorCode::InvalidArgument, "step exceeds horizon");
  // The grid must end exactly at the horizon.
  const std::size_t cells = std::max<std::size_t>(3, std::size_t(std::ceil(horizon / h - 1e-9)));
  h = horizon / double(cells);

  std::vector<double> coarse, fine, f_grid;
  if constexpr (HasCellMoments<F>) {
    coarse = detail::march(f.cell_moments(h, cells), h, kappa);
    if (opts.richardson) fine = detail::march(f.cell_moments(0.5 * h, 2 * cells), 0.5 * h, kappa);
    if (opts.residual) f_grid = detail::sample_source(f, h, cells);
  } else {
    const std::size_t stride = opts.richardson ? 2 : 1;
    const double q = h / double(2 * stride);
    const auto samples = detail::sample_source(f, q, 2 * stride * cells);
    require(std::abs(samples[0] - 1.0) <= 1e-8, ErrorCode::InvalidArgument, "return function must satisfy f(0) = 1");
    coarse = detail::march(detail::simpson_moments(samples, stride, h, cells), h, kappa);
    if (opts.richardson) fine = detail::march(detail::simpson_moments(samples, 1, 0.5 * h, 2 * cells), 0.5 * h, kappa);
    if (opts.residual) {
      f_grid.resize(cells + 1);
      for (std::size_t k = 0; k <= cells; ++k) f_grid[k] = samples[2 * stride * k];
    }
  }

  std::vector<double> t(cells + 1), g(cells + 1), error(cells + 1, 0.0);
  for (std::size_t n = 0; n <= cells; ++n) {
    t[n] = h * double(n);
    if (opts.richardson) {
      g[n] = (4.0 * fine[2 * n] - coarse[n]) / 3.0;
      error[n] = std::abs(fine[2 * n] - coarse[n]) / 3.0;
    } else {
      g[n] = coarse[n];
    }
  }
  t.back() = horizon;
  g[0] = 1.0;
  std::vector<double> residual;
  if (opts.residual) residual = detail::renewal_residual(f_grid, g, h, kappa);
  return MomentCurve(std::move(t), std::move(g), std::move(residual), std::move(error), kappa, h, std::move(provenance));
}

}  // namespace symbranch
