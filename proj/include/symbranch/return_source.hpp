#pragma once

// Return functions f(t) = P[X_t = i | X_0 = i] together with their Laplace transforms.
// Anything modelling ReturnSource can drive the Volterra solver and the growth-rate inversion.

#include <cmath>
#include <concepts>
#include <limits>
#include <memory>
#include <mutex>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "symbranch/errors.hpp"
#include "symbranch/lattice.hpp"
#include "symbranch/return_curve.hpp"

namespace symbranch {

template <class S>
concept ReturnSource = requires(const S& s, double x) {
  { s(x) } -> std::convertible_to<double>;
  { s.laplace(x) } -> std::convertible_to<double>;
  { s.green() } -> std::convertible_to<double>;
};

// Moments of f over the cells [jh, (j+1)h]: zeroth = int f, first = int (r - jh) f.
struct CellMoments {
  std::vector<double> zeroth;
  std::vector<double> first;
};

template <class S>
concept HasCellMoments = requires(const S& s, double h, std::size_t n) {
  { s.cell_moments(h, n) } -> std::same_as<CellMoments>;
};

template <class S>
concept HasSampler = requires(const S& s, double h, std::size_t n) {
  { s.sample(h, n) } -> std::same_as<std::vector<double>>;
};

template <class S>
concept HasFastLaplace = requires(const S& s, double x) {
  { s.laplace_fast(x) } -> std::convertible_to<double>;
};

// f == 1: a single absorbing state.
struct SingleState {
  double operator()(double) const { return 1.0; }
  double laplace(double lambda) const { return 1.0 / lambda; }
  double green() const { return std::numeric_limits<double>::infinity(); }
  CellMoments cell_moments(double h, std::size_t n) const {
    return {std::vector<double>(n, h), std::vector<double>(n, 0.5 * h * h)};
  }
};

// f(t) = exp(-b t).
struct ExponentialReturn {
  double rate = 1.0;

  double operator()(double t) const { return std::exp(-rate * t); }
  double laplace(double lambda) const { return 1.0 / (lambda + rate); }
  double green() const { return 1.0 / rate; }
  CellMoments cell_moments(double h, std::size_t n) const {
    const double bh = rate * h;
    const double m0 = -std::expm1(-bh) / rate;
    const double m1 = (-std::expm1(-bh) - bh * std::exp(-bh)) / (rate * rate);
    CellMoments m{std::vector<double>(n), std::vector<double>(n)};
    for (std::size_t j = 0; j < n; ++j) {
      const double w = std::exp(-rate * h * double(j));
      m.zeroth[j] = w * m0;
      m.first[j] = w * m1;
    }
    return m;
  }
};

// Return probability of a lattice walk, evaluated by Fourier quadrature on demand.
class LatticeReturn {
 public:
  explicit LatticeReturn(const Kernel& k, std::optional<double> total_rate = std::nullopt, QuadratureOptions opts = {})
      : kernel_(k), total_rate_(total_rate), opts_(opts), p_(k, total_rate, opts),
        green_(std::make_shared<Lazy>()) {}

  double operator()(double t) const { return p_(t); }
  double laplace(double lambda) const { return laplace_f(kernel_, lambda, total_rate_, opts_); }
  double laplace_fast(double lambda) const { return resolvent_fast(kernel_, lambda, total_rate_); }
  double green() const { return green_values_cached().green; }

  const GreenValues& green_values_cached() const {
    std::call_once(green_->once, [&] { green_->value = green_values(kernel_, total_rate_, opts_); });
    return green_->value;
  }

  const Kernel& kernel() const noexcept { return kernel_; }
  std::optional<TailAsymptote> tail() const { return scaled_analytic_tail(kernel_, total_rate_); }

 private:
  struct Lazy {
    std::once_flag once;
    GreenValues value;
  };

  Kernel kernel_;
  std::optional<double> total_rate_;
  QuadratureOptions opts_;
  ReturnProbability p_;
  std::shared_ptr<Lazy> green_;
};

namespace detail {

// int_a^inf exp(-lambda t) f(t) dt for a smooth decaying f.
template <class F>
double laplace_tail_integral(const F& f, double lambda, double a) {
  boost::math::quadrature::exp_sinh<double> integrator;
  return integrator.integrate([&](double x) { return std::exp(-lambda * (a + x)) * f(a + x); });
}

}  // namespace detail

// Sampled return curve with its power-law continuation.
class CurveReturn {
 public:
  explicit CurveReturn(ReturnCurve curve) : curve_(std::move(curve)) {}

  double operator()(double t) const { return curve_(t); }

  double laplace(double lambda) const {
    require(lambda >= 0.0, ErrorCode::InvalidArgument, "lambda must be >= 0");
    if (lambda == 0.0) return green();
    const auto& t = curve_.times();
    double body = 0.0;
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
      body += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
          [&](double x) { return std::exp(-lambda * x) * curve_(x); }, t[i], t[i + 1], 0);
    }
    return body + detail::laplace_tail_integral(curve_, lambda, curve_.horizon());
  }

  double green() const {
    const auto& tail = curve_.tail();
    if (!tail || tail->alpha <= 1.0) return std::numeric_limits<double>::infinity();
    const auto& t = curve_.times();
    double body = 0.0;
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
      body += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(curve_, t[i], t[i + 1], 0);
    }
    return body + curve_.horizon() * curve_.values().back() / (tail->alpha - 1.0);
  }

  const ReturnCurve& curve() const noexcept { return curve_; }

 private:
  ReturnCurve curve_;
};

// Arbitrary f with f(0) = 1; transforms by numerical quadrature.
template <class F>
class CallableReturn {
 public:
  explicit CallableReturn(F f) : f_(std::move(f)) {}

  double operator()(double t) const { return f_(t); }
  double laplace(double lambda) const { return detail::laplace_tail_integral(f_, lambda, 0.0); }
  double green() const {
    boost::math::quadrature::exp_sinh<double> integrator;
    double error = 0.0;
    const double v = integrator.integrate(f_, 0.0, std::numeric_limits<double>::infinity(), 1e-10, &error);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  }

 private:
  F f_;
};

}  // namespace symbranch
