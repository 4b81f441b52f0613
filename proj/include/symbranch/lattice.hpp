#pragma once

// Fourier-side evaluation of lattice walk quantities:
//   p_t(0,0)  = (2pi)^-d int exp(t s psi(theta)) dtheta
//   f^(lambda) = (2pi)^-d int Re 1/(lambda - s psi(theta)) dtheta   (lambda = 0 gives G_inf)
//   H_inf      = (2pi)^-d int Re 1/(s psi(theta))^2 dtheta
// where psi is the kernel symbol and s rescales the total jump rate.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <unsupported/Eigen/FFT>

#include "symbranch/errors.hpp"
#include "symbranch/kernel.hpp"
#include "symbranch/quadrature.hpp"

namespace symbranch {

struct QuadratureOptions {
  double tolerance = 0.0;  // absolute, for return probabilities; 0 picks the dimension default
  std::size_t max_nodes_1d = std::size_t{1} << 22;
  std::size_t max_nodes_per_axis = 0;  // tensor grids of non axis-supported kernels; 0 picks by dimension
  double resolvent_tolerance = 1e-8;   // relative, for Green functions and Laplace transforms

  double resolved_tolerance(int d) const {
    if (tolerance > 0.0) return tolerance;
    return d <= 2 ? 1e-10 : 1e-8;
  }
  std::size_t resolved_axis_cap(int d) const {
    if (max_nodes_per_axis) return max_nodes_per_axis;
    return d == 1 ? max_nodes_1d : (d == 2 ? 2048 : 128);
  }
};

struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

struct GreenValues {
  double green = 0.0;    // G_inf, +inf when the walk is recurrent
  double green_t = 0.0;  // H_inf = int t p_t dt
  bool recurrent = false;
  double green_error = 0.0;
};

namespace detail {

inline double rate_scale(const Kernel& k, std::optional<double> total_rate) {
  if (!total_rate) return 1.0;
  require(*total_rate > 0.0 && std::isfinite(*total_rate), ErrorCode::InvalidArgument,
          "total rate must be positive");
  return *total_rate / k.total_rate();
}

// Symbol of a one-dimensional step table on the periodic grid theta_m = 2 pi m / n.
inline std::vector<std::complex<double>> periodic_axis_symbol(const AxisSteps& steps, std::size_t n) {
  std::vector<std::complex<double>> psi(n);
  if (steps.size() * n <= (std::size_t{1} << 24)) {
    std::vector<double> cm1(n), sn(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double s = std::sin(M_PI * double(k) / double(n));
      cm1[k] = -2.0 * s * s;
      sn[k] = std::sin(2.0 * M_PI * double(k) / double(n));
    }
    for (std::size_t m = 0; m < n; ++m) {
      double re = 0.0, im = 0.0;
      for (const auto& [step, rate] : steps) {
        const long long r = ((step % (long long)n) + (long long)n) % (long long)n;
        const std::size_t idx = std::size_t((unsigned long long)r * m % n);
        re += rate * cm1[idx];
        im += rate * sn[idx];
      }
      psi[m] = {re, im};
    }
    return psi;
  }
  // Long-range tables: fold the rates onto the grid and transform once.
  std::vector<double> folded(n, 0.0);
  double total = 0.0;
  for (const auto& [step, rate] : steps) {
    const long long r = ((step % (long long)n) + (long long)n) % (long long)n;
    folded[std::size_t(r)] += rate;
    total += rate;
  }
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, folded);
  for (std::size_t m = 0; m < n; ++m) psi[m] = std::conj(spectrum[m]) - total;
  return psi;
}

inline bool steps_symmetric(const AxisSteps& steps) {
  std::map<long, double> table;
  for (const auto& [s, r] : steps) table[s] += r;
  for (const auto& [s, r] : table) {
    auto it = table.find(-s);
    if (it == table.end() || std::abs(it->second - r) > 1e-14 * std::abs(r)) return false;
  }
  return true;
}

// The n-node trapezoid sums p_t over the sites congruent to 0 mod n, so n must exceed the drift
// distance plus a few standard deviations.
inline std::size_t start_nodes(double t, double width_moment, double drift = 0.0) {
  const double n = 1.5 * std::abs(drift) * t + 4.0 * std::sqrt(std::max(0.0, t * width_moment));
  if (!(n < double(std::size_t{1} << 40))) return std::size_t{1} << 40;
  return std::max<std::size_t>(16, std::bit_ceil(std::size_t(std::ceil(n))));
}

// Periodic trapezoid on one axis with grid doubling and cached symbol tables.
class PeriodicAxis {
 public:
  PeriodicAxis(AxisSteps steps, double scale, std::size_t max_nodes)
      : steps_(std::move(steps)), scale_(scale), max_nodes_(max_nodes),
        symmetric_(steps_symmetric(steps_)) {
    for (const auto& [s, r] : steps_) {
      moment_ += r * double(s) * double(s);
      drift_ += r * double(s);
    }
  }

  Estimate integrate(double t, double tol) const {
    const double ts = t * scale_;
    std::size_t n = std::min(start_nodes(ts, moment_, drift_), max_nodes_);
    double previous = std::numeric_limits<double>::quiet_NaN();
    for (;;) {
      const auto& psi = table(n);
      double sum = 0.0;
      if (symmetric_) {
        for (const auto& z : psi) sum += std::exp(ts * z.real());
      } else {
        for (const auto& z : psi) sum += std::exp(ts * z.real()) * std::cos(ts * z.imag());
      }
      const double value = sum / double(n);
      if (!std::isnan(previous) && std::abs(value - previous) <= tol) return {value, std::abs(value - previous)};
      if (2 * n > max_nodes_) {
        throw QuadratureNotConverged("return probability at t=" + std::to_string(t),
                                     std::isnan(previous) ? 1.0 : std::abs(value - previous));
      }
      previous = value;
      n *= 2;
    }
  }

  const AxisSteps& steps() const noexcept { return steps_; }

 private:
  const std::vector<std::complex<double>>& table(std::size_t n) const {
    std::lock_guard lock(mutex_);
    auto& slot = cache_[n];
    if (!slot) slot = std::make_unique<std::vector<std::complex<double>>>(periodic_axis_symbol(steps_, n));
    return *slot;
  }

  AxisSteps steps_;
  double scale_;
  std::size_t max_nodes_;
  bool symmetric_;
  double moment_ = 0.0;
  double drift_ = 0.0;
  mutable std::mutex mutex_;
  mutable std::map<std::size_t, std::unique_ptr<std::vector<std::complex<double>>>> cache_;
};

// Full tensor trapezoid for kernels with diagonal jumps.
class PeriodicTensor {
 public:
  PeriodicTensor(const Kernel& k, double scale, std::size_t max_per_axis)
      : kernel_(k), scale_(scale), max_per_axis_(max_per_axis) {
    for (int d = 0; d < k.dimension(); ++d) {
      double m = 0.0, mu = 0.0;
      for (const auto& j : k.jumps()) {
        m += j.rate * double(j.offset[d]) * j.offset[d];
        mu += j.rate * double(j.offset[d]);
      }
      moment_ = std::max(moment_, m);
      drift_ = std::max(drift_, std::abs(mu));
    }
  }

  Estimate integrate(double t, double tol) const {
    const double ts = t * scale_;
    std::size_t n = std::min(start_nodes(ts, moment_, drift_), max_per_axis_);
    double previous = std::numeric_limits<double>::quiet_NaN();
    for (;;) {
      const auto& psi = table(n);
      double sum = 0.0;
      for (const auto& z : psi) sum += std::exp(ts * z.real()) * std::cos(ts * z.imag());
      const double value = sum / double(psi.size());
      if (!std::isnan(previous) && std::abs(value - previous) <= tol) return {value, std::abs(value - previous)};
      if (2 * n > max_per_axis_) {
        throw QuadratureNotConverged("return probability at t=" + std::to_string(t),
                                     std::isnan(previous) ? 1.0 : std::abs(value - previous));
      }
      previous = value;
      n *= 2;
    }
  }

 private:
  const std::vector<std::complex<double>>& table(std::size_t n) const {
    std::lock_guard lock(mutex_);
    auto& slot = cache_[n];
    if (slot) return *slot;
    const int d = kernel_.dimension();
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) total *= n;
    std::vector<double> cm1(n), sn(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double s = std::sin(M_PI * double(k) / double(n));
      cm1[k] = -2.0 * s * s;
      sn[k] = std::sin(2.0 * M_PI * double(k) / double(n));
    }
    auto psi = std::make_unique<std::vector<std::complex<double>>>(total);
    const long long nn = (long long)n;
    for (std::size_t flat = 0; flat < total; ++flat) {
      long long m[kMaxDimension] = {0, 0, 0};
      std::size_t rest = flat;
      for (int i = 0; i < d; ++i) {
        m[i] = (long long)(rest % n);
        rest /= n;
      }
      double re = 0.0, im = 0.0;
      for (const auto& j : kernel_.jumps()) {
        long long phase = 0;
        for (int i = 0; i < d; ++i) phase += (long long)j.offset[i] * m[i];
        const std::size_t idx = std::size_t(((phase % nn) + nn) % nn);
        re += j.rate * cm1[idx];
        im += j.rate * sn[idx];
      }
      (*psi)[flat] = {re, im};
    }
    slot = std::move(psi);
    return *slot;
  }

  Kernel kernel_;
  double scale_;
  std::size_t max_per_axis_;
  double moment_ = 0.0;
  double drift_ = 0.0;
  mutable std::mutex mutex_;
  mutable std::map<std::size_t, std::unique_ptr<std::vector<std::complex<double>>>> cache_;
};

}  // namespace detail

// Reusable evaluator of t -> p_t(0,0). Axis-supported kernels factor into one-dimensional integrals.
class ReturnProbability {
 public:
  explicit ReturnProbability(const Kernel& k, std::optional<double> total_rate = std::nullopt,
                             QuadratureOptions opts = {})
      : dimension_(k.dimension()), tolerance_(opts.resolved_tolerance(k.dimension())) {
    const double scale = detail::rate_scale(k, total_rate);
    if (k.axis_supported()) {
      for (auto& part : k.axis_parts()) {
        auto same = std::find_if(axes_.begin(), axes_.end(),
                                 [&](const auto& a) { return a.first->steps() == part; });
        if (same != axes_.end()) {
          ++same->second;
        } else {
          axes_.emplace_back(std::make_shared<detail::PeriodicAxis>(std::move(part), scale, opts.max_nodes_1d), 1);
        }
      }
    } else {
      tensor_ = std::make_shared<detail::PeriodicTensor>(k, scale, opts.resolved_axis_cap(k.dimension()));
    }
  }

  Estimate evaluate(double t) const {
    require(t >= 0.0 && std::isfinite(t), ErrorCode::InvalidArgument, "time must be finite and >= 0");
    if (t == 0.0) return {1.0, 0.0};
    if (tensor_) return tensor_->integrate(t, tolerance_);
    const double tol = tolerance_ / dimension_;
    double value = 1.0, error = 0.0;
    for (const auto& [axis, count] : axes_) {
      const Estimate e = axis->integrate(t, tol);
      for (int i = 0; i < count; ++i) {
        error = error * e.value + value * e.error;
        value *= e.value;
      }
    }
    return {value, error};
  }

  double operator()(double t) const { return evaluate(t).value; }

  double tolerance() const noexcept { return tolerance_; }

 private:
  int dimension_;
  double tolerance_;
  std::vector<std::pair<std::shared_ptr<detail::PeriodicAxis>, int>> axes_;
  std::shared_ptr<detail::PeriodicTensor> tensor_;
};

inline double return_probability(const Kernel& k, double t, std::optional<double> total_rate = std::nullopt,
                                 QuadratureOptions opts = {}) {
  return ReturnProbability(k, total_rate, opts)(t);
}

namespace detail {

inline constexpr double kGradingRatio = 0.2;

struct ResolventRules {
  std::vector<quad::Rule> axes;
  double prefactor = 1.0;
};

inline ResolventRules resolvent_rules(const Kernel& k, int levels, int order) {
  ResolventRules r;
  const bool mirrored = k.reflection_symmetric();
  for (int d = 0; d < k.dimension(); ++d) {
    r.axes.push_back(mirrored ? quad::graded(M_PI, kGradingRatio, levels, order)
                              : quad::graded_symmetric(M_PI, kGradingRatio, levels, order));
  }
  r.prefactor = std::pow(mirrored ? M_PI : 2.0 * M_PI, -double(k.dimension()));
  return r;
}

inline std::complex<double> axis_symbol(const AxisSteps& steps, double x) {
  double re = 0.0, im = 0.0;
  for (const auto& [step, rate] : steps) {
    const double phase = x * double(step);
    const double s = std::sin(0.5 * phase);
    re -= 2.0 * rate * s * s;
    im += rate * std::sin(phase);
  }
  return {re, im};
}

// One tensor-rule evaluation of int Re (lambda - s psi)^-power.
inline double resolvent_sum(const Kernel& k, double lambda, int power, double scale, int levels, int order) {
  const auto rules = resolvent_rules(k, levels, order);
  const int d = k.dimension();
  auto kernel_value = [power](std::complex<double> z) {
    if (z.imag() == 0.0) return power == 1 ? 1.0 / z.real() : 1.0 / (z.real() * z.real());
    return power == 1 ? (1.0 / z).real() : (1.0 / (z * z)).real();
  };

  std::vector<std::vector<std::complex<double>>> psi(d);
  const bool separable = k.axis_supported();
  if (separable) {
    auto parts = k.axis_parts();
    for (int i = 0; i < d; ++i) {
      psi[i].resize(rules.axes[i].size());
      for (std::size_t m = 0; m < rules.axes[i].size(); ++m) {
        psi[i][m] = scale * axis_symbol(parts[i], rules.axes[i].nodes[m]);
      }
    }
  }

  const auto& r0 = rules.axes[0];
  double total = 0.0;
  if (d == 1) {
    for (std::size_t a = 0; a < r0.size(); ++a) {
      const std::complex<double> z = separable ? lambda - psi[0][a]
                                               : lambda - scale * k.symbol(std::span(&r0.nodes[a], 1));
      total += r0.weights[a] * kernel_value(z);
    }
  } else if (d == 2) {
    const auto& r1 = rules.axes[1];
    for (std::size_t a = 0; a < r0.size(); ++a) {
      double inner = 0.0;
      for (std::size_t b = 0; b < r1.size(); ++b) {
        std::complex<double> z;
        if (separable) {
          z = lambda - psi[0][a] - psi[1][b];
        } else {
          const double th[2] = {r0.nodes[a], r1.nodes[b]};
          z = lambda - scale * k.symbol(th);
        }
        inner += r1.weights[b] * kernel_value(z);
      }
      total += r0.weights[a] * inner;
    }
  } else {
    const auto& r1 = rules.axes[1];
    const auto& r2 = rules.axes[2];
    const bool real_symbol = separable && k.symmetric();
    for (std::size_t a = 0; a < r0.size(); ++a) {
      double middle = 0.0;
      for (std::size_t b = 0; b < r1.size(); ++b) {
        double inner = 0.0;
        if (real_symbol) {
          const double base = lambda - psi[0][a].real() - psi[1][b].real();
          const auto& p2 = psi[2];
          if (power == 1) {
            for (std::size_t c = 0; c < r2.size(); ++c) inner += r2.weights[c] / (base - p2[c].real());
          } else {
            for (std::size_t c = 0; c < r2.size(); ++c) {
              const double z = base - p2[c].real();
              inner += r2.weights[c] / (z * z);
            }
          }
        } else {
          for (std::size_t c = 0; c < r2.size(); ++c) {
            std::complex<double> z;
            if (separable) {
              z = lambda - psi[0][a] - psi[1][b] - psi[2][c];
            } else {
              const double th[3] = {r0.nodes[a], r1.nodes[b], r2.nodes[c]};
              z = lambda - scale * k.symbol(th);
            }
            inner += r2.weights[c] * kernel_value(z);
          }
        }
        middle += r1.weights[b] * inner;
      }
      total += r0.weights[a] * middle;
    }
  }
  return rules.prefactor * total;
}

inline int base_levels(const Kernel& k, double lambda, double scale) {
  if (lambda <= 0.0) return 10;
  const double width = std::sqrt(lambda / std::max(1e-300, scale * k.second_moment()));
  const double target = 1e-3 * std::min(1.0, width) / M_PI;
  const int levels = int(std::ceil(std::log(target) / std::log(kGradingRatio)));
  return std::clamp(levels, 10, 60);
}

}  // namespace detail

struct ResolventValue {
  double value = 0.0;
  double error = 0.0;
  bool divergent = false;
};

// int Re (lambda - s psi)^-power over the torus, normalized; divergence is reported rather than thrown.
inline ResolventValue resolvent(const Kernel& k, double lambda, int power, std::optional<double> total_rate = std::nullopt,
                                QuadratureOptions opts = {}) {
  require(lambda >= 0.0 && std::isfinite(lambda), ErrorCode::InvalidArgument, "lambda must be finite and >= 0");
  require(power == 1 || power == 2, ErrorCode::InvalidArgument, "power must be 1 or 2");
  const double scale = detail::rate_scale(k, total_rate);
  const int k0 = detail::base_levels(k, lambda, scale);
  const double i0 = detail::resolvent_sum(k, lambda, power, scale, k0, 10);
  const double i1 = detail::resolvent_sum(k, lambda, power, scale, k0 + 4, 10);
  const double i2 = detail::resolvent_sum(k, lambda, power, scale, k0 + 8, 10);
  const double tol = opts.resolvent_tolerance;
  if (!std::isfinite(i2)) return {std::numeric_limits<double>::infinity(), 0.0, true};
  if (lambda == 0.0) {
    const double d1 = i1 - i0, d2 = i2 - i1;
    if (i2 > 1.5 * i1 || (d2 > 0.5 * d1 && d2 > tol * std::abs(i2))) {
      return {std::numeric_limits<double>::infinity(), 0.0, true};
    }
  }
  double prev = i2;
  double cur = detail::resolvent_sum(k, lambda, power, scale, k0 + 8, 14);
  double error = std::abs(i2 - i1) + std::abs(cur - i2);
  // Drifting kernels have an angular ridge along the drift's normal; it needs finer cells and
  // higher order. Escalate until two successive rules agree.
  for (int extra = 12; error > tol * std::max(std::abs(cur), 1e-300) && extra <= 20; extra += 4) {
    prev = cur;
    cur = detail::resolvent_sum(k, lambda, power, scale, k0 + extra, 20);
    error = std::abs(cur - prev);
  }
  if (error > tol * std::max(std::abs(cur), 1e-300)) {
    throw QuadratureNotConverged("resolvent integral at lambda=" + std::to_string(lambda), error);
  }
  return {cur, error, false};
}

// Single-level evaluation without the convergence ladder; used inside root searches.
inline double resolvent_fast(const Kernel& k, double lambda, std::optional<double> total_rate = std::nullopt) {
  const double scale = detail::rate_scale(k, total_rate);
  return detail::resolvent_sum(k, lambda, 1, scale, detail::base_levels(k, lambda, scale) + 8, 10);
}

namespace detail {

// int_0^inf t p_t dt directly in time. With drift the symbol integral of the squared resolvent
// converges only through cancellation, while p_t itself decays exponentially.
inline double time_moment(const Kernel& k, std::optional<double> total_rate, QuadratureOptions opts) {
  const ReturnProbability p(k, total_rate, opts);
  const auto integrand = [&](double t) { return t * p(t); };
  double total = 0.0, a = 0.0, len = 4.0;
  while (a < 1e5) {
    const double part =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, a, a + len, 8, 1e-12);
    total += part;
    if (a > 0.0 && std::abs(part) <= opts.resolvent_tolerance * total) return total;
    a += len;
    len *= 1.5;
  }
  throw QuadratureNotConverged("time moment of the return probability", total);
}

}  // namespace detail

inline GreenValues green_values(const Kernel& k, std::optional<double> total_rate = std::nullopt,
                                QuadratureOptions opts = {}) {
  GreenValues g;
  const auto first = resolvent(k, 0.0, 1, total_rate, opts);
  g.green = first.value;
  g.green_error = first.error;
  g.recurrent = first.divergent;
  if (g.recurrent) {
    g.green_t = std::numeric_limits<double>::infinity();
  } else {
    try {
      g.green_t = resolvent(k, 0.0, 2, total_rate, opts).value;
    } catch (const QuadratureNotConverged&) {
      if (k.symmetric()) throw;
      g.green_t = detail::time_moment(k, total_rate, opts);
    }
  }
  return g;
}

// Laplace transform of t -> p_t(0,0); lambda = 0 returns G_inf (possibly infinite).
inline double laplace_f(const Kernel& k, double lambda, std::optional<double> total_rate = std::nullopt,
                        QuadratureOptions opts = {}) {
  return resolvent(k, lambda, 1, total_rate, opts).value;
}

}  // namespace symbranch
