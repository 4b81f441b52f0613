#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "symbranch/errors.hpp"

namespace symbranch {

inline constexpr int kMaxDimension = 3;

using Offset = std::array<int, kMaxDimension>;

struct Jump {
  Offset offset{};
  double rate = 0.0;
};

// Nearest-neighbour walk, rate 1/(2d) to each neighbour.
struct DiscreteLaplacian {
  int dimension = 1;
};

// One-dimensional walk with rates proportional to |j|^(-1-beta), truncated at |j| <= radius.
struct RiemannWalk {
  double beta = 1.0;
  int radius = 10000;
};

struct FiniteRange {
  int dimension = 1;
  std::vector<Jump> jumps;
};

using KernelSpec = std::variant<DiscreteLaplacian, RiemannWalk, FiniteRange>;

// Power-law tail p_t(0,0) ~ c t^(-alpha). Either coefficient may come from theory or from a fit.
struct TailAsymptote {
  double c = 0.0;
  double alpha = 0.0;
  bool c_analytic = false;
  bool alpha_analytic = false;
  double fit_residual = 0.0;

  double operator()(double t) const { return c * std::pow(t, -alpha); }
};

// One axis of an axis-supported kernel: signed steps with their rates.
using AxisSteps = std::vector<std::pair<long, double>>;

class Kernel {
 public:
  int dimension() const noexcept { return dimension_; }
  std::span<const Jump> jumps() const noexcept { return jumps_; }
  double total_rate() const noexcept { return total_rate_; }
  bool symmetric() const noexcept { return symmetric_; }
  int symmetrizations() const noexcept { return symmetrizations_; }
  const KernelSpec& spec() const noexcept { return spec_; }

  // Mass of the infinite-range rates removed by truncation (Riemann walk only).
  double discarded_tail_mass() const noexcept { return discarded_mass_; }

  std::string family() const {
    return std::visit(
        [](const auto& s) -> std::string {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, DiscreteLaplacian>) return "laplacian";
          else if constexpr (std::is_same_v<S, RiemannWalk>) return "riemann";
          else return "finite";
        },
        spec_);
  }

  // Every jump moves along a single coordinate axis.
  bool axis_supported() const noexcept {
    return std::all_of(jumps_.begin(), jumps_.end(), [this](const Jump& j) {
      int nonzero = 0;
      for (int k = 0; k < dimension_; ++k) nonzero += j.offset[k] != 0;
      return nonzero == 1;
    });
  }

  // Rates invariant under flipping the sign of any single coordinate.
  bool reflection_symmetric() const {
    for (int k = 0; k < dimension_; ++k) {
      for (const auto& j : jumps_) {
        Offset mirrored = j.offset;
        mirrored[k] = -mirrored[k];
        if (std::abs(rate_at(mirrored) - j.rate) > 1e-14 * total_rate_) return false;
      }
    }
    return true;
  }

  double rate_at(const Offset& offset) const {
    auto it = std::lower_bound(jumps_.begin(), jumps_.end(), offset,
                               [](const Jump& j, const Offset& o) { return j.offset < o; });
    return (it != jumps_.end() && it->offset == offset) ? it->rate : 0.0;
  }

  std::vector<AxisSteps> axis_parts() const {
    std::vector<AxisSteps> parts(dimension_);
    for (const auto& j : jumps_) {
      for (int k = 0; k < dimension_; ++k) {
        if (j.offset[k] != 0) parts[k].emplace_back(j.offset[k], j.rate);
      }
    }
    return parts;
  }

  // psi(theta) = sum_j a(0,j) (exp(i theta.j) - 1); real part formed as -2 sin^2 to keep small angles exact.
  std::complex<double> symbol(std::span<const double> theta) const {
    double re = 0.0;
    double im = 0.0;
    for (const auto& j : jumps_) {
      double phase = 0.0;
      for (int k = 0; k < dimension_; ++k) phase += theta[k] * j.offset[k];
      const double s = std::sin(0.5 * phase);
      re -= 2.0 * j.rate * s * s;
      im += j.rate * std::sin(phase);
    }
    return {re, im};
  }

  // Sum of rate * |offset|^2; sets the width of the Fourier integrand.
  double second_moment() const {
    double m = 0.0;
    for (const auto& j : jumps_) {
      for (int k = 0; k < dimension_; ++k) m += j.rate * double(j.offset[k]) * j.offset[k];
    }
    return m;
  }

  std::optional<TailAsymptote> analytic_tail() const {
    if (const auto* lap = std::get_if<DiscreteLaplacian>(&spec_)) {
      const double d = lap->dimension;
      TailAsymptote tail;
      tail.alpha = d / 2.0;
      tail.c = std::pow(2.0 * M_PI * total_rate_ / d, -d / 2.0);
      tail.alpha_analytic = tail.c_analytic = true;
      return tail;
    }
    if (const auto* rw = std::get_if<RiemannWalk>(&spec_)) {
      TailAsymptote tail;
      if (rw->beta < 2.0) {
        tail.alpha = 1.0 / rw->beta;
        tail.c = std::nan("");
        tail.alpha_analytic = true;
        return tail;
      }
      if (rw->beta > 2.0) {
        tail.alpha = 0.5;
        tail.c = 1.0 / std::sqrt(2.0 * M_PI * second_moment());
        tail.alpha_analytic = tail.c_analytic = true;
        return tail;
      }
    }
    return std::nullopt;
  }

  friend bool operator==(const Kernel& a, const Kernel& b) {
    if (a.dimension_ != b.dimension_ || a.jumps_.size() != b.jumps_.size()) return false;
    for (std::size_t i = 0; i < a.jumps_.size(); ++i) {
      if (a.jumps_[i].offset != b.jumps_[i].offset || a.jumps_[i].rate != b.jumps_[i].rate) return false;
    }
    return true;
  }

 private:
  friend Kernel make_kernel(const KernelSpec& spec);
  friend Kernel symmetrize(const Kernel& k);

  static Kernel from_rates(int dimension, const std::map<Offset, double>& rates, KernelSpec spec) {
    Kernel k;
    k.dimension_ = dimension;
    k.spec_ = std::move(spec);
    for (const auto& [offset, rate] : rates) {
      if (rate > 0.0) k.jumps_.push_back({offset, rate});
    }
    double total = 0.0;
    for (const auto& j : k.jumps_) total += j.rate;
    k.total_rate_ = total;
    k.symmetric_ = true;
    for (const auto& j : k.jumps_) {
      Offset neg{};
      for (int i = 0; i < kMaxDimension; ++i) neg[i] = -j.offset[i];
      if (std::abs(k.rate_at(neg) - j.rate) > 1e-14 * std::max(1.0, total)) {
        k.symmetric_ = false;
        break;
      }
    }
    return k;
  }

  int dimension_ = 1;
  std::vector<Jump> jumps_;  // sorted by offset, positive rates only
  double total_rate_ = 0.0;
  bool symmetric_ = false;
  int symmetrizations_ = 0;
  double discarded_mass_ = 0.0;
  KernelSpec spec_;
};

namespace detail {

inline void check_dimension(int d) {
  require(d >= 1 && d <= kMaxDimension, ErrorCode::InvalidArgument,
          "dimension must be 1, 2 or 3, got " + std::to_string(d));
}

// Normalize a rate table to total mass 1 with a compensated sum.
inline void normalize(std::map<Offset, double>& rates) {
  long double total = 0.0L;
  for (const auto& [o, r] : rates) total += r;
  for (auto& [o, r] : rates) r = static_cast<double>(r / total);
}

}  // namespace detail

inline Kernel make_kernel(const KernelSpec& spec) {
  std::map<Offset, double> rates;
  int dimension = 1;
  double discarded = 0.0;

  if (const auto* lap = std::get_if<DiscreteLaplacian>(&spec)) {
    detail::check_dimension(lap->dimension);
    dimension = lap->dimension;
    for (int k = 0; k < dimension; ++k) {
      Offset plus{}, minus{};
      plus[k] = 1;
      minus[k] = -1;
      rates[plus] = rates[minus] = 1.0 / (2.0 * dimension);
    }
  } else if (const auto* rw = std::get_if<RiemannWalk>(&spec)) {
    require(std::isfinite(rw->beta) && rw->beta > 0.0, ErrorCode::InvalidArgument,
            "Riemann walk needs beta > 0");
    require(rw->radius >= 1, ErrorCode::InvalidArgument, "Riemann walk needs radius >= 1");
    for (int j = 1; j <= rw->radius; ++j) {
      const double w = std::pow(double(j), -1.0 - rw->beta);
      rates[{j, 0, 0}] = w;
      rates[{-j, 0, 0}] = w;
    }
    long double kept = 0.0L;
    for (int j = rw->radius; j >= 1; --j) kept += std::pow((long double)j, -1.0L - rw->beta);
    discarded = std::max(0.0, 1.0 - static_cast<double>(kept / std::riemann_zeta(1.0 + rw->beta)));
    detail::normalize(rates);
  } else {
    const auto& fr = std::get<FiniteRange>(spec);
    detail::check_dimension(fr.dimension);
    dimension = fr.dimension;
    for (const auto& j : fr.jumps) {
      require(!std::isnan(j.rate), ErrorCode::NonNormalizable, "rate is NaN");
      require(j.rate >= 0.0, ErrorCode::NegativeRate,
              "negative rate " + std::to_string(j.rate));
      require(std::isfinite(j.rate), ErrorCode::NonNormalizable, "rate is infinite");
      bool zero = true;
      for (int k = 0; k < kMaxDimension; ++k) {
        require(k < dimension || j.offset[k] == 0, ErrorCode::InvalidArgument,
                "offset has components beyond the kernel dimension");
        zero = zero && j.offset[k] == 0;
      }
      require(!zero, ErrorCode::InvalidArgument, "zero offset is not a jump");
      if (j.rate > 0.0) rates[j.offset] += j.rate;
    }
    require(!rates.empty(), ErrorCode::EmptySupport, "no positive rate");
    double total = 0.0;
    for (const auto& [o, r] : rates) total += r;
    require(std::isfinite(total) && total > 0.0, ErrorCode::NonNormalizable,
            "rates do not sum to a finite positive value");
    detail::normalize(rates);
  }

  Kernel k = Kernel::from_rates(dimension, rates, spec);
  k.discarded_mass_ = discarded;
  return k;
}

// Difference walk of two independent copies: rate a(0,j) + a(0,-j), total rate doubles.
inline Kernel symmetrize(const Kernel& k) {
  std::map<Offset, double> rates;
  for (const auto& j : k.jumps()) {
    Offset neg{};
    for (int i = 0; i < kMaxDimension; ++i) neg[i] = -j.offset[i];
    rates[j.offset] += j.rate;
    rates[neg] += j.rate;
  }
  Kernel s = Kernel::from_rates(k.dimension(), rates, k.spec());
  s.symmetrizations_ = k.symmetrizations() + 1;
  s.discarded_mass_ = k.discarded_tail_mass();
  return s;
}

}  // namespace symbranch
