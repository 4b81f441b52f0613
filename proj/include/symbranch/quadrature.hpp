#pragma once

#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "symbranch/errors.hpp"

namespace symbranch::quad {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const noexcept { return nodes.size(); }
};

namespace detail {

template <int N>
Rule legendre_on(double a, double b) {
  using G = boost::math::quadrature::gauss<double, N>;
  const auto& x = G::abscissa();
  const auto& w = G::weights();
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  Rule r;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) {
      r.nodes.push_back(mid);
      r.weights.push_back(half * w[i]);
      continue;
    }
    r.nodes.push_back(mid - half * x[i]);
    r.weights.push_back(half * w[i]);
    r.nodes.push_back(mid + half * x[i]);
    r.weights.push_back(half * w[i]);
  }
  return r;
}

}  // namespace detail

// Gauss-Legendre rule of the given order mapped to [a, b].
inline Rule legendre(int order, double a, double b) {
  switch (order) {
    case 5: return detail::legendre_on<5>(a, b);
    case 8: return detail::legendre_on<8>(a, b);
    case 10: return detail::legendre_on<10>(a, b);
    case 12: return detail::legendre_on<12>(a, b);
    case 14: return detail::legendre_on<14>(a, b);
    case 20: return detail::legendre_on<20>(a, b);
    default: fail(ErrorCode::InvalidArgument, "unsupported Gauss order " + std::to_string(order));
  }
}

// Composite Gauss rule on (0, L] with cells [L q^(k+1), L q^k], k < levels, plus [0, L q^levels].
// Resolves integrands that are singular or sharply peaked at 0.
inline Rule graded(double length, double ratio, int levels, int order) {
  Rule out;
  double hi = length;
  for (int k = 0; k <= levels; ++k) {
    const double lo = (k == levels) ? 0.0 : hi * ratio;
    Rule cell = legendre(order, lo, hi);
    out.nodes.insert(out.nodes.end(), cell.nodes.begin(), cell.nodes.end());
    out.weights.insert(out.weights.end(), cell.weights.begin(), cell.weights.end());
    hi = lo;
  }
  return out;
}

// Graded rule on [-L, L], mirrored about 0.
inline Rule graded_symmetric(double length, double ratio, int levels, int order) {
  Rule half = graded(length, ratio, levels, order);
  Rule out = half;
  for (std::size_t i = 0; i < half.size(); ++i) {
    out.nodes.push_back(-half.nodes[i]);
    out.weights.push_back(half.weights[i]);
  }
  return out;
}

// Composite Simpson on uniformly spaced samples; falls back to the 3/8 rule for an odd number of panels.
inline double simpson(const double* y, std::size_t panels, double h) {
  if (panels == 0) return 0.0;
  if (panels == 1) return 0.5 * h * (y[0] + y[1]);
  auto even_part = [&](std::size_t n) {
    double s = y[0] + y[n];
    for (std::size_t i = 1; i < n; i += 2) s += 4.0 * y[i];
    for (std::size_t i = 2; i < n; i += 2) s += 2.0 * y[i];
    return s * h / 3.0;
  };
  if (panels % 2 == 0) return even_part(panels);
  const std::size_t n = panels - 3;
  const double* t = y + n;
  return (n ? even_part(n) : 0.0) + 3.0 * h / 8.0 * (t[0] + 3.0 * t[1] + 3.0 * t[2] + t[3]);
}

}  // namespace symbranch::quad
