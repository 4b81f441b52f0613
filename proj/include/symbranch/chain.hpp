#pragma once

// Finite-state continuous-time chains: exact Feynman-Kac moments E^i[exp(kappa L_t)] via the
// matrix exponential, and the return function p_t(i,i) as a ReturnSource.

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "symbranch/errors.hpp"
#include "symbranch/return_source.hpp"

namespace symbranch {

inline constexpr std::size_t kMaxChainStates = 10;

class Generator {
 public:
  explicit Generator(Eigen::MatrixXd q) : q_(std::move(q)) {
    const auto n = q_.rows();
    require(n >= 1 && n == q_.cols(), ErrorCode::InvalidGenerator, "generator must be square and non-empty");
    require(std::size_t(n) <= kMaxChainStates, ErrorCode::InvalidGenerator, "at most 10 states supported");
    require(q_.allFinite(), ErrorCode::InvalidGenerator, "generator has non-finite entries");
    const double scale = std::max(1.0, q_.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        require(i == j || q_(i, j) >= 0.0, ErrorCode::InvalidGenerator, "negative off-diagonal rate");
      }
      require(std::abs(q_.row(i).sum()) <= 1e-12 * scale * double(n), ErrorCode::InvalidGenerator,
              "row " + std::to_string(i) + " does not sum to zero");
    }
  }

  // Off-diagonal rates given; the diagonal is filled in so rows sum to zero.
  static Generator from_rates(Eigen::MatrixXd rates) {
    for (Eigen::Index i = 0; i < rates.rows(); ++i) {
      rates(i, i) = 0.0;
      rates(i, i) = -rates.row(i).sum();
    }
    return Generator(std::move(rates));
  }

  std::size_t size() const noexcept { return std::size_t(q_.rows()); }
  const Eigen::MatrixXd& matrix() const noexcept { return q_; }

  // States that communicate with i (reachable from i and able to return to i).
  std::vector<std::size_t> communicating_class(std::size_t i) const {
    const auto n = size();
    auto reach = [&](bool forward) {
      std::vector<bool> seen(n, false);
      std::vector<std::size_t> stack{i};
      seen[i] = true;
      while (!stack.empty()) {
        const auto a = stack.back();
        stack.pop_back();
        for (std::size_t b = 0; b < n; ++b) {
          const double rate = forward ? q_(Eigen::Index(a), Eigen::Index(b)) : q_(Eigen::Index(b), Eigen::Index(a));
          if (a != b && rate > 0.0 && !seen[b]) {
            seen[b] = true;
            stack.push_back(b);
          }
        }
      }
      return seen;
    };
    const auto fwd = reach(true), bwd = reach(false);
    std::vector<std::size_t> out;
    for (std::size_t s = 0; s < n; ++s) {
      if (fwd[s] && bwd[s]) out.push_back(s);
    }
    return out;
  }

 private:
  Eigen::MatrixXd q_;
};

// (exp(t (Q + kappa E_ii)) 1)_i.
inline double exact_chain_moment(const Generator& q, std::size_t state, double kappa, double t) {
  require(state < q.size(), ErrorCode::InvalidArgument, "state index out of range");
  require(t >= 0.0 && std::isfinite(t) && std::isfinite(kappa), ErrorCode::InvalidArgument, "bad time or rate");
  Eigen::MatrixXd m = q.matrix();
  m(Eigen::Index(state), Eigen::Index(state)) += kappa;
  const Eigen::MatrixXd e = (t * m).exp();
  return e.row(Eigen::Index(state)).sum();
}

// f(t) = (exp(tQ))_ii.
class ChainReturn {
 public:
  ChainReturn(Generator q, std::size_t state) : q_(std::move(q)), state_(state) {
    require(state < q_.size(), ErrorCode::InvalidArgument, "state index out of range");
    const auto cls = q_.communicating_class(state);
    std::vector<bool> inside(q_.size(), false);
    for (auto a : cls) inside[a] = true;
    bool closed = true;
    for (auto a : cls) {
      for (std::size_t b = 0; b < q_.size(); ++b) {
        if (!inside[b] && q_.matrix()(Eigen::Index(a), Eigen::Index(b)) > 0.0) closed = false;
      }
    }
    if (closed) {
      green_ = std::numeric_limits<double>::infinity();
      return;
    }
    // Returns to i only visit its communicating class, so the restricted sub-generator suffices.
    Eigen::MatrixXd sub(cls.size(), cls.size());
    Eigen::Index pos = 0;
    for (std::size_t a = 0; a < cls.size(); ++a) {
      if (cls[a] == state) pos = Eigen::Index(a);
      for (std::size_t b = 0; b < cls.size(); ++b) {
        sub(Eigen::Index(a), Eigen::Index(b)) = q_.matrix()(Eigen::Index(cls[a]), Eigen::Index(cls[b]));
      }
    }
    green_ = (-sub).inverse()(pos, pos);
  }

  double operator()(double t) const {
    const Eigen::MatrixXd e = (t * q_.matrix()).exp();
    return e(Eigen::Index(state_), Eigen::Index(state_));
  }

  double laplace(double lambda) const {
    const auto n = Eigen::Index(q_.size());
    const Eigen::MatrixXd a = lambda * Eigen::MatrixXd::Identity(n, n) - q_.matrix();
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(Eigen::Index(state_)) = 1.0;
    return a.partialPivLu().solve(e)(Eigen::Index(state_));
  }

  double green() const { return green_; }

  // f at 0, h, ..., count*h by repeated multiplication with exp(hQ).
  std::vector<double> sample(double h, std::size_t count) const {
    const Eigen::MatrixXd step = (h * q_.matrix()).exp();
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(Eigen::Index(q_.size()));
    row(Eigen::Index(state_)) = 1.0;
    std::vector<double> out(count + 1);
    for (std::size_t k = 0; k <= count; ++k) {
      out[k] = row(Eigen::Index(state_));
      row = row * step;
    }
    return out;
  }

  const Generator& generator() const noexcept { return q_; }

 private:
  Generator q_;
  std::size_t state_;
  double green_ = 0.0;
};

}  // namespace symbranch
