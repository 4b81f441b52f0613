#pragma once

// Stochastic checks of the moment formulas: Euler-Maruyama for the two-type system on a torus,
// and exact event-driven simulation of the two-particle duals.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <boost/random/normal_distribution.hpp>

#include "json.hpp"

#include "symbranch/errors.hpp"
#include "symbranch/kernel.hpp"

namespace symbranch {

// SplitMix64 finalizer: a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// mix64(master + (index + 1) * golden). For a fixed master the map index -> seed is injective,
// since multiplication by an odd constant and mix64 are both bijections mod 2^64.
constexpr std::uint64_t derive_replica_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(master + (index + 1) * 0x9e3779b97f4a7c15ULL);
}

class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

 private:
  std::uint64_t state_;
};

enum class ObservableKind { MeanU, SecondU, MixedUV, Correlation };

struct Observable {
  ObservableKind kind = ObservableKind::MeanU;
  double lag = 0.0;  // s for cor[u(t,0), u(t+s,0)]
};

inline std::string observable_name(const Observable& o) {
  switch (o.kind) {
    case ObservableKind::MeanU: return "E[u]";
    case ObservableKind::SecondU: return "E[u^2]";
    case ObservableKind::MixedUV: return "E[uv]";
    case ObservableKind::Correlation: return "cor[u(t),u(t+" + std::to_string(o.lag) + ")]";
  }
  return "?";
}

struct SimConfig {
  Kernel kernel = make_kernel(DiscreteLaplacian{1});
  int side = 64;
  double dt = 1e-3;
  double horizon = 2.0;
  double kappa = 1.0;
  double rho = 0.0;
  std::size_t replicas = 1000;
  std::uint64_t seed = 42;
  bool clamp = true;
  double u0 = 1.0;
  double v0 = 1.0;
  unsigned threads = 0;  // 0: hardware concurrency

  void validate() const {
    require(side >= 4, ErrorCode::InvalidConfig, "torus side must be >= 4");
    require(dt > 0.0 && std::isfinite(dt), ErrorCode::InvalidConfig, "time step must be > 0");
    require(horizon > 0.0 && std::isfinite(horizon), ErrorCode::InvalidConfig, "horizon must be > 0");
    require(kappa > 0.0 && kappa * dt <= 0.1, ErrorCode::InvalidConfig, "need kappa > 0 and kappa*dt <= 0.1");
    require(rho >= -1.0 && rho <= 1.0, ErrorCode::InvalidConfig, "rho must lie in [-1, 1]");
    require(replicas >= 1, ErrorCode::InvalidConfig, "need at least one replica");
    require(u0 >= 0.0 && v0 >= 0.0, ErrorCode::InvalidConfig, "initial values must be nonnegative");
    double sites = std::pow(double(side), kernel.dimension());
    require(sites <= 1 << 24, ErrorCode::InvalidConfig, "torus too large");
  }
};

struct SimEstimate {
  std::string observable;
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::size_t replicas = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> flags;
};

struct SimResult {
  std::vector<SimEstimate> estimates;
  // Pathwise diagnostics from the lattice scheme (largest over replicas, sites and steps).
  double max_sum_drift = 0.0;  // |u + v - (u0 + v0)|
  double max_difference = 0.0;  // |u - v|
  std::size_t clamped = 0;     // site updates where u v < 0 was clamped

  const SimEstimate& at(const std::string& name) const {
    for (const auto& e : estimates) {
      if (e.observable == name) return e;
    }
    fail(ErrorCode::InvalidArgument, "no estimate for " + name);
  }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : estimates) {
      arr.push_back({{"observable", e.observable},
                     {"estimate", e.estimate},
                     {"stderr", e.stderr_},
                     {"replicas", e.replicas},
                     {"seed", e.seed},
                     {"flags", e.flags}});
    }
    return arr;
  }
};

namespace detail {

// Pairwise summation keeps the merge independent of how replicas were scheduled.
inline double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

inline SimEstimate summarize(std::string name, const std::vector<double>& x, std::uint64_t seed) {
  const std::size_t n = x.size();
  SimEstimate e;
  e.observable = std::move(name);
  e.replicas = n;
  e.seed = seed;
  const double mean = pairwise_sum(x.data(), n) / double(n);
  std::vector<double> dev(n);
  for (std::size_t i = 0; i < n; ++i) dev[i] = (x[i] - mean) * (x[i] - mean);
  const double var = n > 1 ? pairwise_sum(dev.data(), n) / double(n - 1) : 0.0;
  e.estimate = mean;
  e.stderr_ = std::sqrt(var / double(n));
  // Heavy tail: the top 1% of replicas carry more than half of the mean.
  if (n >= 100 && mean > 0.0 && std::all_of(x.begin(), x.end(), [](double v) { return v >= 0.0; })) {
    auto sorted = x;
    const std::size_t top = std::max<std::size_t>(1, n / 100);
    std::nth_element(sorted.begin(), sorted.end() - top, sorted.end());
    const double top_sum = pairwise_sum(sorted.data() + (n - top), top);
    if (top_sum > 0.5 * mean * double(n)) e.flags.push_back("heavy_tail");
  }
  return e;
}

inline SimEstimate summarize_correlation(std::string name, const std::vector<double>& a, const std::vector<double>& b,
                                         std::uint64_t seed) {
  const std::size_t n = a.size();
  const double ma = pairwise_sum(a.data(), n) / double(n), mb = pairwise_sum(b.data(), n) / double(n);
  std::vector<double> xy(n), xx(n), yy(n);
  for (std::size_t i = 0; i < n; ++i) {
    xy[i] = (a[i] - ma) * (b[i] - mb);
    xx[i] = (a[i] - ma) * (a[i] - ma);
    yy[i] = (b[i] - mb) * (b[i] - mb);
  }
  const double sxx = pairwise_sum(xx.data(), n), syy = pairwise_sum(yy.data(), n);
  SimEstimate e;
  e.observable = std::move(name);
  e.replicas = n;
  e.seed = seed;
  e.estimate = sxx > 0.0 && syy > 0.0 ? pairwise_sum(xy.data(), n) / std::sqrt(sxx * syy) : 0.0;
  e.stderr_ = (1.0 - e.estimate * e.estimate) / std::sqrt(double(std::max<std::size_t>(n, 4) - 3));
  return e;
}

inline unsigned worker_count(unsigned requested, std::size_t jobs) {
  unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return unsigned(std::min<std::size_t>(n, jobs));
}

// Runs body(i) for i in [0, count) on a small pool; each index is handled exactly once.
inline void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
  const unsigned workers = worker_count(threads, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < count;) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// Torus geometry: site index <-> coordinates centred on 0, and the jump table folded mod side.
struct Torus {
  int d = 1;
  int side = 4;
  std::size_t sites = 0;
  std::vector<std::pair<std::size_t, double>> stencil;  // flattened offset shift, rate
  double total_rate = 0.0;
  std::vector<std::uint64_t> keys;  // N-independent stream key per site

  Torus(const Kernel& k, int n) : d(k.dimension()), side(n) {
    sites = 1;
    for (int i = 0; i < d; ++i) sites *= std::size_t(n);
    std::map<std::size_t, double> folded;
    for (const auto& j : k.jumps()) {
      std::size_t shift = 0, stride = 1;
      for (int i = 0; i < d; ++i) {
        const int c = ((j.offset[i] % n) + n) % n;
        shift += std::size_t(c) * stride;
        stride *= std::size_t(n);
      }
      if (shift != 0) folded[shift] += j.rate;
    }
    for (auto& [s, r] : folded) stencil.emplace_back(s, r), total_rate += r;
    keys.resize(sites);
    for (std::size_t s = 0; s < sites; ++s) keys[s] = site_key(s);
  }

  // Coordinate x in [-n/2, n/2) per axis, zigzag-packed into 21 bits each.
  std::uint64_t site_key(std::size_t index) const {
    std::uint64_t key = 0;
    for (int i = 0; i < d; ++i) {
      int c = int(index % std::size_t(side));
      index /= std::size_t(side);
      if (c >= side / 2) c -= side;
      const std::uint64_t z = c >= 0 ? std::uint64_t(2 * c) : std::uint64_t(-2 * c - 1);
      key |= z << (21 * i);
    }
    return key;
  }

  // Index of site i shifted by the flattened offset.
  std::size_t shifted(std::size_t i, std::size_t shift) const {
    std::size_t out = 0, stride = 1;
    for (int a = 0; a < d; ++a) {
      const std::size_t c = (i / stride + shift / stride) % std::size_t(side);
      out += c * stride;
      stride *= std::size_t(side);
    }
    return out;
  }
};

}  // namespace detail

// Euler-Maruyama on the torus. Each site owns a generator keyed by its coordinate, so the
// noise near the origin is the same for every side length.
inline SimResult simulate_lattice(const SimConfig& cfg, const std::vector<Observable>& observables) {
  cfg.validate();
  require(!observables.empty(), ErrorCode::InvalidConfig, "no observables requested");
  const detail::Torus torus(cfg.kernel, cfg.side);
  const std::size_t n_sites = torus.sites;
  std::vector<std::size_t> neighbours(n_sites * torus.stencil.size());
  for (std::size_t i = 0; i < n_sites; ++i) {
    for (std::size_t k = 0; k < torus.stencil.size(); ++k) {
      neighbours[i * torus.stencil.size() + k] = torus.shifted(i, torus.stencil[k].first);
    }
  }
  const std::size_t steps = std::size_t(std::llround(cfg.horizon / cfg.dt));
  require(std::abs(double(steps) * cfg.dt - cfg.horizon) <= 1e-9 * cfg.horizon, ErrorCode::InvalidConfig,
          "horizon must be a multiple of the time step");
  double max_lag = 0.0;
  for (const auto& o : observables) {
    if (o.kind == ObservableKind::Correlation) {
      require(o.lag >= 0.0, ErrorCode::InvalidConfig, "correlation lag must be >= 0");
      max_lag = std::max(max_lag, o.lag);
    }
  }
  const std::size_t lag_steps = std::size_t(std::llround(max_lag / cfg.dt));
  const std::size_t total_steps = steps + lag_steps;

  const double sqdt = std::sqrt(cfg.dt);
  const double rho = cfg.rho;
  const double orth = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  const bool independent = orth > 0.0;

  std::vector<double> u_t(cfg.replicas), v_t(cfg.replicas);
  std::vector<std::vector<double>> u_lag(observables.size());
  for (std::size_t o = 0; o < observables.size(); ++o) {
    if (observables[o].kind == ObservableKind::Correlation) u_lag[o].resize(cfg.replicas);
  }
  std::vector<double> drift_max(cfg.replicas, 0.0), diff_max(cfg.replicas, 0.0);
  std::vector<std::size_t> clamps(cfg.replicas, 0);

  detail::parallel_for(cfg.replicas, cfg.threads, [&](std::size_t r) {
    const std::uint64_t replica_seed = derive_replica_seed(cfg.seed, r);
    std::vector<SplitMix64> engines;
    engines.reserve(n_sites);
    for (std::size_t i = 0; i < n_sites; ++i) engines.emplace_back(derive_replica_seed(replica_seed, torus.keys[i]));
    boost::random::normal_distribution<double> normal;
    std::vector<double> u(n_sites, cfg.u0), v(n_sites, cfg.v0), un(n_sites), vn(n_sites);
    const double mass = cfg.u0 + cfg.v0;
    double drift = 0.0, diff = 0.0;
    std::size_t clamp_count = 0;
    for (std::size_t n = 1; n <= total_steps; ++n) {
      for (std::size_t i = 0; i < n_sites; ++i) {
        double lu = -torus.total_rate * u[i], lv = -torus.total_rate * v[i];
        const std::size_t* nb = neighbours.data() + i * torus.stencil.size();
        for (std::size_t k = 0; k < torus.stencil.size(); ++k) {
          lu += torus.stencil[k].second * u[nb[k]];
          lv += torus.stencil[k].second * v[nb[k]];
        }
        double product = u[i] * v[i];
        if (product < 0.0) {
          ++clamp_count;
          if (cfg.clamp) product = 0.0;
        }
        const double sigma = std::sqrt(cfg.kappa * product);
        const double dw1 = sqdt * normal(engines[i]);
        const double dw2 = independent ? rho * dw1 + orth * sqdt * normal(engines[i]) : rho * dw1;
        un[i] = u[i] + cfg.dt * lu + sigma * dw1;
        vn[i] = v[i] + cfg.dt * lv + sigma * dw2;
        if (!(std::abs(un[i]) <= 1e10 && std::abs(vn[i]) <= 1e10)) {
          fail(ErrorCode::UnstableStep, "|u| exceeded 1e10 at t = " + std::to_string(double(n) * cfg.dt));
        }
      }
      u.swap(un);
      v.swap(vn);
      for (std::size_t i = 0; i < n_sites; ++i) {
        drift = std::max(drift, std::abs(u[i] + v[i] - mass));
        diff = std::max(diff, std::abs(u[i] - v[i]));
      }
      if (n == steps) {
        u_t[r] = u[0];
        v_t[r] = v[0];
      }
      for (std::size_t o = 0; o < observables.size(); ++o) {
        if (!u_lag[o].empty() && n == steps + std::size_t(std::llround(observables[o].lag / cfg.dt))) u_lag[o][r] = u[0];
      }
    }
    drift_max[r] = drift;
    diff_max[r] = diff;
    clamps[r] = clamp_count;
  });

  SimResult res;
  res.max_sum_drift = *std::max_element(drift_max.begin(), drift_max.end());
  res.max_difference = *std::max_element(diff_max.begin(), diff_max.end());
  res.clamped = std::accumulate(clamps.begin(), clamps.end(), std::size_t(0));
  std::vector<std::string> common;
  // Periodic wrap is harmless while the pair spread stays well inside the torus.
  const double half = 0.5 * double(cfg.side);
  if (cfg.horizon + max_lag > 0.1 * half * half / std::max(torus.total_rate, 1e-300)) common.push_back("finite_size");
  if (res.clamped > 0) common.push_back("clamped");
  for (std::size_t o = 0; o < observables.size(); ++o) {
    const auto& obs = observables[o];
    std::vector<double> x(cfg.replicas);
    SimEstimate e;
    switch (obs.kind) {
      case ObservableKind::MeanU: e = detail::summarize(observable_name(obs), u_t, cfg.seed); break;
      case ObservableKind::SecondU:
        for (std::size_t r = 0; r < cfg.replicas; ++r) x[r] = u_t[r] * u_t[r];
        e = detail::summarize(observable_name(obs), x, cfg.seed);
        break;
      case ObservableKind::MixedUV:
        for (std::size_t r = 0; r < cfg.replicas; ++r) x[r] = u_t[r] * v_t[r];
        e = detail::summarize(observable_name(obs), x, cfg.seed);
        break;
      case ObservableKind::Correlation:
        e = detail::summarize_correlation(observable_name(obs), u_t, u_lag[o], cfg.seed);
        break;
    }
    e.flags.insert(e.flags.end(), common.begin(), common.end());
    res.estimates.push_back(std::move(e));
  }
  return res;
}

struct SchemeMoments {
  double mixed = 0.0;   // E[u(t,0) v(t,0)]
  double second = 0.0;  // E[u(t,0)^2]
};

// Exact second moments of the Euler-Maruyama scheme without clamping. Translation invariance
// reduces E[u_i v_j] to a function of i - j on the torus, updated by the deterministic drift
// on both arguments plus the noise covariance on the diagonal.
inline SchemeMoments scheme_second_moments(const SimConfig& cfg) {
  cfg.validate();
  const detail::Torus torus(cfg.kernel, cfg.side);
  const std::size_t n = torus.sites;
  // One Euler step acting on a single argument: B = (1 - dt*total) delta_0 + dt * a(shift).
  std::vector<std::pair<std::size_t, double>> step{{0, 1.0 - cfg.dt * torus.total_rate}};
  for (auto [s, r] : torus.stencil) step.emplace_back(s, cfg.dt * r);
  std::vector<std::size_t> neg(step.size());
  for (std::size_t k = 0; k < step.size(); ++k) {
    // Index of -shift on the torus.
    std::size_t out = 0, stride = 1;
    for (int a = 0; a < torus.d; ++a) {
      const std::size_t c = (step[k].first / stride) % std::size_t(torus.side);
      out += ((std::size_t(torus.side) - c) % std::size_t(torus.side)) * stride;
      stride *= std::size_t(torus.side);
    }
    neg[k] = out;
  }
  auto apply = [&](const std::vector<double>& c, std::vector<double>& out, bool first) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t x = 0; x < n; ++x) {
      for (std::size_t k = 0; k < step.size(); ++k) {
        out[x] += step[k].second * c[torus.shifted(x, first ? step[k].first : neg[k])];
      }
    }
  };
  std::vector<double> uv(n, cfg.u0 * cfg.v0), uu(n, cfg.u0 * cfg.u0), tmp(n), nxt(n);
  const std::size_t steps = std::size_t(std::llround(cfg.horizon / cfg.dt));
  for (std::size_t s = 0; s < steps; ++s) {
    const double noise = cfg.kappa * cfg.dt * uv[0];
    apply(uv, tmp, true);
    apply(tmp, nxt, false);
    nxt[0] += cfg.rho * noise;
    uv.swap(nxt);
    apply(uu, tmp, true);
    apply(tmp, nxt, false);
    nxt[0] += noise;
    uu.swap(nxt);
  }
  return {uv[0], uu[0]};
}

enum class PairStart { Same, Different };

namespace detail {

struct JumpSampler {
  std::vector<Offset> offsets;
  std::vector<double> cumulative;
  double total = 0.0;

  explicit JumpSampler(const Kernel& k) {
    for (const auto& j : k.jumps()) {
      offsets.push_back(j.offset);
      total += j.rate;
      cumulative.push_back(total);
    }
  }

  template <class Rng>
  const Offset& operator()(Rng& rng) const {
    const double x = std::uniform_real_distribution<double>(0.0, total)(rng);
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
    return offsets[std::min<std::size_t>(std::size_t(it - cumulative.begin()), offsets.size() - 1)];
  }
};

// Collision time of two independent walkers from the same site, delivered interval by interval
// to visit(start, length). Stops early when visit returns false.
template <class Rng, class Visit>
void pair_collisions(const JumpSampler& jumps, double horizon, Rng& rng, Visit&& visit) {
  Offset diff{};  // X1 - X2
  std::exponential_distribution<double> hold(2.0 * jumps.total);
  std::uniform_int_distribution<int> which(0, 1);
  double t = 0.0;
  while (t < horizon) {
    const double dt = std::min(hold(rng), horizon - t);
    if (diff == Offset{} && !visit(t, dt)) return;
    t += dt;
    if (t >= horizon) break;
    const auto& off = jumps(rng);
    const int sign = which(rng) ? 1 : -1;
    for (int a = 0; a < 3; ++a) diff[a] += sign * off[a];
  }
}

}  // namespace detail

// E[u(t,k)^2] (start Same) or E[u(t,k) v(t,k)] (start Different) from the pair dual:
// average of exp(kappa (L= + rho L!=)); a same-type pair switches type once its collision
// time passes Y ~ Exp(kappa).
inline SimResult simulate_dual_pair(const Kernel& k, double kappa, double rho, double t, PairStart start,
                                    std::size_t replicas, std::uint64_t seed, unsigned threads = 0) {
  require(kappa > 0.0 && t > 0.0 && replicas >= 1, ErrorCode::InvalidArgument, "dual pair needs kappa, t > 0");
  require(rho >= -1.0 && rho <= 1.0, ErrorCode::InvalidArgument, "rho must lie in [-1, 1]");
  const detail::JumpSampler jumps(k);
  std::vector<double> x(replicas);
  detail::parallel_for(replicas, threads, [&](std::size_t r) {
    std::mt19937_64 rng(derive_replica_seed(seed, r));
    // A different-type pair never accrues same-type collision time.
    double threshold = 0.0;
    if (start == PairStart::Same) threshold = std::exponential_distribution<double>(kappa)(rng);
    double same = 0.0, different = 0.0;
    detail::pair_collisions(jumps, t, rng, [&](double, double len) {
      const double room = std::max(0.0, threshold - same);
      const double a = std::min(room, len);
      same += a;
      different += len - a;
      return true;
    });
    x[r] = std::exp(kappa * (same + rho * different));
  });
  SimResult res;
  res.estimates.push_back(detail::summarize(start == PairStart::Same ? "E[u^2]" : "E[uv]", x, seed));
  return res;
}

// Stepping stone second moment with u0 = w: two walkers coalesce once their collision time
// passes Y ~ Exp(kappa); the estimator is w^(number of surviving lineages).
inline SimResult simulate_coalescing_dual(const Kernel& k, double kappa, double w, double t, std::size_t replicas,
                                          std::uint64_t seed, unsigned threads = 0) {
  require(kappa > 0.0 && t >= 0.0 && replicas >= 1, ErrorCode::InvalidArgument, "coalescing dual needs kappa > 0");
  require(w > 0.0 && w < 1.0, ErrorCode::InvalidArgument, "w must lie in (0, 1)");
  const detail::JumpSampler jumps(k);
  std::vector<double> x(replicas);
  detail::parallel_for(replicas, threads, [&](std::size_t r) {
    std::mt19937_64 rng(derive_replica_seed(seed, r));
    const double threshold = std::exponential_distribution<double>(kappa)(rng);
    double collided = 0.0;
    bool merged = false;
    if (t > 0.0) {
      detail::pair_collisions(jumps, t, rng, [&](double, double len) {
        collided += len;
        merged = collided >= threshold;
        return !merged;
      });
    }
    x[r] = merged ? w : w * w;
  });
  SimResult res;
  res.estimates.push_back(detail::summarize("E[u^2]", x, seed));
  return res;
}

}  // namespace symbranch
