#pragma once

// Run configuration shared by the CLI subcommands. Parsed from JSON with unknown keys rejected;
// to_json() writes every field, defaults included, so a provenance block re-parses to the same run.

#include <cmath>
#include <cstdio>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "symbranch/aging.hpp"
#include "symbranch/errors.hpp"
#include "symbranch/kernel_spec.hpp"
#include "symbranch/montecarlo.hpp"

namespace symbranch {

inline std::string format_double_digits(double v, int digits) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

// "start:stop:step" (inclusive of stop up to rounding) or a comma list.
inline std::vector<double> parse_grid(std::string_view text) {
  require(!text.empty(), ErrorCode::InvalidConfig, "empty grid");
  const auto parts = detail::split(text, ':');
  std::vector<double> out;
  if (parts.size() == 3) {
    const double a = detail::parse_number(parts[0], "grid start");
    const double b = detail::parse_number(parts[1], "grid stop");
    const double h = detail::parse_number(parts[2], "grid step");
    require(h > 0.0 && b >= a, ErrorCode::InvalidConfig, "grid needs step > 0 and stop >= start");
    const auto n = std::size_t(std::floor((b - a) / h + 1e-9));
    require(n < 1000000, ErrorCode::InvalidConfig, "grid too long");
    // Rounded to 12 digits so 1.32:2:0.02 yields 1.34, not 1.3400000000000001.
    for (std::size_t i = 0; i <= n; ++i) out.push_back(std::stod(format_double_digits(a + h * double(i), 12)));
    return out;
  }
  require(parts.size() == 1, ErrorCode::InvalidConfig, "grid must be start:stop:step or a comma list");
  for (auto item : detail::split(text, ',')) out.push_back(detail::parse_number(item, "grid value"));
  return out;
}

inline DiffusionModel parse_model(std::string_view text, double rho) {
  const auto colon = text.find(':');
  const std::string name(text.substr(0, colon));
  std::map<std::string, double> args;
  if (colon != std::string_view::npos) {
    for (auto kv : detail::split(text.substr(colon + 1), ',')) {
      const auto eq = kv.find('=');
      require(eq != std::string_view::npos, ErrorCode::InvalidConfig, "model arguments are key=value");
      args[std::string(kv.substr(0, eq))] = detail::parse_number(kv.substr(eq + 1), "model argument");
    }
  }
  auto arg = [&](const char* key, double fallback) {
    auto it = args.find(key);
    double v = it == args.end() ? fallback : it->second;
    if (it != args.end()) args.erase(it);
    return v;
  };
  DiffusionModel m;
  if (name == "symbiotic") m = Symbiotic{rho};
  else if (name == "anderson") m = Anderson{};
  else if (name == "superRW") m = SuperRandomWalk{};
  else if (name == "steppingstone") m = SteppingStone{arg("w", 0.5)};
  else if (name == "bounded") m = BoundedDiffusion{arg("lower", 1.0), arg("upper", 1.0)};
  else fail(ErrorCode::InvalidConfig, "unknown model '" + name + "'");
  require(args.empty(), ErrorCode::InvalidConfig, "unknown argument for model '" + name + "'");
  validate_model(m);
  return m;
}

struct RunConfig {
  std::string command;
  std::string kernel = "laplacian:d=1";
  std::string walk = "base";  // base | symmetrization
  double kappa = 1.0;
  double rho = 0.0;
  std::string model = "symbiotic";
  double horizon = 10.0;
  double step = 0.0;       // 0: solver default
  double tolerance = 0.0;  // 0: per-dimension default
  std::size_t per_decade = 20;
  std::string kappa_grid = "0.1:2:0.1";
  std::string a_list = "0.25,0.5,0.75";
  std::string t_list = "1e4,1e6,1e8";
  std::string scaling = "linear";
  std::string mode = "lattice";  // simulate: lattice | dual | coalescing
  std::string start = "same";    // dual pair start type
  std::string observables = "mean,second,mixed";
  double lag = 0.0;
  double w = 0.5;
  int side = 64;
  double dt = 1e-3;
  std::size_t replicas = 1000;
  std::uint64_t seed = 42;
  bool clamp = true;
  double u0 = 1.0, v0 = 1.0;
  unsigned threads = 0;
  std::string suite = "quick";
  std::string out;  // empty: stdout
  bool cache = true;

  nlohmann::json to_json() const {
    return {{"command", command},     {"kernel", kernel},       {"walk", walk},
            {"kappa", kappa},         {"rho", rho},             {"model", model},
            {"horizon", horizon},     {"step", step},           {"tolerance", tolerance},
            {"per_decade", per_decade}, {"kappa_grid", kappa_grid}, {"a_list", a_list},
            {"t_list", t_list},       {"scaling", scaling},     {"mode", mode},
            {"start", start},         {"observables", observables}, {"lag", lag},
            {"w", w},                 {"side", side},           {"dt", dt},
            {"replicas", replicas},   {"seed", seed},           {"clamp", clamp},
            {"u0", u0},               {"v0", v0},               {"threads", threads},
            {"suite", suite},         {"out", out},             {"cache", cache}};
  }

  static RunConfig from_json(const nlohmann::json& j) {
    require(j.is_object(), ErrorCode::InvalidConfig, "configuration must be a JSON object");
    RunConfig c;
    const auto known = c.to_json();
    for (const auto& [key, value] : j.items()) {
      require(known.contains(key), ErrorCode::InvalidConfig, "unknown configuration key '" + key + "'");
    }
    try {
      auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) j.at(key).get_to(field);
      };
      get("command", c.command);
      get("kernel", c.kernel);
      get("walk", c.walk);
      get("kappa", c.kappa);
      get("rho", c.rho);
      get("model", c.model);
      get("horizon", c.horizon);
      get("step", c.step);
      get("tolerance", c.tolerance);
      get("per_decade", c.per_decade);
      get("kappa_grid", c.kappa_grid);
      get("a_list", c.a_list);
      get("t_list", c.t_list);
      get("scaling", c.scaling);
      get("mode", c.mode);
      get("start", c.start);
      get("observables", c.observables);
      get("lag", c.lag);
      get("w", c.w);
      get("side", c.side);
      get("dt", c.dt);
      get("replicas", c.replicas);
      get("seed", c.seed);
      get("clamp", c.clamp);
      get("u0", c.u0);
      get("v0", c.v0);
      get("threads", c.threads);
      get("suite", c.suite);
      get("out", c.out);
      get("cache", c.cache);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::InvalidConfig, std::string("bad configuration value: ") + e.what());
    }
    return c;
  }

  bool operator==(const RunConfig&) const = default;

  void validate() const {
    static const std::set<std::string> commands{"kernel", "volterra", "lyapunov", "moments",
                                                "aging",  "simulate", "validate"};
    require(commands.count(command) == 1, ErrorCode::InvalidConfig, "unknown subcommand '" + command + "'");
    require(walk == "base" || walk == "symmetrization", ErrorCode::InvalidConfig, "walk is base or symmetrization");
    require(scaling == "linear" || scaling == "log", ErrorCode::InvalidConfig, "scaling is linear or log");
    require(mode == "lattice" || mode == "dual" || mode == "coalescing", ErrorCode::InvalidConfig,
            "mode is lattice, dual or coalescing");
    require(start == "same" || start == "different", ErrorCode::InvalidConfig, "start is same or different");
    require(suite == "quick" || suite == "full", ErrorCode::InvalidConfig, "suite is quick or full");
    require(std::isfinite(kappa) && std::isfinite(rho) && rho >= -1.0 && rho <= 1.0, ErrorCode::InvalidConfig,
            "rho must lie in [-1, 1]");
    require(horizon > 0.0 && step >= 0.0 && tolerance >= 0.0, ErrorCode::InvalidConfig,
            "horizon must be > 0, step and tolerance >= 0");
  }

  Kernel make() const { return make_kernel(parse_kernel_spec(kernel)); }
};

inline std::vector<Observable> parse_observables(std::string_view text, double lag) {
  std::vector<Observable> out;
  for (auto name : detail::split(text, ',')) {
    if (name == "mean") out.push_back({ObservableKind::MeanU});
    else if (name == "second") out.push_back({ObservableKind::SecondU});
    else if (name == "mixed") out.push_back({ObservableKind::MixedUV});
    else if (name == "correlation") out.push_back({ObservableKind::Correlation, lag});
    else fail(ErrorCode::InvalidConfig, "unknown observable '" + std::string(name) + "'");
  }
  return out;
}

}  // namespace symbranch
