// symbranch: command-line front end for the moment, growth-rate, aging and simulation tools.
//
// Exit status: 0 on success, 2 when a validation suite reports a failure, 1 on any error.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "symbranch/symbranch.hpp"

namespace fs = std::filesystem;
using namespace symbranch;

namespace {

struct Output {
  std::string name;
  std::string contents;
};

struct Outcome {
  std::vector<Output> files;
  int status = 0;
};

QuadratureOptions quadrature(const RunConfig& c) {
  QuadratureOptions q;
  q.tolerance = c.tolerance;
  return q;
}


// The walk named by --walk: the kernel itself or its symmetrization.
Kernel chosen_walk(const RunConfig& c) {
  const Kernel k = c.make();
  return c.walk == "symmetrization" ? symmetrize(k) : k;
}

std::string describe_green(const GreenValues& g) {
  return "G_inf " + format_double(g.green) + ", H_inf " + format_double(g.green_t) +
         (g.recurrent ? ", recurrent" : ", transient");
}

Outcome run_kernel(const RunConfig& c) {
  const Kernel walk = chosen_walk(c);
  const auto grid = geometric_grid(c.horizon, c.per_decade);
  const auto opts = quadrature(c);
  bool hit = false;
  const ReturnCurve curve = c.cache ? cached_return_curve(CurveCache(CurveCache::default_directory()), walk, grid,
                                                          std::nullopt, opts, &hit)
                                    : return_curve(walk, grid, std::nullopt, opts);
  CsvTable table({"t", "p"});
  table.comment("kernel " + c.kernel + ", walk " + c.walk + ", tolerance " + format_double(curve.tolerance()));
  if (const auto& tail = curve.tail()) {
    table.comment("tail c " + format_double(tail->c) + (tail->c_analytic ? " (analytic)" : " (fitted)") + ", alpha " +
                  format_double(tail->alpha) + (tail->alpha_analytic ? " (analytic)" : " (fitted)"));
  }
  if (walk.discarded_tail_mass() > 0.0) table.comment("discarded tail mass " + format_double(walk.discarded_tail_mass()));
  table.comment(describe_green(green_values(walk, std::nullopt, opts)));
  for (std::size_t i = 0; i < curve.times().size(); ++i) {
    table.row({format_double(curve.times()[i]), format_double(curve.values()[i])});
  }
  return {{{"return_curve.csv", table.str()}}};
}

Outcome run_volterra(const RunConfig& c) {
  const LatticeReturn f(chosen_walk(c), std::nullopt, quadrature(c));
  const auto g = volterra_solve(f, c.kappa, c.horizon, {c.step, true, true}, c.walk);
  CsvTable table({"t", "g", "residual"});
  table.comment("kernel " + c.kernel + ", walk " + c.walk + ", kappa " + format_double(c.kappa) + ", step " +
                format_double(g.step()) + ", max richardson error " + format_double(g.max_error()));
  for (std::size_t i = 0; i < g.times().size(); ++i) {
    table.row({format_double(g.times()[i]), format_double(g.values()[i]), format_double(g.residuals()[i])});
  }
  return {{{"moment_curve.csv", table.str()}}};
}

// With rho != 0 the model rate gamma2(kappa, rho) = r_bar(kappa rho); otherwise r(kappa) of --walk.
Outcome run_lyapunov(const RunConfig& c) {
  const Kernel k = c.make();
  const bool model = c.rho != 0.0;
  const Kernel walk = model ? symmetrize(k) : chosen_walk(c);
  const LatticeReturn f(walk, std::nullopt, quadrature(c));
  std::optional<TailParameters> tail;
  try {
    if (auto t = walk.analytic_tail(); t && t->c_analytic) {
      const auto& gv = f.green_values_cached();
      tail = TailParameters{t->c, t->alpha, gv.green, gv.green_t};
    } else if (model) {
      tail = symmetrized_tail(k);
    }
  } catch (const Error&) {
  }
  const auto kappas = parse_grid(c.kappa_grid);
  CsvTable table({"kappa", "r", "regime", "prediction"});
  const double green = f.green();
  const double scale = model ? c.rho : 1.0;
  table.comment("kernel " + c.kernel + (model ? ", gamma2 at rho " + format_double(c.rho) : ", walk " + c.walk) +
                ", kappa_cr " + format_double(model ? (c.rho > 0.0 ? 1.0 / (c.rho * green) : INFINITY) : 1.0 / green));
  for (double kappa : kappas) {
    require(kappa > 0.0, ErrorCode::InvalidArgument, "kappa grid must be positive");
    const double x = kappa * scale;
    double r = 0.0;
    Regime regime = Regime::Subcritical;
    std::optional<double> prediction;
    if (x > 0.0) {
      r = lyapunov_rate(f, x);
      regime = classify_rate(x, green);
      if (tail) prediction = predicted_rate(*tail, x);
    } else {
      prediction = 0.0;
    }
    table.row({format_double(kappa), format_double(r), to_string(regime),
               prediction ? format_double(*prediction) : "nan"});
  }
  return {{{"lyapunov.csv", table.str()}}};
}

Outcome run_moments(const RunConfig& c) {
  const ModelParams p{c.make(), c.kappa, c.rho};
  const auto rep = second_moments(p, c.horizon, {c.step, true, false});
  const nlohmann::json verdict{{"kappa", c.kappa},
                               {"rho", c.rho},
                               {"kappa_cr", rep.intermittency.kappa_cr},
                               {"gamma2", rep.intermittency.gamma2},
                               {"verdict", to_string(rep.intermittency.verdict)}};
  CsvTable table({"t", "Euv", "Eu2"});
  table.comment("kernel " + c.kernel + ", verdict " + verdict.dump());
  table.comment("asymptote " + rep.asymptote);
  for (std::size_t i = 0; i < rep.t.size(); ++i) {
    table.row({format_double(rep.t[i]), format_double(rep.mixed[i]), format_double(rep.second[i])});
  }
  return {{{"moments.csv", table.str()}, {"verdict.json", verdict.dump(2) + "\n"}}};
}

std::vector<double> parse_list(const std::string& text) { return parse_grid(text); }

Outcome run_aging(const RunConfig& c) {
  const auto rep = aging_sweep(c.make(), parse_model(c.model, c.rho), c.kappa,
                               c.scaling == "log" ? AgingScaling::Logarithmic : AgingScaling::Linear,
                               parse_list(c.a_list), parse_list(c.t_list));
  return {{{"aging.csv", rep.csv()}}};
}

Outcome run_simulate(const RunConfig& c) {
  const Kernel k = c.make();
  nlohmann::json doc;
  if (c.mode == "lattice") {
    SimConfig s;
    s.kernel = k;
    s.side = c.side;
    s.dt = c.dt;
    s.horizon = c.horizon;
    s.kappa = c.kappa;
    s.rho = c.rho;
    s.replicas = c.replicas;
    s.seed = c.seed;
    s.clamp = c.clamp;
    s.u0 = c.u0;
    s.v0 = c.v0;
    s.threads = c.threads;
    const auto res = simulate_lattice(s, parse_observables(c.observables, c.lag));
    doc = {{"mode", "lattice"},
           {"results", res.to_json()},
           {"max_sum_drift", res.max_sum_drift},
           {"max_difference", res.max_difference},
           {"clamped_updates", res.clamped}};
  } else if (c.mode == "dual") {
    const auto res = simulate_dual_pair(k, c.kappa, c.rho, c.horizon,
                                        c.start == "same" ? PairStart::Same : PairStart::Different, c.replicas,
                                        c.seed, c.threads);
    doc = {{"mode", "dual"}, {"results", res.to_json()}};
  } else {
    const auto res = simulate_coalescing_dual(k, c.kappa, c.w, c.horizon, c.replicas, c.seed, c.threads);
    doc = {{"mode", "coalescing"}, {"results", res.to_json()}};
  }
  return {{{"simulation.json", doc.dump(2) + "\n"}}};
}

Outcome run_validate(const RunConfig& c) {
  const auto criteria = c.suite == "full" ? acceptance_criteria() : quick_criteria();
  CsvTable table({"id", "check", "status", "seconds", "detail"});
  table.comment("suite " + c.suite);
  bool ok = true;
  for (const auto& crit : criteria) {
    const auto r = run_criterion(crit);
    ok = ok && r.passed;
    char secs[32];
    std::snprintf(secs, sizeof secs, "%.2f", r.seconds);
    std::string detail = r.detail;
    for (auto& ch : detail) {
      if (ch == ',') ch = ' ';
    }
    table.row({std::to_string(r.id), r.name, r.passed ? "PASS" : "FAIL", secs, detail});
    std::cerr << (r.passed ? "PASS " : "FAIL ") << r.id << ' ' << r.name << '\n';
  }
  return {{{"validation.csv", table.str()}}, ok ? 0 : 2};
}

Outcome dispatch(const RunConfig& c) {
  if (c.command == "kernel") return run_kernel(c);
  if (c.command == "volterra") return run_volterra(c);
  if (c.command == "lyapunov") return run_lyapunov(c);
  if (c.command == "moments") return run_moments(c);
  if (c.command == "aging") return run_aging(c);
  if (c.command == "simulate") return run_simulate(c);
  return run_validate(c);
}

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

// Binds one flag to a field of `flags`; apply() copies it onto the base config when given.
class FlagSet {
 public:
  template <class T>
  void add(CLI::App& app, const std::string& name, T RunConfig::*field, const std::string& help) {
    auto* opt = app.add_option(name, flags_.*field, help);
    bindings_.push_back({opt, [field](RunConfig& dst, const RunConfig& src) { dst.*field = src.*field; }});
  }
  void add_switch(CLI::App& app, const std::string& name, bool RunConfig::*field, bool value, const std::string& help) {
    auto* opt = app.add_flag(name, help);
    bindings_.push_back({opt, [field, value](RunConfig& dst, const RunConfig&) { dst.*field = value; }});
  }
  void apply(RunConfig& dst) const {
    for (const auto& b : bindings_) {
      if (b.option->count() > 0) b.copy(dst, flags_);
    }
  }

 private:
  struct Binding {
    CLI::Option* option;
    std::function<void(RunConfig&, const RunConfig&)> copy;
  };
  RunConfig flags_;
  std::vector<Binding> bindings_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"symbranch: second moments, growth rates and aging of the symbiotic branching model"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.fallthrough();

  FlagSet flags;
  std::string config_path;
  app.add_option("--config", config_path, "JSON configuration; flags take precedence")->check(CLI::ExistingFile);
  flags.add(app, "--kernel", &RunConfig::kernel, "kernel spec, e.g. laplacian:d=3 or riemann:beta=0.5,radius=1000");
  flags.add(app, "--walk", &RunConfig::walk, "base | symmetrization");
  flags.add(app, "--kappa", &RunConfig::kappa, "branching rate");
  flags.add(app, "--rho", &RunConfig::rho, "noise correlation in [-1, 1]");
  flags.add(app, "--model", &RunConfig::model,
            "symbiotic | anderson | superRW | steppingstone:w=W | bounded:lower=A,upper=B");
  flags.add(app, "-T,--horizon", &RunConfig::horizon, "time horizon");
  flags.add(app, "--step", &RunConfig::step, "Volterra step (0: default)");
  flags.add(app, "--tol", &RunConfig::tolerance, "return-probability tolerance (0: default)");
  flags.add(app, "--per-decade", &RunConfig::per_decade, "grid points per decade for return curves");
  flags.add(app, "--kappa-grid", &RunConfig::kappa_grid, "start:stop:step or comma list");
  flags.add(app, "--a-list", &RunConfig::a_list, "aging scaling parameters");
  flags.add(app, "--t-list", &RunConfig::t_list, "aging base times");
  flags.add(app, "--scaling", &RunConfig::scaling, "linear (s = a t) | log (log s / log t = a)");
  flags.add(app, "--mode", &RunConfig::mode, "simulate: lattice | dual | coalescing");
  flags.add(app, "--start", &RunConfig::start, "dual pair start type: same | different");
  flags.add(app, "--observables", &RunConfig::observables, "mean,second,mixed,correlation");
  flags.add(app, "--lag", &RunConfig::lag, "lag s for the correlation observable");
  flags.add(app, "--w", &RunConfig::w, "stepping stone initial value");
  flags.add(app, "--side", &RunConfig::side, "torus side length");
  flags.add(app, "--dt", &RunConfig::dt, "Euler-Maruyama step");
  flags.add(app, "--replicas", &RunConfig::replicas, "Monte Carlo replicas");
  flags.add(app, "--seed", &RunConfig::seed, "master seed");
  flags.add_switch(app, "--no-clamp", &RunConfig::clamp, false, "do not clamp negative u v");
  flags.add(app, "--u0", &RunConfig::u0, "initial u");
  flags.add(app, "--v0", &RunConfig::v0, "initial v");
  flags.add(app, "--threads", &RunConfig::threads, "worker threads (0: all cores)");
  flags.add(app, "--suite", &RunConfig::suite, "validate: quick | full");
  flags.add(app, "--out", &RunConfig::out, "output directory (default: stdout)");
  flags.add_switch(app, "--no-cache", &RunConfig::cache, false, "skip the return-curve cache");

  const std::vector<std::pair<std::string, std::string>> commands{
      {"kernel", "return probabilities, tail and Green values of a walk"},
      {"volterra", "g(t) = E[exp(kappa L_t)] from the renewal equation"},
      {"lyapunov", "growth rates over a kappa grid"},
      {"moments", "E[uv], E[u^2] and the intermittency verdict"},
      {"aging", "two-time correlations against their large-time limits"},
      {"simulate", "Monte Carlo estimates (lattice scheme or particle duals)"},
      {"validate", "cross-oracle validation suite"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const auto started = std::chrono::steady_clock::now();
  try {
    RunConfig cfg;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::InvalidConfig, std::string("cannot parse ") + config_path + ": " + e.what());
      }
      cfg = RunConfig::from_json(j);
    }
    flags.apply(cfg);
    cfg.command = app.get_subcommands().front()->get_name();
    cfg.validate();

    const Outcome out = dispatch(cfg);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (cfg.out.empty()) {
      // The first file is the primary table; the rest repeat its comment lines as JSON.
      if (!out.files.empty()) std::cout << out.files.front().contents;
    } else {
      const fs::path dir(cfg.out);
      fs::create_directories(dir);
      nlohmann::json files = nlohmann::json::array();
      for (const auto& f : out.files) {
        write_atomic(dir / f.name, f.contents);
        files.push_back(f.name);
      }
      const nlohmann::json provenance{{"config", cfg.to_json()},
                                      {"version", kVersion},
                                      {"wall_time_seconds", wall},
                                      {"written_utc", utc_now()},
                                      {"files", files}};
      write_atomic(dir / "provenance.json", provenance.dump(2) + "\n");
    }
    return out.status;
  } catch (const std::exception& e) {
    std::cerr << "symbranch: " << e.what() << '\n';
    return 1;
  }
}
