#pragma once

// Return curves persisted one file per curve: '#'-prefixed header lines (kernel JSON, grid,
// tolerance, version) followed by a CSV body "t,p".

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "json.hpp"
#include "symbranch/io.hpp"
#include "symbranch/kernel_spec.hpp"
#include "symbranch/return_curve.hpp"
#include "symbranch/version.hpp"

namespace symbranch {

inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

class CurveCache {
 public:
  explicit CurveCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  // SYMBRANCH_CACHE_DIR, else $XDG_CACHE_HOME/symbranch, else ~/.cache/symbranch.
  static std::filesystem::path default_directory() {
    if (const char* env = std::getenv("SYMBRANCH_CACHE_DIR"); env && *env) return env;
    if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg && *xdg) return std::filesystem::path(xdg) / "symbranch";
    if (const char* home = std::getenv("HOME"); home && *home) return std::filesystem::path(home) / ".cache" / "symbranch";
    return std::filesystem::temp_directory_path() / "symbranch-cache";
  }

  const std::filesystem::path& directory() const noexcept { return dir_; }

  static nlohmann::json describe(const Kernel& k, const std::vector<double>& grid, std::optional<double> total_rate,
                                 double tolerance) {
    std::string grid_text;
    for (double t : grid) grid_text += format_double(t) + ';';
    return {{"kernel", kernel_to_json(k)},
            {"total_rate", total_rate ? *total_rate : k.total_rate()},
            {"tolerance", tolerance},
            {"grid_points", grid.size()},
            {"grid_hash", fnv1a(grid_text)},
            {"version", kVersion}};
  }

  std::filesystem::path path_for(const nlohmann::json& key) const {
    char name[32];
    std::snprintf(name, sizeof name, "%016llx.csv", (unsigned long long)fnv1a(key.dump()));
    return dir_ / name;
  }

  std::optional<ReturnCurve> load(const nlohmann::json& key) const {
    std::ifstream in(path_for(key));
    if (!in) return std::nullopt;
    std::string line;
    nlohmann::json header, tail;
    std::string kind = "base";
    std::vector<double> t, p;
    bool body = false;
    while (std::getline(in, line)) {
      if (line.rfind("# key: ", 0) == 0) {
        header = nlohmann::json::parse(line.substr(7), nullptr, false);
      } else if (line.rfind("# tail: ", 0) == 0) {
        tail = nlohmann::json::parse(line.substr(8), nullptr, false);
      } else if (line.rfind("# kind: ", 0) == 0) {
        kind = line.substr(8);
      } else if (!line.empty() && line[0] == '#') {
        continue;
      } else if (!body) {
        if (line != "t,p") return std::nullopt;
        body = true;
      } else {
        const auto comma = line.find(',');
        if (comma == std::string::npos) return std::nullopt;
        t.push_back(std::strtod(line.c_str(), nullptr));
        p.push_back(std::strtod(line.c_str() + comma + 1, nullptr));
      }
    }
    // Guards against hash collisions and stale files.
    if (header != key) return std::nullopt;
    std::optional<TailAsymptote> tail_value;
    if (tail.is_object()) {
      TailAsymptote ta;
      ta.c = tail.value("c", 0.0);
      ta.alpha = tail.value("alpha", 0.0);
      ta.c_analytic = tail.value("c_analytic", false);
      ta.alpha_analytic = tail.value("alpha_analytic", false);
      ta.fit_residual = tail.value("fit_residual", 0.0);
      tail_value = ta;
    }
    try {
      return ReturnCurve(std::move(t), std::move(p), tail_value,
                         kind == "symmetrization" ? WalkKind::Symmetrization : WalkKind::Base, key.value("tolerance", 0.0));
    } catch (const Error&) {
      return std::nullopt;
    }
  }

  void store(const nlohmann::json& key, const ReturnCurve& curve) const {
    std::filesystem::create_directories(dir_);
    std::ostringstream out;
    out << "# symbranch return curve\n";
    out << "# key: " << key.dump() << '\n';
    out << "# kind: " << to_string(curve.kind()) << '\n';
    if (curve.tail()) {
      const auto& ta = *curve.tail();
      nlohmann::json tail = {{"c", ta.c}, {"alpha", ta.alpha}, {"c_analytic", ta.c_analytic},
                             {"alpha_analytic", ta.alpha_analytic}, {"fit_residual", ta.fit_residual}};
      out << "# tail: " << tail.dump() << '\n';
    }
    out << "t,p\n";
    for (std::size_t i = 0; i < curve.times().size(); ++i) {
      out << format_double(curve.times()[i]) << ',' << format_double(curve.values()[i]) << '\n';
    }
    write_atomic(path_for(key), out.str());
  }

 private:
  std::filesystem::path dir_;
};

// Cached return_curve; a corrupt or mismatched file is recomputed and overwritten.
inline ReturnCurve cached_return_curve(const CurveCache& cache, const Kernel& k, const std::vector<double>& grid,
                                       std::optional<double> total_rate = std::nullopt, QuadratureOptions opts = {},
                                       bool* hit = nullptr) {
  const auto key = CurveCache::describe(k, grid, total_rate, opts.resolved_tolerance(k.dimension()));
  if (auto curve = cache.load(key)) {
    if (hit) *hit = true;
    return *curve;
  }
  if (hit) *hit = false;
  auto curve = return_curve(k, grid, total_rate, opts);
  cache.store(key, curve);
  return curve;
}

}  // namespace symbranch
