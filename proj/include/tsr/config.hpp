#pragma once

// JSON configs for multiports and full pipeline runs. Angles are in degrees.
//
// Multiport:
//   {"dim": 4, "kind": "asymmetric", "offset_deg": 0}
//   {"dim": 3, "kind": "symmetric"}
//   {"dim": 2, "kind": "elements", "elements": [
//      {"kind": "beamsplitter", "modes": [0, 1], "parameter": 0.5},
//      {"kind": "phase", "modes": [1], "parameter": 90},
//      {"kind": "swap", "modes": [0, 1]}]}
//
// Run: see RunConfig below and the README.

#include <cmath>
#include <filesystem>
#include <numbers>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsr/classical_sim.hpp"
#include "tsr/errors.hpp"
#include "tsr/io.hpp"
#include "tsr/metrology.hpp"
#include "tsr/multiport.hpp"

namespace tsr::config {

using json = nlohmann::json;

inline double deg_to_rad(double d) { return d * std::numbers::pi / 180.0; }
inline double rad_to_deg(double r) { return r * 180.0 / std::numbers::pi; }

inline json parse_json(const std::string& text, const std::string& origin = "config") {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

template <class T>
T get(const json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key)) throw ConfigError(ctx + ": missing key '" + key + "'");
  if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
    if (!j.at(key).is_number_unsigned())
      throw ConfigError(ctx + ": key '" + std::string(key) + "' must be a non-negative integer");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(ctx + ": key '" + std::string(key) + "' has the wrong type");
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& ctx) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return get<T>(j, key, ctx);
}

inline void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& ctx) {
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* name : known) ok = ok || k == name;
    if (!ok) throw ConfigError(ctx + ": unknown key '" + k + "'");
  }
}

// ---------------------------------------------------------------------------
// Multiport

enum class MultiportKind { symmetric, asymmetric, elements };

struct MultiportSpec {
  std::size_t dim = 3;
  MultiportKind kind = MultiportKind::symmetric;
  double offset = 0.0;  // radians
  std::vector<OpticalElement> elements;

  /// DFT for odd N, the asymmetric multiport for even N.
  static MultiportSpec canonical(std::size_t n) {
    MultiportSpec s;
    s.dim = n;
    s.kind = n % 2 ? MultiportKind::symmetric : MultiportKind::asymmetric;
    return s;
  }

  ModeUnitary build() const {
    switch (kind) {
      case MultiportKind::symmetric:
        return symmetric_multiport(dim);
      case MultiportKind::asymmetric:
        return asymmetric_multiport(dim, offset);
      case MultiportKind::elements:
        return compose(elements, dim);
    }
    throw ConfigError("multiport: unknown kind");
  }
};

inline MultiportKind parse_kind(const std::string& s) {
  if (s == "symmetric") return MultiportKind::symmetric;
  if (s == "asymmetric") return MultiportKind::asymmetric;
  if (s == "elements" || s == "element-list") return MultiportKind::elements;
  throw ConfigError("multiport: kind must be symmetric, asymmetric or elements, got '" + s + "'");
}

inline OpticalElement parse_element(const json& e, std::size_t index) {
  const std::string ctx = "multiport element " + std::to_string(index);
  if (!e.is_object()) throw ConfigError(ctx + ": expected an object");
  reject_unknown(e, {"kind", "modes", "parameter"}, ctx);
  const auto kind = get<std::string>(e, "kind", ctx);
  const auto modes = get<std::vector<std::size_t>>(e, "modes", ctx);
  auto need = [&](std::size_t count) {
    if (modes.size() != count) throw ConfigError(ctx + ": '" + kind + "' takes " + std::to_string(count) + " modes");
  };
  if (kind == "beamsplitter") {
    need(2);
    return Beamsplitter{modes[0], modes[1], get_or<double>(e, "parameter", 0.5, ctx)};
  }
  if (kind == "phase") {
    need(1);
    return PhaseShifter{modes[0], deg_to_rad(get<double>(e, "parameter", ctx))};
  }
  if (kind == "swap") {
    need(2);
    return ModeSwap{modes[0], modes[1]};
  }
  throw ConfigError(ctx + ": kind must be beamsplitter, phase or swap, got '" + kind + "'");
}

inline MultiportSpec parse_multiport(const json& j) {
  const std::string ctx = "multiport";
  if (!j.is_object()) throw ConfigError(ctx + ": expected an object");
  reject_unknown(j, {"dim", "kind", "offset_deg", "elements"}, ctx);
  MultiportSpec s;
  s.dim = get<std::size_t>(j, "dim", ctx);
  if (s.dim < 2) throw ConfigError(ctx + ": dim must be at least 2");
  s.kind = parse_kind(get<std::string>(j, "kind", ctx));
  s.offset = deg_to_rad(get_or<double>(j, "offset_deg", 0.0, ctx));
  if (s.kind == MultiportKind::elements) {
    const json& list = j.contains("elements") ? j.at("elements") : json::array();
    if (!list.is_array()) throw ConfigError(ctx + ": 'elements' must be a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      s.elements.push_back(parse_element(list[i], i));
      validate(s.elements.back(), s.dim);
    }
  } else if (j.contains("elements")) {
    throw ConfigError(ctx + ": 'elements' is only valid with kind 'elements'");
  }
  return s;
}

inline MultiportSpec load_multiport(const std::filesystem::path& path) {
  return parse_multiport(parse_json(io::read_file(path), path.string()));
}

// ---------------------------------------------------------------------------
// Run config

enum class ExperimentKind { classical, quantum_forward, quantum_reversed };

inline ExperimentKind parse_experiment(const std::string& s) {
  if (s == "classical") return ExperimentKind::classical;
  if (s == "quantum-forward") return ExperimentKind::quantum_forward;
  if (s == "quantum-reversed") return ExperimentKind::quantum_reversed;
  throw ConfigError("experiment must be classical, quantum-forward or quantum-reversed, got '" + s + "'");
}

struct GridSpec {
  double start = 0.0;  // radians
  double stop = 2.0 * std::numbers::pi;
  std::size_t points = 72;

  std::vector<double> phis() const { return phase_grid(start, stop, points); }
};

struct SensitivitySpec {
  std::optional<double> visibility;  // empty: take the fitted coincidence visibility
  double efficiency = 1.0;
  double delta_a = kWorstCaseObservableSigma;
  std::optional<double> phi;  // radians; empty: pi/(2N)
  double wavelength_nm = 632.8;
};

struct OutputPaths {
  std::string dataset = "dataset.csv";
  std::string fit_report = "fit_report.txt";
  std::string overlay = "overlay.csv";
  std::string sensitivity = "sensitivity.txt";
  std::string plot = "dataset.svg";
  std::string scan = "scan.csv";
};

struct RunConfig {
  ExperimentKind experiment = ExperimentKind::classical;
  std::size_t n = 3;
  MultiportSpec multiport = MultiportSpec::canonical(3);
  GridSpec grid;
  double mu = 0.05;
  std::uint64_t windows = 1;
  std::uint64_t seed = 1;
  std::vector<double> visibility;
  SensitivitySpec sensitivity;
  OutputPaths outputs;
  std::size_t jobs = 1;

  ScanConfig scan_config() const { return {grid.phis(), mu, windows, seed, visibility}; }
};

/// Window count per grid point for an experiment's default dwell time.
inline std::uint64_t default_windows(std::size_t n) {
  const auto d = experiment_defaults(n);
  return static_cast<std::uint64_t>(std::llround(d.dwell_seconds / d.window_seconds));
}

/// `base_dir` resolves a relative "multiport_path".
inline RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir = {}) {
  const std::string ctx = "run config";
  if (!j.is_object()) throw ConfigError(ctx + ": expected an object");
  reject_unknown(j,
                 {"experiment", "n", "multiport", "multiport_path", "grid", "mu", "windows", "seed", "visibility",
                  "sensitivity", "outputs", "jobs"},
                 ctx);
  RunConfig c;
  c.experiment = parse_experiment(get_or<std::string>(j, "experiment", "classical", ctx));
  c.n = get<std::size_t>(j, "n", ctx);
  if (c.n < 2) throw ConfigError(ctx + ": n must be at least 2");

  if (j.contains("multiport") && j.contains("multiport_path"))
    throw ConfigError(ctx + ": give either 'multiport' or 'multiport_path', not both");
  if (j.contains("multiport")) {
    c.multiport = parse_multiport(j.at("multiport"));
  } else if (j.contains("multiport_path")) {
    std::filesystem::path p = get<std::string>(j, "multiport_path", ctx);
    if (p.is_relative()) p = base_dir / p;
    c.multiport = load_multiport(p);
  } else {
    c.multiport = MultiportSpec::canonical(c.n);
  }
  if (c.multiport.dim != c.n) throw ConfigError(ctx + ": multiport dim must equal n");

  if (j.contains("grid")) {
    const json& g = j.at("grid");
    const std::string gctx = ctx + ".grid";
    if (!g.is_object()) throw ConfigError(gctx + ": expected an object");
    reject_unknown(g, {"start_deg", "stop_deg", "points"}, gctx);
    c.grid.start = deg_to_rad(get_or<double>(g, "start_deg", 0.0, gctx));
    c.grid.stop = deg_to_rad(get_or<double>(g, "stop_deg", 360.0, gctx));
    c.grid.points = get_or<std::size_t>(g, "points", 72, gctx);
  }
  if (c.grid.points < 2) throw ConfigError(ctx + ": grid needs at least 2 points");

  const auto defaults = experiment_defaults(c.n);
  c.mu = get_or<double>(j, "mu", defaults.mu, ctx);
  c.windows = get_or<std::uint64_t>(j, "windows", default_windows(c.n), ctx);
  c.seed = get_or<std::uint64_t>(j, "seed", 1, ctx);
  c.visibility = get_or<std::vector<double>>(j, "visibility", {}, ctx);
  c.jobs = get_or<std::size_t>(j, "jobs", 1, ctx);

  if (j.contains("sensitivity")) {
    const json& s = j.at("sensitivity");
    const std::string sctx = ctx + ".sensitivity";
    if (!s.is_object()) throw ConfigError(sctx + ": expected an object");
    reject_unknown(s, {"visibility", "efficiency", "delta_a", "phi_deg", "wavelength_nm"}, sctx);
    if (s.contains("visibility") && !s.at("visibility").is_null())
      c.sensitivity.visibility = get<double>(s, "visibility", sctx);
    c.sensitivity.efficiency = get_or<double>(s, "efficiency", 1.0, sctx);
    c.sensitivity.delta_a = get_or<double>(s, "delta_a", kWorstCaseObservableSigma, sctx);
    if (s.contains("phi_deg") && !s.at("phi_deg").is_null())
      c.sensitivity.phi = deg_to_rad(get<double>(s, "phi_deg", sctx));
    c.sensitivity.wavelength_nm = get_or<double>(s, "wavelength_nm", 632.8, sctx);
  }

  if (j.contains("outputs")) {
    const json& o = j.at("outputs");
    const std::string octx = ctx + ".outputs";
    if (!o.is_object()) throw ConfigError(octx + ": expected an object");
    reject_unknown(o, {"dataset", "fit_report", "overlay", "sensitivity", "plot", "scan"}, octx);
    c.outputs.dataset = get_or<std::string>(o, "dataset", c.outputs.dataset, octx);
    c.outputs.fit_report = get_or<std::string>(o, "fit_report", c.outputs.fit_report, octx);
    c.outputs.overlay = get_or<std::string>(o, "overlay", c.outputs.overlay, octx);
    c.outputs.sensitivity = get_or<std::string>(o, "sensitivity", c.outputs.sensitivity, octx);
    c.outputs.plot = get_or<std::string>(o, "plot", c.outputs.plot, octx);
    c.outputs.scan = get_or<std::string>(o, "scan", c.outputs.scan, octx);
  }
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(parse_json(io::read_file(path), path.string()), path.parent_path());
}

}  // namespace tsr::config
