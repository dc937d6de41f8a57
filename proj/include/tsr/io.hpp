#pragma once

// Versioned CSV files, text reports and atomic file output.
//
// Every CSV begins with a comment line "# tsr-csv <kind> v<version>"; readers
// reject other kinds and unknown versions. Numbers use '.' decimals and are
// printed with %.17g so values round-trip.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <unistd.h>

#include "tsr/classical_sim.hpp"
#include "tsr/errors.hpp"
#include "tsr/fringe_fit.hpp"
#include "tsr/metrology.hpp"
#include "tsr/multiport.hpp"
#include "tsr/quantum_sim.hpp"

namespace tsr::io {

inline constexpr int kCsvVersion = 1;

inline std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string short_num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

/// Writes `content` to a sibling temporary file, then renames it over `path`.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot move output into place at " + path.string() + ": " + ec.message());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Generic table

struct Table {
  std::string kind;
  int version = kCsvVersion;
  std::vector<std::string> comments;  // extra '#' lines after the version line
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::ptrdiff_t find(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return static_cast<std::ptrdiff_t>(i);
    return -1;
  }

  std::size_t require(std::string_view name) const {
    const auto i = find(name);
    if (i < 0) throw ConfigError("CSV schema error: missing column '" + std::string(name) + "'");
    return static_cast<std::size_t>(i);
  }

  std::vector<double> column(std::size_t i) const {
    std::vector<double> c;
    c.reserve(rows.size());
    for (const auto& r : rows) c.push_back(r[i]);
    return c;
  }
};

inline std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string format_table(const Table& t) {
  std::string s = "# tsr-csv " + t.kind + " v" + std::to_string(t.version) + "\n";
  for (const auto& c : t.comments) s += "# " + c + "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) s += (i ? "," : "") + t.columns[i];
  s += "\n";
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + num(r[i]);
    s += "\n";
  }
  return s;
}

inline double parse_double(const std::string& cell, std::size_t line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != cell.size())
    throw ConfigError("CSV parse error on line " + std::to_string(line) + ": bad number '" + cell + "'");
  return v;
}

/// Parses a tsr CSV. `expected_kind` empty accepts any kind.
inline Table parse_table(const std::string& text, std::string_view expected_kind = {}) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  Table t;
  if (!std::getline(in, line)) throw ConfigError("CSV parse error: empty file");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto head = split(line, ' ');
  if (head.size() != 4 || head[0] != "#" || head[1] != "tsr-csv" || head[3].size() < 2 || head[3][0] != 'v')
    throw ConfigError("CSV schema error: missing '# tsr-csv <kind> v<N>' header line");
  t.kind = head[2];
  try {
    t.version = std::stoi(head[3].substr(1));
  } catch (const std::exception&) {
    throw ConfigError("CSV schema error: bad version '" + head[3] + "'");
  }
  if (t.version != kCsvVersion)
    throw ConfigError("CSV schema error: unsupported version v" + std::to_string(t.version));
  if (!expected_kind.empty() && t.kind != expected_kind)
    throw ConfigError("CSV schema error: expected a '" + std::string(expected_kind) + "' file, got '" + t.kind + "'");

  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      t.comments.push_back(line.size() > 2 ? line.substr(2) : std::string{});
      continue;
    }
    if (!have_header) {
      t.columns = split(line, ',');
      have_header = true;
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() != t.columns.size())
      throw ConfigError("CSV parse error on line " + std::to_string(lineno) + ": expected " +
                        std::to_string(t.columns.size()) + " cells");
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_double(c, lineno));
    t.rows.push_back(std::move(row));
  }
  if (!have_header) throw ConfigError("CSV schema error: no column header");
  return t;
}

// ---------------------------------------------------------------------------
// Fringe dataset: phi_rad, s1..sN, coinc, sigma_s1..sigma_sN, sigma_coinc

inline Table dataset_table(const FringeDataset& d) {
  Table t;
  t.kind = "fringe-dataset";
  const std::size_t n = d.detectors();
  t.columns.push_back("phi_rad");
  for (std::size_t k = 1; k <= n; ++k) t.columns.push_back("s" + std::to_string(k));
  t.columns.push_back("coinc");
  for (std::size_t k = 1; k <= n; ++k) t.columns.push_back("sigma_s" + std::to_string(k));
  t.columns.push_back("sigma_coinc");
  for (std::size_t i = 0; i < d.points(); ++i) {
    std::vector<double> r{d.phis[i]};
    for (std::size_t k = 0; k < n; ++k) r.push_back(static_cast<double>(d.singles[k][i]));
    r.push_back(static_cast<double>(d.coincidences[i]));
    for (std::size_t k = 0; k < n; ++k) r.push_back(FringeDataset::sigma(d.singles[k][i]));
    r.push_back(FringeDataset::sigma(d.coincidences[i]));
    t.rows.push_back(std::move(r));
  }
  return t;
}

inline std::string format_dataset(const FringeDataset& d) { return format_table(dataset_table(d)); }

inline std::int64_t as_count(double x, const std::string& column) {
  if (!(x >= 0.0) || x != std::floor(x) || x > 9.0e15)
    throw ConfigError("CSV schema error: column '" + column + "' must hold non-negative integer counts");
  return static_cast<std::int64_t>(x);
}

inline FringeDataset parse_dataset(const std::string& text) {
  const Table t = parse_table(text, "fringe-dataset");
  std::size_t n = 0;
  while (t.find("s" + std::to_string(n + 1)) >= 0) ++n;
  if (n == 0) throw ConfigError("CSV schema error: no singles columns s1..sN");
  FringeDataset d;
  const auto phi = t.require("phi_rad");
  const auto coinc = t.require("coinc");
  const auto sigma_coinc = t.require("sigma_coinc");
  std::vector<std::size_t> s, ss;
  for (std::size_t k = 1; k <= n; ++k) {
    s.push_back(t.require("s" + std::to_string(k)));
    ss.push_back(t.require("sigma_s" + std::to_string(k)));
  }
  d.singles.assign(n, {});
  auto check_sigma = [](double sigma, std::int64_t count, const std::string& col) {
    if (std::abs(sigma - FringeDataset::sigma(count)) > 1e-9 * std::max(1.0, sigma))
      throw ConfigError("CSV schema error: '" + col + "' is not sqrt(count)");
  };
  for (const auto& r : t.rows) {
    d.phis.push_back(r[phi]);
    for (std::size_t k = 0; k < n; ++k) {
      const auto c = as_count(r[s[k]], t.columns[s[k]]);
      check_sigma(r[ss[k]], c, t.columns[ss[k]]);
      d.singles[k].push_back(c);
    }
    const auto c = as_count(r[coinc], "coinc");
    check_sigma(r[sigma_coinc], c, "sigma_coinc");
    d.coincidences.push_back(c);
  }
  d.validate();
  return d;
}

// ---------------------------------------------------------------------------
// Unitary dump: one row per matrix row, "re,im" pairs per cell.

inline std::string format_unitary(const ModeUnitary& u) {
  Table t;
  t.kind = "unitary";
  t.comments.push_back("dim=" + std::to_string(u.dim()));
  for (std::size_t k = 0; k < u.dim(); ++k) {
    t.columns.push_back("re_" + std::to_string(k));
    t.columns.push_back("im_" + std::to_string(k));
  }
  for (std::size_t j = 0; j < u.dim(); ++j) {
    std::vector<double> r;
    for (std::size_t k = 0; k < u.dim(); ++k) {
      r.push_back(u(j, k).real());
      r.push_back(u(j, k).imag());
    }
    t.rows.push_back(std::move(r));
  }
  return format_table(t) + "# unitarity_residual=" + num(u.residual()) + "\n";
}

inline ModeUnitary parse_unitary(const std::string& text) {
  const Table t = parse_table(text, "unitary");
  const std::size_t n = t.rows.size();
  if (n == 0 || t.columns.size() != 2 * n) throw ConfigError("unitary CSV: expected N rows of 2N values");
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k)
      m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = complex(t.rows[j][2 * k], t.rows[j][2 * k + 1]);
  return ModeUnitary(std::move(m));
}

// ---------------------------------------------------------------------------
// Probability scans

struct ScanRow {
  double phi = 0.0;
  std::vector<double> singles;
  double coincidence = 0.0;
  std::optional<QuantumScanPoint> quantum;
};

inline std::string format_scan(const std::vector<ScanRow>& rows, std::size_t detectors, bool quantum) {
  Table t;
  t.kind = "scan";
  t.columns.push_back("phi_rad");
  for (std::size_t k = 1; k <= detectors; ++k) t.columns.push_back("p" + std::to_string(k));
  t.columns.push_back("coinc");
  if (quantum) {
    t.columns.insert(t.columns.end(), {"forward", "reversed", "abs_diff"});
    double worst = 0.0;
    for (const auto& r : rows) worst = std::max(worst, std::abs(r.quantum->forward - r.quantum->reversed));
    t.comments.push_back("max_abs_diff=" + num(worst));
  }
  for (const auto& r : rows) {
    std::vector<double> v{r.phi};
    v.insert(v.end(), r.singles.begin(), r.singles.end());
    v.push_back(r.coincidence);
    if (quantum) {
      v.push_back(r.quantum->forward);
      v.push_back(r.quantum->reversed);
      v.push_back(std::abs(r.quantum->forward - r.quantum->reversed));
    }
    t.rows.push_back(std::move(v));
  }
  return format_table(t);
}

// ---------------------------------------------------------------------------
// Fit report: "name value sigma" per line; '-' marks quantities without an
// uncertainty.

inline constexpr std::string_view kFitReportHeader = "# tsr-report fit v1";

inline std::string format_fit_report(const DatasetFit& fit) {
  std::ostringstream s;
  auto line = [&](const std::string& name, double value, std::optional<double> sigma = std::nullopt) {
    s << name << ' ' << short_num(value) << ' ' << (sigma ? short_num(*sigma) : std::string("-")) << '\n';
  };
  constexpr double deg = 180.0 / std::numbers::pi;
  const auto& p = fit.product;
  s << kFitReportHeader << '\n';
  line("fringes", static_cast<double>(p.fringes.size()));
  line("converged", p.stats.converged ? 1 : 0);
  line("iterations", p.stats.iterations);
  line("at_bound", p.stats.at_bound ? 1 : 0);
  line("chi2", p.stats.chi2);
  line("reduced_chi2", p.stats.reduced_chi2);
  line("g", p.scale.value, p.scale.sigma);
  for (std::size_t i = 0; i < p.fringes.size(); ++i) {
    const auto id = std::to_string(i + 1);
    line("c" + id, p.fringes[i].offset);
    line("v" + id, p.fringes[i].visibility.value, p.fringes[i].visibility.sigma);
    line("delta" + id + "_deg", p.fringes[i].phase.value * deg, p.fringes[i].phase.sigma * deg);
  }
  const auto spacing = p.spacings();
  for (std::size_t i = 0; i < spacing.size(); ++i)
    line("spacing" + std::to_string(i + 1) + "_deg", spacing[i] * deg);
  for (std::size_t i = 0; i < fit.singles.size(); ++i) {
    const auto id = std::to_string(i + 1);
    const auto& f = fit.singles[i];
    line("singles" + id + "_c", f.offset.value, f.offset.sigma);
    line("singles" + id + "_v", f.visibility.value, f.visibility.sigma);
    line("singles" + id + "_delta_deg", f.phase.value * deg, f.phase.sigma * deg);
    line("singles" + id + "_reduced_chi2", f.stats.reduced_chi2);
  }
  const auto& cs = fit.coincidence_sinusoid;
  line("coinc_sinusoid_v", cs.visibility.value, cs.visibility.sigma);
  line("coinc_sinusoid_reduced_chi2", cs.stats.reduced_chi2);
  return s.str();
}

/// Reads "name value sigma" lines back into name -> (value, sigma).
inline std::map<std::string, std::pair<double, std::optional<double>>> parse_report(const std::string& text,
                                                                                  std::string_view header) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != header) throw ConfigError("report: unexpected header");
  std::map<std::string, std::pair<double, std::optional<double>>> out;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string name, value, sigma;
    ls >> name >> value >> sigma;
    if (name.empty() || value.empty()) throw ConfigError("report: malformed line '" + line + "'");
    std::optional<double> sig;
    if (!sigma.empty() && sigma != "-") sig = std::stod(sigma);
    out[name] = {std::stod(value), sig};
  }
  return out;
}

inline std::string format_overlay(const FringeDataset& d, const DatasetFit& fit,
                                  const std::vector<SinglesOverlay>& overlay) {
  Table t;
  t.kind = "overlay";
  t.columns = {"phi_rad", "model_coinc"};
  for (std::size_t k = 1; k <= overlay.size(); ++k) t.columns.push_back("overlay_s" + std::to_string(k));
  for (std::size_t i = 0; i < d.points(); ++i) {
    std::vector<double> r{d.phis[i], fit.product.value(d.phis[i])};
    for (const auto& o : overlay) r.push_back(o.curve[i]);
    t.rows.push_back(std::move(r));
  }
  return format_table(t);
}

// ---------------------------------------------------------------------------
// Sensitivity

inline constexpr std::string_view kSensitivityHeader = "# tsr-report sensitivity v1";

inline std::string format_sensitivity(const SensitivityReport& r) {
  std::ostringstream s;
  constexpr double deg = 180.0 / std::numbers::pi;
  auto line = [&](const std::string& name, double value) { s << name << ' ' << short_num(value) << " -\n"; };
  s << kSensitivityHeader << '\n';
  line("N", r.input.n);
  line("V", r.input.visibility);
  line("eta", r.input.efficiency);
  line("delta_A", r.input.delta_a);
  line("phi_deg", r.input.phi * deg);
  line("delta_phi", r.delta_phi);
  line("delta_phi_class", r.delta_phi_class);
  line("ratio", r.ratio);
  line("super_sensitive", r.super_sensitive ? 1 : 0);
  line("boundary", r.boundary ? 1 : 0);
  line("threshold_visibility", r.threshold_visibility);
  line("required_efficiency", r.required.value);
  line("required_efficiency_impossible", r.required.impossible ? 1 : 0);
  line("nondeterministic_possible", r.input.n >= 2 && nondeterministic_supersensitivity_possible(r.input.n) ? 1 : 0);
  line("preparation_efficiency", preparation_efficiency(r.input.n));
  line("wavelength_nm", r.wavelength_nm);
  line("equivalent_wavelength_nm", r.equivalent_wavelength_nm);
  std::string verdict = r.boundary ? "boundary" : (r.super_sensitive ? "super-sensitive" : "not-super-sensitive");
  s << "# verdict " << verdict << '\n';
  return s.str();
}

inline std::vector<std::string> sensitivity_columns() {
  return {"N", "V", "eta", "delta_A", "phi_deg", "delta_phi", "delta_phi_class", "ratio",
          "super_sensitive", "boundary", "threshold_visibility", "required_efficiency", "equivalent_wavelength_nm"};
}

inline std::vector<double> sensitivity_row(const SensitivityReport& r) {
  constexpr double deg = 180.0 / std::numbers::pi;
  return {static_cast<double>(r.input.n), r.input.visibility, r.input.efficiency, r.input.delta_a,
          r.input.phi * deg, r.delta_phi, r.delta_phi_class, r.ratio,
          r.super_sensitive ? 1.0 : 0.0, r.boundary ? 1.0 : 0.0, r.threshold_visibility,
          r.required.value, r.equivalent_wavelength_nm};
}

}  // namespace tsr::io
