#pragma once

// Command implementations behind the tsr executable. Each writes its
// outputs atomically and throws tsr::Error subclasses on failure; the exit
// code is carried by the exception.

#include <algorithm>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "tsr/classical_sim.hpp"
#include "tsr/config.hpp"
#include "tsr/errors.hpp"
#include "tsr/fringe_fit.hpp"
#include "tsr/io.hpp"
#include "tsr/metrology.hpp"
#include "tsr/multiport.hpp"
#include "tsr/plot.hpp"
#include "tsr/quantum_sim.hpp"

namespace tsr::cmd {

namespace fs = std::filesystem;

inline ModeUnitary cmd_multiport(const config::MultiportSpec& spec, const fs::path& out) {
  const ModeUnitary u = spec.build();
  io::write_atomic(out, io::format_unitary(u));
  return u;
}

/// Per-output mean photon fraction in the reversed picture: all N photons of
/// the measured state share one mode, sent back through the interferometer.
inline std::vector<double> quantum_detector_fractions(const ModeUnitary& u, double phi) {
  const ModeUnitary w = with_phase(u, phi);
  const Matrix bs_dag = compose({Beamsplitter{0, 1, 0.5}}, u.dim()).adjoint().matrix();
  const Vector v = w.adjoint().matrix() * bs_dag.col(0);
  std::vector<double> p(u.dim());
  for (std::size_t k = 0; k < u.dim(); ++k) p[k] = std::norm(v(static_cast<Eigen::Index>(k)));
  return p;
}

inline std::vector<io::ScanRow> scan_rows(const config::RunConfig& cfg) {
  const ModeUnitary u = cfg.multiport.build();
  const auto phis = cfg.grid.phis();
  std::vector<io::ScanRow> rows(phis.size());
  if (cfg.experiment == config::ExperimentKind::classical) {
    const auto computed = parallel_map(phis.size(), cfg.jobs, [&](std::size_t i) {
      io::ScanRow r;
      r.phi = phis[i];
      r.singles = singles_probabilities(u, phis[i]);
      r.coincidence = 1.0;
      for (double p : r.singles) r.coincidence *= p;
      return r;
    });
    return computed;
  }
  const auto q = quantum_scan(u, phis, cfg.jobs);
  const bool forward = cfg.experiment == config::ExperimentKind::quantum_forward;
  for (std::size_t i = 0; i < phis.size(); ++i) {
    rows[i].phi = phis[i];
    rows[i].singles = quantum_detector_fractions(u, phis[i]);
    rows[i].coincidence = forward ? q[i].forward : q[i].reversed;
    rows[i].quantum = q[i];
  }
  return rows;
}

inline std::vector<io::ScanRow> cmd_scan(const config::RunConfig& cfg, const fs::path& out) {
  auto rows = scan_rows(cfg);
  const bool quantum = cfg.experiment != config::ExperimentKind::classical;
  io::write_atomic(out, io::format_scan(rows, cfg.multiport.dim, quantum));
  return rows;
}

inline SimulationResult cmd_simulate(const config::RunConfig& cfg, const fs::path& out, std::ostream& err) {
  const ModeUnitary u = cfg.multiport.build();
  auto res = simulate_counts(u, cfg.scan_config());
  if (res.saturated)
    err << "warning: mean photons per window reaches " << io::short_num(res.max_window_mean)
        << " at one detector (should stay <= 1)\n";
  io::write_atomic(out, io::format_dataset(res.data));
  return res;
}

struct FitRun {
  FringeDataset data;
  DatasetFit fit;
  bool converged = false;
};

/// Fits a dataset file. `n` of zero accepts any detector count. A product fit
/// that does not converge still writes both outputs; callers check `converged`.
inline FitRun cmd_fit(const fs::path& dataset, std::size_t n, const fs::path& report, const fs::path& overlay,
                      std::ostream& err, const FitOptions& opt = {}) {
  FitRun run;
  run.data = io::parse_dataset(io::read_file(dataset));
  if (n != 0 && run.data.detectors() != n)
    throw ConfigError("fit: dataset has " + std::to_string(run.data.detectors()) + " detectors, expected " +
                      std::to_string(n));
  run.fit = fit_dataset(run.data, opt);
  run.converged = run.fit.product.stats.converged;
  for (const auto& s : run.fit.singles) run.converged = run.converged && s.stats.converged;
  io::write_atomic(report, io::format_fit_report(run.fit));
  const auto curves = extract_singles_overlay(run.fit.product, run.data, opt.sigma_floor);
  io::write_atomic(overlay, io::format_overlay(run.data, run.fit, curves));
  if (!run.converged) err << "error: fit did not converge; report is partial\n";
  if (run.fit.product.stats.at_bound) err << "warning: a fitted visibility sits at the [0, 1] bound\n";
  return run;
}

inline SensitivityReport cmd_sensitivity(const SensitivityInput& in, double wavelength_nm,
                                         const fs::path& out = {}) {
  auto r = sensitivity_report(in, wavelength_nm);
  if (!out.empty()) io::write_atomic(out, io::format_sensitivity(r));
  return r;
}

/// Batch form: reads a "sensitivity-input" CSV (N, V, eta, delta_A, phi_deg;
/// the last two optional) and writes one "sensitivity" row per input row.
inline std::size_t cmd_sensitivity_batch(const fs::path& in, const fs::path& out, double wavelength_nm) {
  const io::Table t = io::parse_table(io::read_file(in), "sensitivity-input");
  const auto cn = t.require("N"), cv = t.require("V"), ce = t.require("eta");
  const auto ca = t.find("delta_A"), cp = t.find("phi_deg");
  io::Table o;
  o.kind = "sensitivity";
  o.columns = io::sensitivity_columns();
  for (const auto& row : t.rows) {
    SensitivityInput s;
    if (row[cn] != std::floor(row[cn]) || row[cn] < 1)
      throw ConfigError("sensitivity: N must be a positive integer");
    s.n = static_cast<int>(row[cn]);
    s.visibility = row[cv];
    s.efficiency = row[ce];
    if (ca >= 0) s.delta_a = row[static_cast<std::size_t>(ca)];
    s.phi = cp >= 0 ? config::deg_to_rad(row[static_cast<std::size_t>(cp)]) : SensitivityInput::optimal_phase(s.n);
    o.rows.push_back(io::sensitivity_row(sensitivity_report(s, wavelength_nm)));
  }
  io::write_atomic(out, io::format_table(o));
  return o.rows.size();
}

inline void cmd_plot(const fs::path& csv, const fs::path& svg) {
  const io::Table t = io::parse_table(io::read_file(csv));
  io::write_atomic(svg, plot::render_svg(t, csv.filename().string()));
}

struct PipelineResult {
  bool converged = true;
  SensitivityReport sensitivity;
};

/// simulate -> fit -> sensitivity (classical), or scan -> sensitivity
/// (quantum), writing every artifact into `out_dir`.
inline PipelineResult cmd_run(const config::RunConfig& cfg, const fs::path& out_dir, std::ostream& err) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  const auto& o = cfg.outputs;
  PipelineResult res;
  double fitted_visibility = 1.0;
  if (cfg.experiment == config::ExperimentKind::classical) {
    cmd_simulate(cfg, out_dir / o.dataset, err);
    cmd_plot(out_dir / o.dataset, out_dir / o.plot);
    const auto run = cmd_fit(out_dir / o.dataset, cfg.n, out_dir / o.fit_report, out_dir / o.overlay, err);
    res.converged = run.converged;
    fitted_visibility = run.fit.coincidence_sinusoid.visibility.value;
  } else {
    const auto rows = cmd_scan(cfg, out_dir / o.scan);
    cmd_plot(out_dir / o.scan, out_dir / o.plot);
    std::vector<double> phis, y;
    for (const auto& r : rows) {
      phis.push_back(r.phi);
      y.push_back(r.coincidence);
    }
    fitted_visibility = fit_cosine_fringe(phis, y, static_cast<double>(cfg.n)).visibility;
  }
  SensitivityInput in;
  in.n = static_cast<int>(cfg.n);
  in.visibility = std::clamp(cfg.sensitivity.visibility.value_or(fitted_visibility), 0.0, 1.0);
  in.efficiency = cfg.sensitivity.efficiency;
  in.delta_a = cfg.sensitivity.delta_a;
  in.phi = cfg.sensitivity.phi.value_or(SensitivityInput::optimal_phase(in.n));
  res.sensitivity = cmd_sensitivity(in, cfg.sensitivity.wavelength_nm, out_dir / o.sensitivity);
  return res;
}

}  // namespace tsr::cmd
