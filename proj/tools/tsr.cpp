// tsr: multiports, phase scans, count simulation, fringe fits, sensitivity
// reports and plots. Angles on the command line are in degrees.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "tsr/commands.hpp"

namespace {

using tsr::config::json;

// Flags shared by scan/simulate, merged over an optional run config file.
struct RunFlags {
  std::string config;
  std::string experiment;
  std::optional<std::size_t> n;
  std::string kind;
  std::optional<double> offset_deg;
  std::string multiport_config;
  std::optional<double> start_deg, stop_deg;
  std::optional<std::size_t> points;
  std::optional<double> mu;
  std::optional<std::uint64_t> windows;
  std::optional<std::uint64_t> seed;
  std::vector<double> visibility;
  std::optional<std::size_t> jobs;

  void attach(CLI::App* app, bool counts) {
    app->add_option("--config", config, "Run config (JSON); flags below override it");
    app->add_option("--n", n, "Number of modes / photons");
    app->add_option("--kind", kind, "Multiport kind: symmetric | asymmetric")
        ->check(CLI::IsMember({"symmetric", "asymmetric"}));
    app->add_option("--offset-deg", offset_deg, "Asymmetric multiport phase offset");
    app->add_option("--multiport-config", multiport_config, "Multiport config file (JSON)");
    app->add_option("--start-deg", start_deg, "Grid start (default 0)");
    app->add_option("--stop-deg", stop_deg, "Grid stop, exclusive (default 360)");
    app->add_option("--points", points, "Grid points (default 72)");
    app->add_option("--jobs", jobs, "Worker threads for scan points");
    if (counts) {
      app->add_option("--mu", mu, "Mean photons per window per detector (phase averaged)");
      app->add_option("--windows", windows, "Coincidence windows per grid point");
      app->add_option("--seed", seed, "Random seed");
      app->add_option("--visibility", visibility, "Per-detector visibilities, comma separated")->delimiter(',');
    } else {
      app->add_option("--experiment", experiment, "classical | quantum-forward | quantum-reversed");
    }
  }

  tsr::config::RunConfig resolve() const {
    json j = json::object();
    std::filesystem::path base;
    if (!config.empty()) {
      j = tsr::config::parse_json(tsr::io::read_file(config), config);
      if (!j.is_object()) throw tsr::ConfigError(config + ": expected an object");
      base = std::filesystem::path(config).parent_path();
    }
    if (!experiment.empty()) j["experiment"] = experiment;
    if (n) j["n"] = *n;
    if (!kind.empty() || offset_deg) {
      j.erase("multiport_path");
      json m = j.contains("multiport") ? j["multiport"] : json::object();
      if (!kind.empty()) m["kind"] = kind;
      if (offset_deg) m["offset_deg"] = *offset_deg;
      if (!m.contains("kind")) m["kind"] = j.value("n", 0u) % 2 ? "symmetric" : "asymmetric";
      j["multiport"] = m;
    }
    if (!multiport_config.empty()) {
      j.erase("multiport");
      j["multiport_path"] = std::filesystem::absolute(multiport_config).string();
    }
    if (j.contains("multiport") && j.contains("n")) j["multiport"]["dim"] = j["n"];
    if (start_deg) j["grid"]["start_deg"] = *start_deg;
    if (stop_deg) j["grid"]["stop_deg"] = *stop_deg;
    if (points) j["grid"]["points"] = *points;
    if (mu) j["mu"] = *mu;
    if (windows) j["windows"] = *windows;
    if (seed) j["seed"] = *seed;
    if (!visibility.empty()) j["visibility"] = visibility;
    if (jobs) j["jobs"] = *jobs;
    if (!j.contains("n")) throw tsr::ConfigError("--n or a config with 'n' is required");
    return tsr::config::parse_run_config(j, base);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tsr: multiport interferometry, fringe simulation and fitting"};
  app.require_subcommand(1);

  // multiport
  auto* mp = app.add_subcommand("multiport", "Build a multiport and write its matrix as CSV");
  std::string mp_config, mp_kind, mp_out;
  std::size_t mp_n = 0;
  double mp_offset = 0.0;
  mp->add_option("--config", mp_config, "Multiport config (JSON)");
  mp->add_option("--kind", mp_kind, "symmetric | asymmetric")->check(CLI::IsMember({"symmetric", "asymmetric"}));
  mp->add_option("--n", mp_n, "Number of ports");
  mp->add_option("--offset-deg", mp_offset, "Phase offset for the asymmetric multiport");
  mp->add_option("-o,--output", mp_out, "Output CSV")->required();

  // scan
  auto* sc = app.add_subcommand("scan", "Probability scan over the phase grid");
  RunFlags sc_flags;
  std::string sc_out;
  sc_flags.attach(sc, false);
  sc->add_option("-o,--output", sc_out, "Output CSV")->required();

  // simulate
  auto* sim = app.add_subcommand("simulate", "Poisson count record over the phase grid");
  RunFlags sim_flags;
  std::string sim_out;
  sim_flags.attach(sim, true);
  sim->add_option("-o,--output", sim_out, "Output dataset CSV")->required();

  // fit
  auto* fit = app.add_subcommand("fit", "Fit singles and the coincidence product");
  std::string fit_in, fit_report, fit_overlay;
  std::size_t fit_n = 0;
  fit->add_option("-i,--input", fit_in, "Dataset CSV")->required();
  fit->add_option("--n", fit_n, "Expected number of detectors");
  fit->add_option("--report", fit_report, "Fit report output")->required();
  fit->add_option("--overlay", fit_overlay, "Model curve CSV output")->required();
  tsr::FitOptions fit_opt;
  fit->add_option("--max-iterations", fit_opt.max_iterations, "Iteration limit per fit (default 200)")
      ->check(CLI::PositiveNumber);

  // sensitivity
  auto* sen = app.add_subcommand("sensitivity", "Phase uncertainty against the classical limit");
  tsr::SensitivityInput sen_in;
  std::optional<double> sen_phi;
  double sen_lambda = 632.8;
  std::string sen_out, sen_batch;
  sen->add_option("--n", sen_in.n, "Photon number N");
  sen->add_option("--visibility", sen_in.visibility, "Fringe visibility V");
  sen->add_option("--efficiency", sen_in.efficiency, "Efficiency eta");
  sen->add_option("--delta-a", sen_in.delta_a, "Observable uncertainty (default 0.5)");
  sen->add_option("--phi-deg", sen_phi, "Operating phase (default 90/N)");
  sen->add_option("--wavelength-nm", sen_lambda, "Optical wavelength (default 632.8)");
  sen->add_option("--batch", sen_batch, "Input CSV of (N, V, eta[, delta_A, phi_deg]) rows");
  sen->add_option("-o,--output", sen_out, "Write the report (or batch CSV) here");

  // plot
  auto* pl = app.add_subcommand("plot", "Render a CSV as SVG");
  std::string pl_in, pl_out;
  pl->add_option("-i,--input", pl_in, "Input CSV")->required();
  pl->add_option("-o,--output", pl_out, "Output SVG")->required();

  // run
  auto* run = app.add_subcommand("run", "Full pipeline from one config file");
  std::string run_config, run_dir;
  run->add_option("--config", run_config, "Run config (JSON)")->required();
  run->add_option("--out-dir", run_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? tsr::exit_code::ok : tsr::exit_code::usage;
  }

  try {
    if (*mp) {
      tsr::config::MultiportSpec spec;
      if (!mp_config.empty()) {
        spec = tsr::config::load_multiport(mp_config);
      } else {
        if (mp_n < 2) throw tsr::ConfigError("multiport: give --config or --n (at least 2)");
        spec = tsr::config::MultiportSpec::canonical(mp_n);
        if (!mp_kind.empty()) spec.kind = tsr::config::parse_kind(mp_kind);
        spec.offset = tsr::config::deg_to_rad(mp_offset);
      }
      const auto u = tsr::cmd::cmd_multiport(spec, mp_out);
      std::cout << "dim " << u.dim() << " unitarity_residual " << tsr::io::short_num(u.residual()) << '\n';
    } else if (*sc) {
      const auto rows = tsr::cmd::cmd_scan(sc_flags.resolve(), sc_out);
      std::cout << "wrote " << rows.size() << " rows to " << sc_out << '\n';
    } else if (*sim) {
      const auto res = tsr::cmd::cmd_simulate(sim_flags.resolve(), sim_out, std::cerr);
      std::cout << "wrote " << res.data.points() << " points to " << sim_out << '\n';
    } else if (*fit) {
      const auto r = tsr::cmd::cmd_fit(fit_in, fit_n, fit_report, fit_overlay, std::cerr, fit_opt);
      std::cout << tsr::io::format_fit_report(r.fit);
      if (!r.converged) return tsr::exit_code::numerical;
    } else if (*sen) {
      if (!sen_batch.empty()) {
        if (sen_out.empty()) throw tsr::ConfigError("sensitivity: --batch needs -o");
        const auto rows = tsr::cmd::cmd_sensitivity_batch(sen_batch, sen_out, sen_lambda);
        std::cout << "wrote " << rows << " rows to " << sen_out << '\n';
      } else {
        sen_in.phi = sen_phi ? tsr::config::deg_to_rad(*sen_phi) : tsr::SensitivityInput::optimal_phase(sen_in.n);
        const auto r = tsr::cmd::cmd_sensitivity(sen_in, sen_lambda, sen_out);
        std::cout << tsr::io::format_sensitivity(r);
      }
    } else if (*pl) {
      tsr::cmd::cmd_plot(pl_in, pl_out);
    } else if (*run) {
      const auto cfg = tsr::config::load_run_config(run_config);
      const auto r = tsr::cmd::cmd_run(cfg, run_dir, std::cerr);
      std::cout << tsr::io::format_sensitivity(r.sensitivity);
      if (!r.converged) return tsr::exit_code::numerical;
    }
  } catch (const tsr::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::bad_alloc&) {
    std::cerr << "error: out of memory\n";
    return tsr::exit_code::numerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return tsr::exit_code::numerical;
  }
  return tsr::exit_code::ok;
}
