#pragma once

// Coherent light through a multiport: singles, product-of-singles
// coincidences, and Poisson-sampled count records.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "tsr/errors.hpp"
#include "tsr/multiport.hpp"

namespace tsr {

/// Classical input (1, e^{i phi}, 0, ..., 0)/sqrt(2).
inline Vector classical_input(std::size_t dim, double phi) {
  if (dim < 2) throw InvalidArgument("classical_input: need at least two modes");
  Vector e = Vector::Zero(static_cast<Eigen::Index>(dim));
  const double h = 1.0 / std::sqrt(2.0);
  e(0) = h;
  e(1) = std::polar(h, phi);
  return e;
}

/// P_k = |(U e(phi))_k|^2; sums to one.
inline std::vector<double> singles_probabilities(const ModeUnitary& u, double phi) {
  const Vector out = u.matrix() * classical_input(u.dim(), phi);
  std::vector<double> p(u.dim());
  for (std::size_t k = 0; k < u.dim(); ++k) p[k] = std::norm(out(static_cast<Eigen::Index>(k)));
  return p;
}

/// N-fold coincidence probability as the product of the singles.
inline double coincidence_probability(const ModeUnitary& u, double phi) {
  double prod = 1.0;
  for (double p : singles_probabilities(u, phi)) prod *= p;
  return prod;
}

/// Half-open uniform grid start + i (stop - start)/points, i < points.
inline std::vector<double> phase_grid(double start, double stop, std::size_t points) {
  if (points == 0) throw InvalidArgument("phase_grid: need at least one point");
  std::vector<double> g(points);
  const double step = (stop - start) / static_cast<double>(points);
  for (std::size_t i = 0; i < points; ++i) g[i] = start + step * static_cast<double>(i);
  return g;
}

// ---------------------------------------------------------------------------
// Count simulation

struct ScanConfig {
  std::vector<double> phis;           // radians
  double mu = 0.05;                   // mean photons per window per detector, phase-averaged
  std::uint64_t windows = 1'000'000;  // coincidence windows per grid point
  std::uint64_t seed = 1;
  // Per-detector fringe visibility in [0, 1]; empty means ideal (all ones).
  // Detector k sees v_k |coherent|^2 + (1 - v_k) * incoherent mixture.
  std::vector<double> visibility;
};

/// Timing defaults for the three experiments: the window length and the
/// photon rate scale. The N = 6 scale gives a mean six-fold rate of 2.7 per
/// second; N = 3, 4 reproduce maximum singles of 5e4 and 1.3e5 per second.
struct ExperimentDefaults {
  double window_seconds = 1.5e-6;
  double mu = 0.05;
  double dwell_seconds = 1.0;
};

inline ExperimentDefaults experiment_defaults(std::size_t n) {
  switch (n) {
    case 3:
      return {1.5e-6, 5e4 * 1.5e-6 / 2.0, 1.0};
    case 4:
      return {1.5e-6, 1.3e5 * 1.5e-6 / 2.0, 1.0};
    case 6: {
      // Mean of prod_k (mu N P_k) over phase is mu^N 2^{1-N} for the canonical multiports.
      const double window = 5e-6;
      const double per_window = 2.7 * window;
      return {window, std::pow(per_window * std::ldexp(1.0, 5), 1.0 / 6.0), 1.0};
    }
    default:
      return {};
  }
}

/// Count record over a phase grid. Uncertainties are sqrt(count).
struct FringeDataset {
  std::vector<double> phis;
  std::vector<std::vector<std::int64_t>> singles;  // [detector][point]
  std::vector<std::int64_t> coincidences;

  std::size_t detectors() const noexcept { return singles.size(); }
  std::size_t points() const noexcept { return phis.size(); }

  static double sigma(std::int64_t count) { return std::sqrt(static_cast<double>(count)); }

  void validate() const {
    if (phis.empty()) throw InvalidArgument("FringeDataset: empty phase grid");
    if (coincidences.size() != phis.size()) throw InvalidArgument("FringeDataset: coincidence column length");
    for (const auto& col : singles)
      if (col.size() != phis.size()) throw InvalidArgument("FringeDataset: singles column length");
    auto negative = [](std::int64_t c) { return c < 0; };
    if (std::any_of(coincidences.begin(), coincidences.end(), negative))
      throw InvalidArgument("FringeDataset: negative count");
    for (const auto& col : singles)
      if (std::any_of(col.begin(), col.end(), negative)) throw InvalidArgument("FringeDataset: negative count");
  }
};

struct SimulationResult {
  FringeDataset data;
  double max_window_mean = 0.0;  // largest per-detector mean photons per window
  bool saturated = false;        // max_window_mean > 1
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent generator for one (point, channel) cell, keyed by counter.
inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t point, std::uint64_t channel) {
  const std::uint64_t k = splitmix64(splitmix64(splitmix64(seed) ^ point) ^ (channel + 0x5851f42d4c957f2dULL));
  std::seed_seq seq{static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  return std::mt19937_64(seq);
}

inline std::int64_t poisson(std::mt19937_64& rng, double mean) {
  if (!(mean > 0.0)) return 0;
  std::poisson_distribution<std::int64_t> dist(mean);
  return dist(rng);
}

}  // namespace detail

/// Per-detector detection probabilities including the visibility factors.
inline std::vector<double> degraded_singles(const ModeUnitary& u, double phi,
                                            const std::vector<double>& visibility) {
  auto p = singles_probabilities(u, phi);
  if (visibility.empty()) return p;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    const double incoherent = (std::norm(u.matrix()(r, 0)) + std::norm(u.matrix()(r, 1))) / 2.0;
    p[k] = visibility[k] * p[k] + (1.0 - visibility[k]) * incoherent;
  }
  return p;
}

/// Poisson counts at each grid point. Singles ~ Poisson(W mu N P_k);
/// coincidences ~ Poisson(W prod_k mu N P_k). Each (point, channel) pair draws
/// from its own stream, so results do not depend on evaluation order.
inline SimulationResult simulate_counts(const ModeUnitary& u, const ScanConfig& cfg) {
  if (cfg.phis.empty()) throw InvalidArgument("simulate_counts: empty phase grid");
  if (cfg.windows == 0) throw InvalidArgument("simulate_counts: windows per point must be positive");
  if (!(cfg.mu > 0.0) || !std::isfinite(cfg.mu)) throw InvalidArgument("simulate_counts: mu must be positive");
  const std::size_t n = u.dim();
  if (!cfg.visibility.empty()) {
    if (cfg.visibility.size() != n) throw InvalidArgument("simulate_counts: one visibility per detector");
    for (double v : cfg.visibility)
      if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("simulate_counts: visibility must lie in [0, 1]");
  }

  SimulationResult res;
  res.data.phis = cfg.phis;
  res.data.singles.assign(n, std::vector<std::int64_t>(cfg.phis.size()));
  res.data.coincidences.resize(cfg.phis.size());
  const double w = static_cast<double>(cfg.windows);
  for (std::size_t i = 0; i < cfg.phis.size(); ++i) {
    const auto p = degraded_singles(u, cfg.phis[i], cfg.visibility);
    double coinc_mean = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double lambda = cfg.mu * static_cast<double>(n) * p[k];
      res.max_window_mean = std::max(res.max_window_mean, lambda);
      coinc_mean *= lambda;
      auto rng = detail::stream(cfg.seed, i, k);
      res.data.singles[k][i] = detail::poisson(rng, w * lambda);
    }
    auto rng = detail::stream(cfg.seed, i, n);
    res.data.coincidences[i] = detail::poisson(rng, w * coinc_mean);
  }
  res.saturated = res.max_window_mean > 1.0;
  return res;
}

}  // namespace tsr
