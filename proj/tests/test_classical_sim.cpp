#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "tsr/classical_sim.hpp"
#include "tsr/fringe_fit.hpp"

using namespace tsr;
constexpr double pi = std::numbers::pi;

namespace {

ModeUnitary canonical(std::size_t n) { return n % 2 ? symmetric_multiport(n) : asymmetric_multiport(n); }

std::vector<double> coincidence_scan(const ModeUnitary& u, const std::vector<double>& grid) {
  std::vector<double> c;
  for (double phi : grid) c.push_back(coincidence_probability(u, phi));
  return c;
}

}  // namespace

TEST(Singles, BalancedInterferometer) {
  const auto p = singles_probabilities(symmetric_multiport(2), 0.0);
  EXPECT_NEAR(p[0], 1.0, 1e-15);
  EXPECT_NEAR(p[1], 0.0, 1e-15);
}

TEST(Singles, SumToOne) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> ang(0.0, 2 * pi);
  for (std::size_t n = 2; n <= 8; ++n)
    for (int i = 0; i < 20; ++i) {
      const auto p = singles_probabilities(random_unitary(n, rng), ang(rng));
      EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    }
}

TEST(Singles, FourModeCosineFit) {
  const auto u = asymmetric_multiport(4, 0.0);
  const auto grid = phase_grid(0.0, 2 * pi, 200);
  for (std::size_t k = 0; k < 4; ++k) {
    double worst = 0.0;
    for (double phi : grid)
      worst = std::max(worst, std::abs(singles_probabilities(u, phi)[k] - (1 + std::cos(phi + pi * k / 2)) / 4));
    EXPECT_LT(worst, 1e-9);
  }
}

TEST(Coincidence, TwoModeIdentity) {
  const auto u = symmetric_multiport(2);
  for (double phi : phase_grid(0.0, 2 * pi, 50))
    EXPECT_NEAR(coincidence_probability(u, phi), (1 - std::cos(2 * phi)) / 8, 1e-15);
}

TEST(Coincidence, ProductOfSinglesIsSingleSinusoid) {
  const auto grid = phase_grid(0.0, 2 * pi, 200);
  for (std::size_t n : {2u, 3u, 4u, 6u}) {
    const auto c = coincidence_scan(canonical(n), grid);
    const auto fit = fit_cosine_fringe(grid, c, static_cast<double>(n));
    EXPECT_LT(fit.normalized_rms_residual, 1e-8) << n;
    EXPECT_NEAR(fit.visibility, 1.0, 1e-9) << n;
    EXPECT_EQ(count_maxima_cyclic(c), static_cast<int>(n));
    EXPECT_EQ(dominant_harmonic(grid, c, 12), static_cast<int>(n));
  }
}

TEST(Coincidence, SinglesPhasesSpacedEvenly) {
  const auto grid = phase_grid(0.0, 2 * pi, 120);
  for (std::size_t n : {3u, 4u, 6u}) {
    const auto u = canonical(n);
    std::vector<double> phases;
    for (std::size_t k = 0; k < n; ++k) {
      std::vector<double> y;
      for (double phi : grid) y.push_back(singles_probabilities(u, phi)[k]);
      const auto f = fit_cosine_fringe(grid, y, 1.0);
      EXPECT_NEAR(f.visibility, 1.0, 1e-9);
      phases.push_back(f.phase);
    }
    for (std::size_t k = 0; k + 1 < n; ++k)
      EXPECT_NEAR(wrap_phase(phases[k + 1] - phases[k]), 2 * pi / n, 1e-9);
  }
}

TEST(Simulate, Deterministic) {
  ScanConfig cfg;
  cfg.phis = phase_grid(0.0, 2 * pi, 40);
  cfg.mu = 0.2;
  cfg.windows = 100000;
  cfg.seed = 99;
  const auto u = asymmetric_multiport(6);
  const auto a = simulate_counts(u, cfg);
  const auto b = simulate_counts(u, cfg);
  EXPECT_EQ(a.data.singles, b.data.singles);
  EXPECT_EQ(a.data.coincidences, b.data.coincidences);
  cfg.seed = 100;
  EXPECT_NE(simulate_counts(u, cfg).data.singles, a.data.singles);
}

TEST(Simulate, StreamsIndependentOfGridLength) {
  // A point's counts depend only on (seed, index, channel).
  ScanConfig cfg;
  cfg.phis = phase_grid(0.0, 2 * pi, 10);
  cfg.windows = 1000;
  const auto u = symmetric_multiport(3);
  const auto full = simulate_counts(u, cfg);
  cfg.phis.resize(5);
  const auto half = simulate_counts(u, cfg);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(full.data.coincidences[i], half.data.coincidences[i]);
}

TEST(Simulate, PoissonMeanWithinFiveSigma) {
  ScanConfig cfg;
  const std::size_t points = 2000;
  cfg.phis.assign(points, 0.3);
  cfg.mu = 0.1;
  cfg.windows = 5000;
  cfg.seed = 5;
  const auto u = symmetric_multiport(3);
  const auto res = simulate_counts(u, cfg);
  const auto p = singles_probabilities(u, 0.3);
  for (std::size_t k = 0; k < 3; ++k) {
    const double mean = cfg.windows * cfg.mu * 3 * p[k];
    double sum = 0.0;
    for (auto c : res.data.singles[k]) sum += static_cast<double>(c);
    const double sample = sum / points;
    EXPECT_LT(std::abs(sample - mean), 5 * std::sqrt(mean / points)) << k;
  }
  double coinc_mean = cfg.windows;
  for (double pk : p) coinc_mean *= cfg.mu * 3 * pk;
  double sum = 0.0;
  for (auto c : res.data.coincidences) sum += static_cast<double>(c);
  EXPECT_LT(std::abs(sum / points - coinc_mean), 5 * std::sqrt(coinc_mean / points));
}

TEST(Simulate, RelativeNoiseShrinksWithRate) {
  const auto u = symmetric_multiport(3);
  auto spread = [&](std::uint64_t windows) {
    ScanConfig cfg;
    cfg.phis.assign(500, 0.0);
    cfg.mu = 0.1;
    cfg.windows = windows;
    const auto res = simulate_counts(u, cfg);
    double m = 0.0, m2 = 0.0;
    for (auto c : res.data.singles[0]) {
      m += static_cast<double>(c);
      m2 += static_cast<double>(c) * static_cast<double>(c);
    }
    m /= 500;
    return std::sqrt(m2 / 500 - m * m) / m;
  };
  const double lo = spread(1000), hi = spread(100000);
  // 100x the rate: relative fluctuations drop about 10x.
  EXPECT_NEAR(lo / hi, 10.0, 2.0);
}

TEST(Simulate, SaturationFlag) {
  ScanConfig cfg;
  cfg.phis = phase_grid(0.0, 2 * pi, 8);
  cfg.windows = 10;
  cfg.mu = 0.4;
  EXPECT_FALSE(simulate_counts(symmetric_multiport(3), cfg).saturated);
  cfg.mu = 0.6;  // peaks at 2 mu per window
  const auto r = simulate_counts(symmetric_multiport(3), cfg);
  EXPECT_TRUE(r.saturated);
  EXPECT_GT(r.max_window_mean, 1.0);
}

TEST(Simulate, Rejections) {
  ScanConfig cfg;
  const auto u = symmetric_multiport(3);
  EXPECT_THROW(simulate_counts(u, cfg), InvalidArgument);
  cfg.phis = {0.0};
  cfg.windows = 0;
  EXPECT_THROW(simulate_counts(u, cfg), InvalidArgument);
  cfg.windows = 10;
  cfg.visibility = {0.9, 0.9};
  EXPECT_THROW(simulate_counts(u, cfg), InvalidArgument);
  cfg.visibility = {0.9, 1.2, 0.9};
  EXPECT_THROW(simulate_counts(u, cfg), InvalidArgument);
}

TEST(Simulate, InjectedVisibilityShapesSingles) {
  const auto u = asymmetric_multiport(4);
  const std::vector<double> vis{0.9, 0.8, 0.95, 0.7};
  for (double phi : phase_grid(0.0, 2 * pi, 30)) {
    const auto p = degraded_singles(u, phi, vis);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(p[k], (1 + vis[k] * std::cos(phi + pi * k / 2)) / 4, 1e-12);
  }
}

TEST(Simulate, SixPhotonDefaultsGiveQuotedRate) {
  const auto d = experiment_defaults(6);
  const auto u = asymmetric_multiport(6);
  double mean = 0.0;
  const auto grid = phase_grid(0.0, 2 * pi, 360);
  for (double phi : grid) {
    double prod = 1.0;
    for (double p : singles_probabilities(u, phi)) prod *= d.mu * 6 * p;
    mean += prod;
  }
  mean /= static_cast<double>(grid.size());
  EXPECT_NEAR(mean / d.window_seconds, 2.7, 1e-9);
  EXPECT_LT(2 * d.mu, 1.0);  // peak per-window mean stays below saturation
}
