#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>
#include <random>

#include "tsr/classical_sim.hpp"
#include "tsr/fringe_fit.hpp"

using namespace tsr;
constexpr double pi = std::numbers::pi;

namespace {

ModeUnitary canonical(std::size_t n) { return n % 2 ? symmetric_multiport(n) : asymmetric_multiport(n); }

std::vector<double> ones(std::size_t n) { return std::vector<double>(n, 1.0); }

struct Synthetic {
  std::vector<double> phis, y;
  std::vector<double> v, d;
  double scale;
};

Synthetic product_model_data(std::size_t nf, std::mt19937_64& rng, std::size_t points = 120) {
  std::uniform_real_distribution<double> vis(0.5, 0.95), jitter(-0.3, 0.3);
  Synthetic s;
  s.phis = phase_grid(0.0, 2 * pi, points);
  s.scale = 1000.0;
  for (std::size_t i = 0; i < nf; ++i) {
    s.v.push_back(vis(rng));
    s.d.push_back(wrap_phase(2 * pi * static_cast<double>(i) / static_cast<double>(nf) + jitter(rng)));
  }
  for (double phi : s.phis) {
    double prod = s.scale;
    for (std::size_t i = 0; i < nf; ++i) prod *= 1 + s.v[i] * std::sin(phi + s.d[i]);
    s.y.push_back(prod);
  }
  return s;
}

double circular_distance(double a, double b) {
  const double d = wrap_phase(a - b);
  return std::min(d, 2 * pi - d);
}

/// Poisson counts with per-detector visibility injected.
FringeDataset noisy_dataset(std::size_t n, const std::vector<double>& vis, std::uint64_t seed,
                            std::size_t points = 90, std::uint64_t windows = 2'000'000) {
  ScanConfig cfg;
  cfg.phis = phase_grid(0.0, 2 * pi, points);
  cfg.mu = 0.3;
  cfg.windows = windows;
  cfg.seed = seed;
  cfg.visibility = vis;
  return simulate_counts(canonical(n), cfg).data;
}

}  // namespace

TEST(SingleSinusoid, NoiselessCosine) {
  const auto grid = phase_grid(0.0, 2 * pi, 50);
  std::vector<double> y;
  for (double phi : grid) y.push_back(1 + std::cos(phi));
  const auto fit = fit_single_sinusoid(grid, y, ones(y.size()));
  EXPECT_NEAR(fit.visibility.value, 1.0, 1e-12);
  EXPECT_NEAR(fit.offset.value, 1.0, 1e-12);
  EXPECT_NEAR(fit.phase.value, pi / 2, 1e-12);  // cos x = sin(x + pi/2)
  EXPECT_LT(fit.stats.reduced_chi2, 1e-20);
  EXPECT_TRUE(fit.stats.converged);
  EXPECT_TRUE(fit.stats.at_bound);
}

TEST(SingleSinusoid, RecoversGeneratorsExactly) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> vis(0.1, 0.95), ph(0.0, 2 * pi), off(10, 1000);
  for (int trial = 0; trial < 50; ++trial) {
    const double c = off(rng), v = vis(rng), d = ph(rng);
    const auto grid = phase_grid(0.0, 2 * pi, 40);
    std::vector<double> y;
    for (double phi : grid) y.push_back(c * v * std::sin(phi + d) + c);
    const auto fit = fit_single_sinusoid(grid, y, ones(y.size()));
    EXPECT_NEAR(fit.offset.value / c, 1.0, 1e-10);
    EXPECT_NEAR(fit.visibility.value, v, 1e-10);
    EXPECT_NEAR(circular_distance(fit.phase.value, d), 0.0, 1e-10);
  }
}

TEST(SingleSinusoid, PoissonThreeSigmaRecovery) {
  const double truth = 0.9;
  const auto grid = phase_grid(0.0, 2 * pi, 60);
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::vector<double> y;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      std::mt19937_64 rng(seed * 1000 + i);
      std::poisson_distribution<long> pois(500.0 * (1 + truth * std::sin(grid[i] + 0.4)));
      y.push_back(static_cast<double>(pois(rng)));
    }
    const auto fit = fit_single_sinusoid(grid, y, poisson_sigma(y));
    if (std::abs(fit.visibility.value - truth) <= 3 * fit.visibility.sigma) ++inside;
  }
  EXPECT_GE(inside, 95);
}

TEST(SingleSinusoid, OneSigmaCoverage) {
  const double truth = 0.8;
  const auto grid = phase_grid(0.0, 2 * pi, 60);
  int inside = 0;
  const int replicates = 200;
  for (int seed = 0; seed < replicates; ++seed) {
    std::vector<double> y;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      std::mt19937_64 rng(static_cast<std::uint64_t>(seed) * 7919 + i);
      std::poisson_distribution<long> pois(2000.0 * (1 + truth * std::sin(grid[i] + 1.1)));
      y.push_back(static_cast<double>(pois(rng)));
    }
    const auto fit = fit_single_sinusoid(grid, y, poisson_sigma(y));
    if (std::abs(fit.visibility.value - truth) <= fit.visibility.sigma) ++inside;
  }
  const double frac = static_cast<double>(inside) / replicates;
  EXPECT_GE(frac, 0.60);
  EXPECT_LE(frac, 0.75);
}

TEST(SingleSinusoid, FrequencyFixedOnIdealSixFoldCoincidences) {
  const auto u = asymmetric_multiport(6);
  const auto grid = phase_grid(0.0, 2 * pi, 180);
  std::vector<double> y;
  for (double phi : grid) y.push_back(1e6 * coincidence_probability(u, phi));
  const auto fit = fit_single_sinusoid(grid, y, ones(y.size()), 6.0);
  EXPECT_NEAR(fit.visibility.value, 1.0, 1e-9);
}

TEST(SingleSinusoid, Rejections) {
  const auto grid = phase_grid(0.0, 2 * pi, 10);
  EXPECT_THROW(fit_single_sinusoid(grid, std::vector<double>(10, 5.0), ones(10)), InvalidArgument);
  EXPECT_THROW(fit_single_sinusoid({0, 1, 2}, {1, 2, 3}, {1, 1, 1}), InvalidArgument);
  std::vector<double> y(10);
  for (std::size_t i = 0; i < 10; ++i) y[i] = 2 + std::sin(grid[i]);
  auto s = ones(10);
  s[3] = 0.0;
  EXPECT_THROW(fit_single_sinusoid(grid, y, s), InvalidArgument);
}

TEST(SingleSinusoid, ReportsNonConvergence) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  const auto grid = phase_grid(0.0, 2 * pi, 30);
  std::vector<double> y;
  for (double phi : grid) y.push_back(100 + 30 * std::sin(phi) + g(rng));
  FitOptions opt;
  opt.max_iterations = 1;
  opt.relative_chi2_tolerance = 0.0;
  opt.step_tolerance = 0.0;
  const auto fit = fit_single_sinusoid(grid, y, ones(y.size()), 1.0, SinusoidInit{50, 0.1, 3.0}, opt);
  EXPECT_FALSE(fit.stats.converged);
  EXPECT_EQ(fit.stats.iterations, 1);
}

TEST(ProductFit, IdealThreeFoldSpacing) {
  const auto u = symmetric_multiport(3);
  const auto grid = phase_grid(0.0, 2 * pi, 120);
  std::vector<double> coinc;
  std::vector<FringeInit> init;
  for (double phi : grid) coinc.push_back(1e4 * coincidence_probability(u, phi));
  for (std::size_t k = 0; k < 3; ++k) {
    std::vector<double> y;
    for (double phi : grid) y.push_back(singles_probabilities(u, phi)[k]);
    const auto s = fit_single_sinusoid(grid, y, ones(y.size()));
    init.push_back({s.offset.value, s.visibility.value, s.phase.value});
  }
  const auto fit = fit_product_fringes(grid, coinc, ones(coinc.size()), init);
  for (double d : fit.spacings()) EXPECT_NEAR(d, 2 * pi / 3, 1e-6);
  for (const auto& f : fit.fringes) EXPECT_NEAR(f.visibility.value, 1.0, 1e-6);
}

TEST(ProductFit, NoiselessRecoveryUpToSix) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nudge(0.0, 0.05);
  for (std::size_t nf = 1; nf <= 6; ++nf) {
    const auto s = product_model_data(nf, rng);
    std::vector<FringeInit> init;
    for (std::size_t i = 0; i < nf; ++i)
      init.push_back({1.0, std::clamp(s.v[i] + nudge(rng), 0.05, 0.99), s.d[i] + nudge(rng)});
    const auto fit = fit_product_fringes(s.phis, s.y, ones(s.y.size()), init);
    ASSERT_TRUE(fit.stats.converged) << nf;
    EXPECT_NEAR(fit.scale.value / s.scale, 1.0, 1e-8) << nf;
    for (std::size_t i = 0; i < nf; ++i) {
      EXPECT_NEAR(fit.fringes[i].visibility.value, s.v[i], 1e-8) << nf;
      EXPECT_NEAR(circular_distance(fit.fringes[i].phase.value, s.d[i]), 0.0, 1e-8) << nf;
    }
  }
}

TEST(ProductFit, ChiSquareNeverIncreases) {
  const auto data = noisy_dataset(4, {0.9, 0.85, 0.95, 0.8}, 12);
  const auto fit = fit_dataset(data);
  const auto& trace = fit.product.stats.chi2_trace;
  ASSERT_GE(trace.size(), 2u);
  for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1]);
}

TEST(ProductFit, InvariantUnderPointOrder) {
  const auto data = noisy_dataset(3, {0.9, 0.8, 0.85}, 4);
  const auto y = as_doubles(data.coincidences);
  std::vector<FringeInit> init{{1, 0.85, 1.6}, {1, 0.85, 3.7}, {1, 0.85, 5.8}};
  const auto a = fit_product_fringes(data.phis, y, poisson_sigma(y), init);
  std::vector<std::size_t> order(y.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), std::mt19937_64(8));
  std::vector<double> phis2, y2;
  for (auto i : order) {
    phis2.push_back(data.phis[i]);
    y2.push_back(y[i]);
  }
  const auto b = fit_product_fringes(phis2, y2, poisson_sigma(y2), init);
  EXPECT_NEAR(a.stats.chi2, b.stats.chi2, 1e-9 * a.stats.chi2);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(a.fringes[i].visibility.value, b.fringes[i].visibility.value, 1e-8);
    EXPECT_NEAR(circular_distance(a.fringes[i].phase.value, b.fringes[i].phase.value), 0.0, 1e-8);
  }
}

TEST(ProductFit, ReducedChiSquareDistribution) {
  const std::vector<double> vis{0.92, 0.85, 0.9, 0.8};
  int in_band = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto fit = fit_dataset(noisy_dataset(4, vis, seed));
    const double r = fit.product.stats.reduced_chi2;
    if (r >= 0.5 && r <= 1.5) ++in_band;
  }
  EXPECT_GE(in_band, 90);
}

TEST(ProductFit, SinglesInitMatchesMultiStart) {
  const auto data = noisy_dataset(4, {0.9, 0.85, 0.95, 0.8}, 31);
  const auto seeded = fit_dataset(data).product;
  const auto y = as_doubles(data.coincidences);
  std::mt19937_64 rng(2024);
  const auto best = fit_product_fringes_multistart(data.phis, y, poisson_sigma(y), 4, 10, rng);
  EXPECT_NEAR(seeded.stats.chi2, best.stats.chi2, 1e-6 * best.stats.chi2);
}

TEST(ProductFit, InjectedVisibilitiesRecovered) {
  const std::vector<double> vis{0.9, 0.8, 0.85, 0.95};
  int good = 0;
  for (std::uint64_t seed = 100; seed < 200; ++seed) {
    const auto fit = fit_dataset(noisy_dataset(4, vis, seed)).product;
    bool all = true;
    for (std::size_t i = 0; i < 4; ++i)
      all = all && std::abs(fit.fringes[i].visibility.value - vis[i]) <= 3 * fit.fringes[i].visibility.sigma;
    good += all;
  }
  EXPECT_GE(good, 95);
}

TEST(ProductFit, Rejections) {
  const auto grid = phase_grid(0.0, 2 * pi, 9);
  std::vector<double> y(9, 1.0);
  EXPECT_THROW(fit_product_fringes(grid, y, ones(9), std::vector<FringeInit>(3)), InvalidArgument);
  EXPECT_THROW(fit_product_fringes(grid, y, ones(9), {}), InvalidArgument);
}

TEST(Overlay, SelfConsistentOnIdealData) {
  const auto u = asymmetric_multiport(4);
  const auto grid = phase_grid(0.0, 2 * pi, 80);
  std::vector<double> coinc;
  std::vector<std::vector<double>> singles(4);
  for (double phi : grid) {
    const auto p = singles_probabilities(u, phi);
    for (std::size_t k = 0; k < 4; ++k) singles[k].push_back(1e5 * p[k]);
    coinc.push_back(1e5 * coincidence_probability(u, phi));
  }
  std::vector<FringeInit> init;
  for (std::size_t k = 0; k < 4; ++k) {
    const auto s = fit_single_sinusoid(grid, singles[k], ones(grid.size()));
    init.push_back({s.offset.value, s.visibility.value, s.phase.value});
  }
  const auto fit = fit_product_fringes(grid, coinc, ones(grid.size()), init);
  const auto before = fit.fringes;
  const auto overlay = extract_singles_overlay(fit, grid, singles);
  ASSERT_EQ(overlay.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(overlay[k].curve[i], singles[k][i], 1e-9 * 1e5);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(fit.fringes[k].visibility.value, before[k].visibility.value);
    EXPECT_EQ(fit.fringes[k].phase.value, before[k].phase.value);
  }
}

TEST(Overlay, SixDetectorPipeline) {
  const auto data = noisy_dataset(6, {}, 5, 60, 200'000);
  const auto fit = fit_dataset(data);
  const auto overlay = extract_singles_overlay(fit.product, data);
  ASSERT_EQ(overlay.size(), 6u);
  for (const auto& o : overlay) {
    EXPECT_EQ(o.curve.size(), data.points());
    EXPECT_GT(o.scale, 0.0);
  }
}

TEST(Overlay, DetectorCountMismatch) {
  ProductFit fit;
  fit.fringes.resize(3);
  EXPECT_THROW(extract_singles_overlay(fit, {0.0}, {{1.0}, {1.0}}), InvalidArgument);
}

TEST(Harmonics, CountMaximaCyclic) {
  const auto grid = phase_grid(0.0, 2 * pi, 360);
  for (int n = 1; n <= 7; ++n) {
    std::vector<double> y;
    for (double phi : grid) y.push_back(1 + std::cos(n * phi + 0.3));
    EXPECT_EQ(count_maxima_cyclic(y), n);
    EXPECT_EQ(dominant_harmonic(grid, y, 10), n);
  }
  EXPECT_EQ(count_maxima_cyclic({1, 1, 1, 1}), 0);
}

TEST(Harmonics, WrapPhase) {
  EXPECT_NEAR(wrap_phase(-0.5), 2 * pi - 0.5, 1e-15);
  EXPECT_NEAR(wrap_phase(7.0), 7.0 - 2 * pi, 1e-15);
  EXPECT_GE(wrap_phase(-1e-300), 0.0);
  EXPECT_LT(wrap_phase(-1e-300), 2 * pi);
}
