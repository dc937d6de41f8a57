#pragma once

// Weighted least-squares fits of sinusoidal fringes.
//
// Single fringe:   y = c v sin(f phi + delta) + c
// Product fringe:  y = g prod_i s_i(phi),  s_i = c_i v_i sin(phi + delta_i) + c_i
//
// The nonlinear fits run a damped Gauss-Newton loop with analytic Jacobians.
// Visibilities are carried internally as v = sin^2(u) so they stay in [0, 1].
// Reported uncertainties come from (J^T W J)^{-1} at the optimum, evaluated
// in the reported (c, v, delta) coordinates.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tsr/classical_sim.hpp"
#include "tsr/errors.hpp"

namespace tsr {

struct FitOptions {
  int max_iterations = 200;
  double relative_chi2_tolerance = 1e-10;
  double step_tolerance = 1e-12;
  double initial_damping = 1e-3;
  double sigma_floor = 1.0;  // applied to Poisson sigmas of zero-count bins
};

/// Outcome of one damped least-squares run.
struct FitStatistics {
  double chi2 = 0.0;
  int points = 0;
  int parameters = 0;
  double reduced_chi2 = 0.0;
  bool converged = false;
  bool at_bound = false;
  int iterations = 0;
  std::vector<double> chi2_trace;  // chi2 after each accepted step, starting with the initial value
};

/// Value with its 1-sigma uncertainty.
struct Estimate {
  double value = 0.0;
  double sigma = 0.0;
};

/// Wraps an angle into [0, 2 pi).
inline double wrap_phase(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(a, two_pi);
  if (r < 0.0) r += two_pi;
  if (r >= two_pi) r -= two_pi;
  return r;
}

// ---------------------------------------------------------------------------
// Damped Gauss-Newton core

namespace detail {

/// Model interface: fills `f` (values at every point) and `jac` (df/dtheta).
using ModelFn = std::function<void(const Eigen::VectorXd& theta, Eigen::VectorXd& f, Eigen::MatrixXd& jac)>;

struct LmOutcome {
  Eigen::VectorXd theta;
  FitStatistics stats;
};

inline LmOutcome damped_gauss_newton(const ModelFn& model, Eigen::VectorXd theta, const Eigen::VectorXd& y,
                                     const Eigen::VectorXd& sigma, const FitOptions& opt) {
  const auto n = y.size();
  const auto p = theta.size();
  const Eigen::VectorXd w = sigma.cwiseInverse();

  Eigen::VectorXd f(n);
  Eigen::MatrixXd jac(n, p);
  auto evaluate = [&](const Eigen::VectorXd& t, Eigen::VectorXd& r, Eigen::MatrixXd& j) {
    model(t, f, jac);
    r = (y - f).cwiseProduct(w);
    j = w.asDiagonal() * jac;
    return r.squaredNorm();
  };

  LmOutcome out;
  out.stats.points = static_cast<int>(n);
  out.stats.parameters = static_cast<int>(p);

  Eigen::VectorXd r(n), r_try(n);
  Eigen::MatrixXd j(n, p), j_try(n, p);
  double chi2 = evaluate(theta, r, j);
  if (!std::isfinite(chi2)) throw NumericalFailure("fit: initial model is not finite");
  out.stats.chi2_trace.push_back(chi2);

  double lambda = opt.initial_damping;
  bool converged = chi2 == 0.0;
  int it = 0;
  for (; it < opt.max_iterations && !converged; ++it) {
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::VectorXd g = j.transpose() * r;
    Eigen::VectorXd diag = jtj.diagonal();
    const double floor = std::max(1e-12 * diag.maxCoeff(), 1e-300);
    diag = diag.cwiseMax(floor);

    // Inner loop: raise damping until a step lowers chi2 or becomes negligible.
    while (true) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * diag;
      const Eigen::VectorXd step = a.ldlt().solve(g);
      const Eigen::VectorXd trial = theta + step;
      const double chi2_try = step.allFinite() ? evaluate(trial, r_try, j_try) : INFINITY;
      if (std::isfinite(chi2_try) && chi2_try < chi2) {
        const double rel = (chi2 - chi2_try) / chi2;
        theta = trial;
        chi2 = chi2_try;
        r.swap(r_try);
        j.swap(j_try);
        out.stats.chi2_trace.push_back(chi2);
        lambda = std::max(lambda / 10.0, 1e-15);
        if (rel < opt.relative_chi2_tolerance || chi2 == 0.0) converged = true;
        break;
      }
      lambda *= 10.0;
      if (step.norm() < opt.step_tolerance * (1.0 + theta.norm()) || lambda > 1e30) {
        converged = true;
        break;
      }
    }
  }
  out.theta = theta;
  out.stats.chi2 = chi2;
  out.stats.iterations = it;
  out.stats.converged = converged;
  const int dof = out.stats.points - out.stats.parameters;
  out.stats.reduced_chi2 = dof > 0 ? chi2 / dof : std::numeric_limits<double>::quiet_NaN();
  return out;
}

/// Covariance (J^T W J)^+ of weighted Jacobian `jw`.
inline Eigen::MatrixXd covariance(const Eigen::MatrixXd& jw) {
  const Eigen::MatrixXd h = jw.transpose() * jw;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(h);
  cod.setThreshold(1e-14);
  return cod.pseudoInverse();
}

inline double visibility_from(double u) {
  const double s = std::sin(u);
  return s * s;
}

inline double angle_for(double v) { return std::asin(std::sqrt(std::clamp(v, 0.0, 1.0))); }

inline Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline constexpr double kBoundTolerance = 1e-9;

}  // namespace detail

/// Poisson uncertainties sqrt(count) with the configured floor.
inline std::vector<double> poisson_sigma(const std::vector<double>& counts, double floor = 1.0) {
  std::vector<double> s(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) s[i] = std::max(std::sqrt(std::max(counts[i], 0.0)), floor);
  return s;
}

// ---------------------------------------------------------------------------
// Linear harmonic fits

/// y = offset (1 + visibility cos(f phi + phase)), solved by linear least squares.
struct CosineFringe {
  double offset = 0.0;
  double visibility = 0.0;
  double phase = 0.0;
  double max_abs_residual = 0.0;
  double normalized_rms_residual = 0.0;  // rms(residual)/max|y|
};

inline CosineFringe fit_cosine_fringe(const std::vector<double>& phis, const std::vector<double>& y,
                                      double frequency) {
  if (phis.size() != y.size() || phis.size() < 3)
    throw InvalidArgument("fit_cosine_fringe: need at least three matching samples");
  const auto n = static_cast<Eigen::Index>(phis.size());
  Eigen::MatrixXd a(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = std::cos(frequency * phis[static_cast<std::size_t>(i)]);
    a(i, 2) = std::sin(frequency * phis[static_cast<std::size_t>(i)]);
  }
  const Eigen::VectorXd b = detail::to_eigen(y);
  const Eigen::VectorXd x = a.colPivHouseholderQr().solve(b);
  const Eigen::VectorXd res = b - a * x;
  CosineFringe out;
  out.offset = x(0);
  const double amp = std::hypot(x(1), x(2));
  out.visibility = x(0) != 0.0 ? amp / std::abs(x(0)) : std::numeric_limits<double>::infinity();
  out.phase = wrap_phase(std::atan2(-x(2), x(1)));
  out.max_abs_residual = res.cwiseAbs().maxCoeff();
  const double scale = b.cwiseAbs().maxCoeff();
  out.normalized_rms_residual = scale > 0.0 ? std::sqrt(res.squaredNorm() / static_cast<double>(n)) / scale : 0.0;
  return out;
}

/// Strict local maxima of a periodic sequence (the grid wraps around).
inline int count_maxima_cyclic(const std::vector<double>& y) {
  const std::size_t n = y.size();
  if (n < 3) return 0;
  int count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double prev = y[(i + n - 1) % n];
    const double next = y[(i + 1) % n];
    // Plateaus count once, at their left edge.
    if (y[i] > prev && y[i] >= next) {
      std::size_t j = (i + 1) % n;
      while (j != i && y[j] == y[i]) j = (j + 1) % n;
      if (y[j] < y[i]) ++count;
    }
  }
  return count;
}

/// Harmonic with the largest Fourier magnitude on a uniform full-period grid.
inline int dominant_harmonic(const std::vector<double>& phis, const std::vector<double>& y, int max_harmonic) {
  int best = 0;
  double best_mag = -1.0;
  for (int h = 1; h <= max_harmonic; ++h) {
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      re += y[i] * std::cos(h * phis[i]);
      im += y[i] * std::sin(h * phis[i]);
    }
    const double mag = std::hypot(re, im);
    if (mag > best_mag) {
      best_mag = mag;
      best = h;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Single sinusoid

struct SinusoidFit {
  Estimate offset;      // c
  Estimate visibility;  // v
  Estimate phase;       // delta in [0, 2 pi)
  double frequency = 1.0;
  FitStatistics stats;

  double value(double phi) const {
    return offset.value * visibility.value * std::sin(frequency * phi + phase.value) + offset.value;
  }
};

struct SinusoidInit {
  double offset;
  double visibility;
  double phase;
};

inline SinusoidFit fit_single_sinusoid(const std::vector<double>& phis, const std::vector<double>& y,
                                       const std::vector<double>& sigma, double frequency = 1.0,
                                       std::optional<SinusoidInit> init = std::nullopt,
                                       const FitOptions& opt = {}) {
  if (phis.size() != y.size() || sigma.size() != y.size())
    throw InvalidArgument("fit_single_sinusoid: column lengths differ");
  if (phis.size() < 4) throw InvalidArgument("fit_single_sinusoid: need at least four points");
  for (double s : sigma)
    if (!(s > 0.0)) throw InvalidArgument("fit_single_sinusoid: uncertainties must be positive");
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  if (*lo == *hi) throw InvalidArgument("fit_single_sinusoid: degenerate data (constant signal)");

  if (!init) {
    // Linear estimate: y ~ a0 + a1 sin(f phi) + a2 cos(f phi).
    const auto lin = fit_cosine_fringe(phis, y, frequency);
    // offset (1 + V cos(x + p)) = offset (1 + V sin(x + p + pi/2))
    init = SinusoidInit{lin.offset, std::min(lin.visibility, 1.0), lin.phase + std::numbers::pi / 2.0};
  }
  const auto n = static_cast<Eigen::Index>(phis.size());
  Eigen::VectorXd theta(3);
  theta << init->offset, detail::angle_for(init->visibility), init->phase;

  auto model = [&](const Eigen::VectorXd& t, Eigen::VectorXd& f, Eigen::MatrixXd& jac) {
    const double c = t(0), v = detail::visibility_from(t(1)), dv = std::sin(2.0 * t(1));
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x = frequency * phis[static_cast<std::size_t>(i)] + t(2);
      const double s = std::sin(x), co = std::cos(x);
      f(i) = c * v * s + c;
      jac(i, 0) = v * s + 1.0;
      jac(i, 1) = c * dv * s;
      jac(i, 2) = c * v * co;
    }
  };
  const Eigen::VectorXd yv = detail::to_eigen(y), sv = detail::to_eigen(sigma);
  auto res = detail::damped_gauss_newton(model, theta, yv, sv, opt);

  SinusoidFit out;
  out.frequency = frequency;
  out.stats = res.stats;
  const double c = res.theta(0), v = detail::visibility_from(res.theta(1));
  const double delta = res.theta(2);
  // Covariance in the reported (c, v, delta) coordinates.
  Eigen::MatrixXd jw(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = frequency * phis[static_cast<std::size_t>(i)] + delta;
    jw(i, 0) = (v * std::sin(x) + 1.0) / sv(i);
    jw(i, 1) = c * std::sin(x) / sv(i);
    jw(i, 2) = c * v * std::cos(x) / sv(i);
  }
  const Eigen::MatrixXd cov = detail::covariance(jw);
  out.offset = {c, std::sqrt(std::max(cov(0, 0), 0.0))};
  out.visibility = {v, std::sqrt(std::max(cov(1, 1), 0.0))};
  out.phase = {wrap_phase(delta), std::sqrt(std::max(cov(2, 2), 0.0))};
  out.stats.at_bound = v < detail::kBoundTolerance || v > 1.0 - detail::kBoundTolerance;
  return out;
}

// ---------------------------------------------------------------------------
// Product of fringes

struct FringeParameters {
  double offset = 1.0;  // c_i, fixed during the product fit
  Estimate visibility;  // v_i
  Estimate phase;       // delta_i in [0, 2 pi)
};

struct ProductFit {
  Estimate scale;  // g
  std::vector<FringeParameters> fringes;
  FitStatistics stats;

  /// Circular differences delta_{i+1} - delta_i in [0, 2 pi).
  std::vector<double> spacings() const {
    std::vector<double> d;
    for (std::size_t i = 0; i + 1 < fringes.size(); ++i)
      d.push_back(wrap_phase(fringes[i + 1].phase.value - fringes[i].phase.value));
    return d;
  }

  double fringe_value(std::size_t i, double phi) const {
    const auto& f = fringes.at(i);
    return f.offset * f.visibility.value * std::sin(phi + f.phase.value) + f.offset;
  }

  double value(double phi) const {
    double prod = scale.value;
    for (std::size_t i = 0; i < fringes.size(); ++i) prod *= fringe_value(i, phi);
    return prod;
  }
};

/// Per-fringe starting point for the product fit.
struct FringeInit {
  double offset = 1.0;
  double visibility = 0.9;
  double phase = 0.0;
};

namespace detail {

inline double product_shape(const std::vector<double>& v, const std::vector<double>& d, double phi) {
  double prod = 1.0;
  for (std::size_t i = 0; i < v.size(); ++i) prod *= 1.0 + v[i] * std::sin(phi + d[i]);
  return prod;
}

}  // namespace detail

/// Fits g prod_i s_i to a coincidence column. The c_i are not separately
/// identifiable from the product; they are held at their initial values and
/// the overall amplitude is carried by g.
inline ProductFit fit_product_fringes(const std::vector<double>& phis, const std::vector<double>& y,
                                      const std::vector<double>& sigma, const std::vector<FringeInit>& init,
                                      const FitOptions& opt = {}) {
  const std::size_t nf = init.size();
  if (nf == 0) throw InvalidArgument("fit_product_fringes: need at least one fringe");
  if (phis.size() != y.size() || sigma.size() != y.size())
    throw InvalidArgument("fit_product_fringes: column lengths differ");
  if (phis.size() < 3 * nf + 1)
    throw InvalidArgument("fit_product_fringes: need at least 3N+1 points");
  for (double s : sigma)
    if (!(s > 0.0)) throw InvalidArgument("fit_product_fringes: uncertainties must be positive");

  const auto n = static_cast<Eigen::Index>(phis.size());
  const Eigen::VectorXd yv = detail::to_eigen(y), sv = detail::to_eigen(sigma);

  // Starting amplitude: weighted least-squares scale of the initial shape.
  std::vector<double> v0(nf), d0(nf);
  double offsets = 1.0;
  for (std::size_t i = 0; i < nf; ++i) {
    v0[i] = std::clamp(init[i].visibility, 0.0, 1.0);
    d0[i] = init[i].phase;
    offsets *= init[i].offset;
  }
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = detail::product_shape(v0, d0, phis[static_cast<std::size_t>(i)]);
    num += yv(i) * h / (sv(i) * sv(i));
    den += h * h / (sv(i) * sv(i));
  }
  const double amp0 = den > 0.0 ? num / den : 1.0;

  // theta = [A, u_1..u_N, delta_1..delta_N], model A prod (1 + v_i sin(phi + delta_i)).
  const auto p = static_cast<Eigen::Index>(2 * nf + 1);
  Eigen::VectorXd theta(p);
  theta(0) = amp0;
  for (std::size_t i = 0; i < nf; ++i) {
    theta(1 + static_cast<Eigen::Index>(i)) = detail::angle_for(v0[i]);
    theta(1 + static_cast<Eigen::Index>(nf + i)) = d0[i];
  }

  std::vector<double> factor(nf);
  auto fill = [&](const Eigen::VectorXd& t, bool reported, Eigen::VectorXd& f, Eigen::MatrixXd& jac) {
    // reported = true differentiates w.r.t. v_i instead of u_i.
    for (Eigen::Index r = 0; r < n; ++r) {
      const double phi = phis[static_cast<std::size_t>(r)];
      double prod = 1.0;
      for (std::size_t i = 0; i < nf; ++i) {
        const double v = detail::visibility_from(t(1 + static_cast<Eigen::Index>(i)));
        factor[i] = 1.0 + v * std::sin(phi + t(1 + static_cast<Eigen::Index>(nf + i)));
        prod *= factor[i];
      }
      f(r) = t(0) * prod;
      jac(r, 0) = prod;
      for (std::size_t i = 0; i < nf; ++i) {
        double others = t(0);
        for (std::size_t k = 0; k < nf; ++k)
          if (k != i) others *= factor[k];
        const auto ui = 1 + static_cast<Eigen::Index>(i);
        const auto di = 1 + static_cast<Eigen::Index>(nf + i);
        const double x = phi + t(di);
        const double v = detail::visibility_from(t(ui));
        const double dv = reported ? 1.0 : std::sin(2.0 * t(ui));
        jac(r, ui) = others * dv * std::sin(x);
        jac(r, di) = others * v * std::cos(x);
      }
    }
  };
  auto model = [&](const Eigen::VectorXd& t, Eigen::VectorXd& f, Eigen::MatrixXd& jac) { fill(t, false, f, jac); };
  auto res = detail::damped_gauss_newton(model, theta, yv, sv, opt);

  Eigen::VectorXd f(n);
  Eigen::MatrixXd jac(n, p);
  fill(res.theta, true, f, jac);
  const Eigen::MatrixXd cov = detail::covariance(sv.cwiseInverse().asDiagonal() * jac);
  auto sd = [&](Eigen::Index k) { return std::sqrt(std::max(cov(k, k), 0.0)); };

  ProductFit out;
  out.stats = res.stats;
  out.scale = {res.theta(0) / offsets, sd(0) / std::abs(offsets)};
  for (std::size_t i = 0; i < nf; ++i) {
    const auto ui = 1 + static_cast<Eigen::Index>(i);
    const auto di = 1 + static_cast<Eigen::Index>(nf + i);
    const double v = detail::visibility_from(res.theta(ui));
    out.fringes.push_back({init[i].offset, {v, sd(ui)}, {wrap_phase(res.theta(di)), sd(di)}});
    if (v < detail::kBoundTolerance || v > 1.0 - detail::kBoundTolerance) out.stats.at_bound = true;
  }
  return out;
}

/// Product fit started from random visibilities and phases; keeps the lowest
/// chi2 over `restarts` runs.
template <class Rng>
ProductFit fit_product_fringes_multistart(const std::vector<double>& phis, const std::vector<double>& y,
                                          const std::vector<double>& sigma, std::size_t fringes,
                                          int restarts, Rng& rng, const FitOptions& opt = {}) {
  std::uniform_real_distribution<double> vis(0.3, 0.99), ph(0.0, 2.0 * std::numbers::pi);
  std::optional<ProductFit> best;
  for (int r = 0; r < restarts; ++r) {
    std::vector<FringeInit> init(fringes);
    for (auto& f : init) f = {1.0, vis(rng), ph(rng)};
    auto fit = fit_product_fringes(phis, y, sigma, init, opt);
    if (!best || fit.stats.chi2 < best->stats.chi2) best = std::move(fit);
  }
  if (!best) throw InvalidArgument("fit_product_fringes_multistart: need at least one restart");
  return *best;
}

// ---------------------------------------------------------------------------
// Dataset-level helpers

inline std::vector<double> as_doubles(const std::vector<std::int64_t>& counts) {
  return {counts.begin(), counts.end()};
}

inline SinusoidFit fit_singles_column(const FringeDataset& data, std::size_t detector, const FitOptions& opt = {}) {
  if (detector >= data.detectors()) throw InvalidArgument("fit_singles_column: no such detector");
  const auto y = as_doubles(data.singles[detector]);
  return fit_single_sinusoid(data.phis, y, poisson_sigma(y, opt.sigma_floor), 1.0, std::nullopt, opt);
}

/// Singles fits for every detector, then the product fit seeded from them.
struct DatasetFit {
  std::vector<SinusoidFit> singles;
  ProductFit product;
  SinusoidFit coincidence_sinusoid;  // single sinusoid at frequency N
};

inline DatasetFit fit_dataset(const FringeDataset& data, const FitOptions& opt = {}) {
  data.validate();
  const std::size_t nd = data.detectors();
  if (nd == 0) throw InvalidArgument("fit_dataset: dataset has no singles columns");
  DatasetFit out;
  std::vector<FringeInit> init;
  for (std::size_t k = 0; k < nd; ++k) {
    out.singles.push_back(fit_singles_column(data, k, opt));
    const auto& s = out.singles.back();
    init.push_back({s.offset.value, s.visibility.value, s.phase.value});
  }
  const auto y = as_doubles(data.coincidences);
  const auto sigma = poisson_sigma(y, opt.sigma_floor);
  out.product = fit_product_fringes(data.phis, y, sigma, init, opt);
  out.coincidence_sinusoid =
      fit_single_sinusoid(data.phis, y, sigma, static_cast<double>(nd), std::nullopt, opt);
  return out;
}

/// A fitted fringe s_i evaluated on the grid and scaled onto its singles column.
struct SinglesOverlay {
  double scale = 1.0;
  std::vector<double> curve;
};

/// Scales each fitted fringe by the single weighted least-squares factor that
/// matches it to the corresponding singles column. Visibility and phase are
/// untouched.
inline std::vector<SinglesOverlay> extract_singles_overlay(const ProductFit& fit, const std::vector<double>& phis,
                                                           const std::vector<std::vector<double>>& singles,
                                                           double sigma_floor = 1.0) {
  if (singles.size() != fit.fringes.size())
    throw InvalidArgument("extract_singles_overlay: detector count does not match fringe count");
  std::vector<SinglesOverlay> out;
  for (std::size_t i = 0; i < singles.size(); ++i) {
    if (singles[i].size() != phis.size()) throw InvalidArgument("extract_singles_overlay: column length");
    const auto sigma = poisson_sigma(singles[i], sigma_floor);
    std::vector<double> shape(phis.size());
    double num = 0.0, den = 0.0;
    for (std::size_t r = 0; r < phis.size(); ++r) {
      shape[r] = fit.fringe_value(i, phis[r]);
      const double w = 1.0 / (sigma[r] * sigma[r]);
      num += w * singles[i][r] * shape[r];
      den += w * shape[r] * shape[r];
    }
    SinglesOverlay o;
    o.scale = den > 0.0 ? num / den : 0.0;
    o.curve.resize(phis.size());
    for (std::size_t r = 0; r < phis.size(); ++r) o.curve[r] = o.scale * shape[r];
    out.push_back(std::move(o));
  }
  return out;
}

inline std::vector<SinglesOverlay> extract_singles_overlay(const ProductFit& fit, const FringeDataset& data,
                                                           double sigma_floor = 1.0) {
  std::vector<std::vector<double>> cols;
  for (const auto& c : data.singles) cols.push_back(as_doubles(c));
  return extract_singles_overlay(fit, data.phis, cols, sigma_floor);
}

}  // namespace tsr
