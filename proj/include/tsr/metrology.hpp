#pragma once

// Phase super-sensitivity accounting.
//
//   dphi       = dA / |d<A>/dphi|,     d<A>/dphi = N V sin(N phi) / 2
//   dphi_class = 1/sqrt(N_tot) = sqrt(eta/N)
//   super-sensitive  <=>  eta V^2 > 4 dA^2 / (N sin^2(N phi))
//
// Factorial formulas are evaluated as exact rationals.

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "tsr/errors.hpp"

namespace tsr {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline constexpr double kWorstCaseObservableSigma = 0.5;

inline BigInt big_factorial(unsigned n) {
  BigInt f = 1;
  for (unsigned i = 2; i <= n; ++i) f *= i;
  return f;
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

/// Exact rational image of a finite double.
inline Rational exact(double x) {
  if (!std::isfinite(x)) throw InvalidArgument("exact: value must be finite");
  return Rational(x);
}

/// dA/|slope|; +infinity when the slope vanishes.
inline double phase_uncertainty(double delta_a, double slope) {
  if (slope == 0.0) return std::numeric_limits<double>::infinity();
  return delta_a / std::abs(slope);
}

/// d<A>/dphi for the normalized fringe (1 - V cos(N phi))/2.
inline double fringe_slope(int n, double visibility, double phi) {
  return 0.5 * n * visibility * std::sin(n * phi);
}

inline double classical_limit(double total_resources) {
  if (!(total_resources > 0.0)) throw InvalidArgument("classical_limit: N_tot must be positive");
  return 1.0 / std::sqrt(total_resources);
}

struct SensitivityInput {
  int n = 2;
  double visibility = 1.0;
  double efficiency = 1.0;
  double delta_a = kWorstCaseObservableSigma;
  double phi = std::numbers::pi / 4.0;  // radians

  void validate() const {
    if (n < 1) throw InvalidArgument("sensitivity: N must be at least 1");
    if (!(visibility >= 0.0 && visibility <= 1.0)) throw InvalidArgument("sensitivity: V must lie in [0, 1]");
    if (!(efficiency > 0.0 && efficiency <= 1.0)) throw InvalidArgument("sensitivity: eta must lie in (0, 1]");
    if (!(delta_a >= 0.0) || !std::isfinite(delta_a)) throw InvalidArgument("sensitivity: dA must be non-negative");
    if (!std::isfinite(phi)) throw InvalidArgument("sensitivity: phi must be finite");
  }

  /// Operating point sin^2(N phi) = 1.
  static double optimal_phase(int n) { return std::numbers::pi / (2.0 * n); }
};

struct ClassicalVerdict {
  bool beats = false;
  double ratio = 0.0;  // LHS / RHS of the inequality; > 1 means super-sensitive
};

/// eta V^2 > 4 dA^2 / (N sin^2(N phi)).
inline ClassicalVerdict beats_classical(const SensitivityInput& in) {
  in.validate();
  const double s = std::sin(in.n * in.phi);
  const double s2 = s * s;
  if (s2 == 0.0) throw InvalidArgument("beats_classical: sin(N phi) = 0, operating point undefined");
  const double lhs = in.efficiency * in.visibility * in.visibility;
  const double rhs = 4.0 * in.delta_a * in.delta_a / (in.n * s2);
  ClassicalVerdict v;
  v.ratio = rhs > 0.0 ? lhs / rhs : std::numeric_limits<double>::infinity();
  v.beats = lhs > rhs;
  return v;
}

/// eta V^2 N > 1, the optimal-phase, dA = 1/2 form, evaluated exactly.
inline bool beats_classical_at_optimum(int n, double visibility, double efficiency) {
  return exact(efficiency) * exact(visibility) * exact(visibility) * n > 1;
}

struct RequiredEfficiency {
  Rational exact;
  double value = 0.0;
  bool impossible = false;  // value > 1
};

/// Smallest eta with eta V^2 N = 1.
inline RequiredEfficiency required_efficiency(int n, double visibility) {
  if (n < 1) throw InvalidArgument("required_efficiency: N must be at least 1");
  if (!(visibility > 0.0)) throw InvalidArgument("required_efficiency: V must be positive");
  RequiredEfficiency r;
  const Rational v = exact(visibility);
  r.exact = Rational(1) / (v * v * n);
  r.value = to_double(r.exact);
  r.impossible = r.exact > 1;
  return r;
}

/// 2 N!/N^N.
inline Rational preparation_efficiency_exact(int n) {
  if (n < 1) throw InvalidArgument("preparation_efficiency: N must be at least 1");
  return Rational(2 * big_factorial(static_cast<unsigned>(n)), boost::multiprecision::pow(BigInt(n), n));
}

inline double preparation_efficiency(int n) { return to_double(preparation_efficiency_exact(n)); }

/// 2 N!/N^{N-1} > 1: whether any known heralded scheme can beat the classical limit.
inline Rational nondeterministic_margin(int n) {
  if (n < 1) throw InvalidArgument("nondeterministic_margin: N must be at least 1");
  return preparation_efficiency_exact(n) * n;
}

inline bool nondeterministic_supersensitivity_possible(int n) { return nondeterministic_margin(n) > 1; }

/// 2 (N!)^2 / (2N)!.
inline Rational multi_exposure_visibility_exact(int n) {
  if (n < 1) throw InvalidArgument("multi_exposure_visibility: N must be at least 1");
  const BigInt f = big_factorial(static_cast<unsigned>(n));
  return Rational(2 * f * f, big_factorial(static_cast<unsigned>(2 * n)));
}

inline double multi_exposure_visibility(int n) { return to_double(multi_exposure_visibility_exact(n)); }

/// Wavelength giving the same fringe period as N-fold super-resolution at `lambda`.
inline double equivalent_wavelength(double lambda, int n) {
  if (!(lambda > 0.0)) throw InvalidArgument("equivalent_wavelength: wavelength must be positive");
  if (n < 1) throw InvalidArgument("equivalent_wavelength: N must be at least 1");
  return lambda / n;
}

/// Visibility at which eta V^2 equals the right-hand side of the inequality.
inline double threshold_visibility(const SensitivityInput& in) {
  const double s = std::sin(in.n * in.phi);
  const double denom = in.efficiency * in.n * s * s;
  if (denom == 0.0) return std::numeric_limits<double>::infinity();
  return 2.0 * in.delta_a / std::sqrt(denom);
}

struct SensitivityReport {
  SensitivityInput input;
  double delta_phi = 0.0;        // from the fringe slope
  double delta_phi_class = 0.0;  // sqrt(eta/N)
  bool super_sensitive = false;
  double ratio = 0.0;
  bool boundary = false;  // the inequality holds with equality
  double threshold_visibility = 0.0;
  RequiredEfficiency required;
  double wavelength_nm = 632.8;
  double equivalent_wavelength_nm = 0.0;
};

inline SensitivityReport sensitivity_report(const SensitivityInput& in, double wavelength_nm = 632.8) {
  in.validate();
  SensitivityReport r;
  r.input = in;
  r.delta_phi = phase_uncertainty(in.delta_a, fringe_slope(in.n, in.visibility, in.phi));
  r.delta_phi_class = classical_limit(in.n / in.efficiency);
  const auto verdict = beats_classical(in);
  r.super_sensitive = verdict.beats;
  r.ratio = verdict.ratio;
  r.boundary = verdict.ratio == 1.0;
  r.threshold_visibility = threshold_visibility(in);
  if (in.visibility > 0.0) r.required = required_efficiency(in.n, in.visibility);
  r.wavelength_nm = wavelength_nm;
  r.equivalent_wavelength_nm = equivalent_wavelength(wavelength_nm, in.n);
  return r;
}

}  // namespace tsr
