#pragma once

// Exact multiphoton evolution through mode unitaries.
//
// Amplitudes are permanents of the unitary with rows repeated by the output
// occupations and columns repeated by the input occupations:
//
//   <out|U|in> = Per(U[out|in]) / sqrt(prod out_i! prod in_j!)
//
// The forward probability evaluates <Psi_f| U_phi U |1...1> from output
// amplitudes of U_phi U; the reversed probability evaluates
// <1...1| U^dagger U_phi^dagger |Psi_f> from amplitudes of the adjoint.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "tsr/errors.hpp"
#include "tsr/fock.hpp"
#include "tsr/multiport.hpp"
#include "tsr/parallel.hpp"
#include "tsr/permanent.hpp"

namespace tsr {

struct TransitionAmplitude {
  FockState input;
  FockState output;
  complex value;
};

/// Normalized two-mode state left after the herald, with its success probability.
struct HeraldedState {
  FockVector state;
  double herald_probability = 0.0;
};

/// Scheme (i): project modes 1,2 on BS^dagger(1/2)|N,0> and the rest on vacuum.
/// Scheme (ii), coherent-state projection, is only available as the closed
/// form `kappa_scheme_ii`.
enum class MeasurementScheme { beamsplitter_projection };

/// Mode carrying the interferometric phase unless a caller says otherwise.
inline constexpr std::size_t kPhaseMode = 1;

namespace detail {

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

inline std::vector<Eigen::Index> repeated_indices(const FockState& s) {
  std::vector<Eigen::Index> idx;
  for (std::size_t i = 0; i < s.modes(); ++i)
    for (int k = 0; k < s[i]; ++k) idx.push_back(static_cast<Eigen::Index>(i));
  return idx;
}

inline double occupation_norm(const FockState& s) {
  double f = 1.0;
  for (std::size_t i = 0; i < s.modes(); ++i) f *= factorial(s[i]);
  return f;
}

}  // namespace detail

/// <output| U |input>; exactly zero when photon numbers differ.
inline complex transition_amplitude(const Matrix& u, const FockState& input, const FockState& output,
                                    std::size_t cap = kDefaultPermanentCap) {
  if (input.modes() != static_cast<std::size_t>(u.cols()) ||
      output.modes() != static_cast<std::size_t>(u.rows()))
    throw SectorMismatch("transition_amplitude: mode count does not match the unitary");
  if (input.photons() != output.photons()) return {};
  const auto rows = detail::repeated_indices(output);
  const auto cols = detail::repeated_indices(input);
  const auto n = static_cast<Eigen::Index>(rows.size());
  Matrix sub(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) sub(r, c) = u(rows[r], cols[c]);
  const double norm = std::sqrt(detail::occupation_norm(output) * detail::occupation_norm(input));
  return permanent(sub, cap) / norm;
}

inline complex transition_amplitude(const ModeUnitary& u, const FockState& input,
                                    const FockState& output,
                                    std::size_t cap = kDefaultPermanentCap) {
  return transition_amplitude(u.matrix(), input, output, cap);
}

inline TransitionAmplitude transition(const ModeUnitary& u, const FockState& input,
                                      const FockState& output) {
  return {input, output, transition_amplitude(u, input, output)};
}

/// U applied to a state, expanded over the full output sector.
inline FockVector evolve(const ModeUnitary& u, const FockVector& in,
                         std::size_t sector_cap = kDefaultSectorCap) {
  if (in.sector().modes != u.dim()) throw SectorMismatch("evolve: mode count mismatch");
  FockVector out(in.sector());
  for (const auto& s : enumerate_sector(u.dim(), in.sector().photons, sector_cap)) {
    complex acc{};
    for (const auto& [src, amp] : in.amplitudes()) acc += amp * transition_amplitude(u, src, s);
    if (acc != complex{}) out.add(s, acc);
  }
  return out;
}

/// Embeds a two-mode vector into `dim` modes with vacuum in modes 3..dim.
inline FockVector embed_two_mode(const FockVector& v, std::size_t dim) {
  if (v.sector().modes != 2) throw SectorMismatch("embed_two_mode: expected a two-mode vector");
  if (dim < 2) throw InvalidArgument("embed_two_mode: need at least two modes");
  FockVector out({dim, v.sector().photons});
  for (const auto& [s, amp] : v.amplitudes()) {
    std::vector<int> occ(dim, 0);
    occ[0] = s[0];
    occ[1] = s[1];
    out.add(FockState(std::move(occ)), amp);
  }
  return out;
}

/// <psi_N| for scheme (i): BS^dagger(1/2)|N,0> on modes 1,2.
inline FockVector scheme_i_state(int n) {
  const ModeUnitary bs = compose({Beamsplitter{0, 1, 0.5}}, 2);
  return evolve(bs.adjoint(), FockVector::basis(FockState{n, 0}));
}

/// |Psi_f> = |psi_N>_{12} |0...0>_{3..N}.
inline FockVector measured_state(int n, std::size_t dim,
                                 MeasurementScheme = MeasurementScheme::beamsplitter_projection) {
  return embed_two_mode(scheme_i_state(n), dim);
}

/// Projects U|1...1> onto vacuum in modes 3..N and returns the normalized
/// remainder in modes 1,2.
inline HeraldedState herald_noon(const ModeUnitary& u, int n) {
  if (n < 1 || u.dim() != static_cast<std::size_t>(n))
    throw InvalidArgument("herald_noon: unitary dimension must equal the photon number");
  const FockState input = FockState::ones(u.dim());
  FockVector kept({2, n});
  for (int n1 = n; n1 >= 0; --n1) {
    std::vector<int> occ(u.dim(), 0);
    occ[0] = n1;
    if (u.dim() > 1) occ[1] = n - n1;
    const complex amp = transition_amplitude(u, input, FockState(std::move(occ)));
    kept.add(FockState{n1, n - n1}, amp);
  }
  const double eta = kept.norm2();
  if (eta < 1e-15) throw NumericalFailure("herald_noon: herald probability vanishes");
  return {kept.normalized(), std::min(eta, 1.0)};
}

/// |<NOON_N|psi>|^2 against (|N0> + |0N>)/sqrt(2).
inline double noon_fidelity(const FockVector& psi, int n) {
  return std::norm(inner_product(noon_state(n), psi));
}

/// Fidelity maximized over the relative phase between |N0> and |0N>, i.e.
/// against the NOON state up to a phase shift on one arm.
inline double noon_fidelity_up_to_phase(const FockVector& psi, int n) {
  const double a = std::abs(psi.amplitude(FockState{n, 0}));
  const double b = std::abs(psi.amplitude(FockState{0, n}));
  return (a + b) * (a + b) / 2.0;
}

/// U_phi U: the multiport followed by the phase shifter.
inline ModeUnitary with_phase(const ModeUnitary& u, double phi, std::size_t phase_mode = kPhaseMode) {
  return phase_on_mode(u.dim(), phase_mode, phi).after(u);
}

/// P = |<Psi_f| U_phi U |1...1>|^2.
inline double forward_probability(const ModeUnitary& u, double phi,
                                  MeasurementScheme scheme = MeasurementScheme::beamsplitter_projection,
                                  std::size_t phase_mode = kPhaseMode) {
  const int n = static_cast<int>(u.dim());
  const ModeUnitary w = with_phase(u, phi, phase_mode);
  const FockState input = FockState::ones(u.dim());
  const FockVector measured = measured_state(n, u.dim(), scheme);
  complex acc{};
  for (const auto& [s, f] : measured.amplitudes())
    acc += std::conj(f) * transition_amplitude(w, input, s);
  return std::norm(acc);
}

/// P = |<1...1| U^dagger U_phi^dagger |Psi_f>|^2.
inline double reversed_probability(const ModeUnitary& u, double phi,
                                   MeasurementScheme scheme = MeasurementScheme::beamsplitter_projection,
                                   std::size_t phase_mode = kPhaseMode) {
  const int n = static_cast<int>(u.dim());
  const ModeUnitary reversed = u.adjoint().after(phase_on_mode(u.dim(), phase_mode, phi).adjoint());
  const FockState target = FockState::ones(u.dim());
  const FockVector source = measured_state(n, u.dim(), scheme);
  complex acc{};
  for (const auto& [s, f] : source.amplitudes()) acc += f * transition_amplitude(reversed, s, target);
  return std::norm(acc);
}

struct QuantumScanPoint {
  double phi = 0.0;
  double forward = 0.0;
  double reversed = 0.0;
};

inline std::vector<QuantumScanPoint> quantum_scan(const ModeUnitary& u, const std::vector<double>& phis,
                                                  std::size_t jobs = 1) {
  return parallel_map(phis.size(), jobs, [&](std::size_t i) {
    return QuantumScanPoint{phis[i], forward_probability(u, phis[i]), reversed_probability(u, phis[i])};
  });
}

/// kappa for scheme (i): 1/2^N.
inline double kappa_scheme_i(int n) {
  if (n < 1) throw InvalidArgument("kappa_scheme_i: N must be at least 1");
  return std::ldexp(1.0, -n);
}

/// kappa for scheme (i) evaluated from the optics: |<N,0|BS(1/2)|N,0>|^2.
inline double kappa_scheme_i_from_amplitude(int n) {
  if (n < 1) throw InvalidArgument("kappa_scheme_i: N must be at least 1");
  const ModeUnitary bs = compose({Beamsplitter{0, 1, 0.5}}, 2);
  return std::norm(transition_amplitude(bs, FockState{n, 0}, FockState{n, 0}));
}

/// kappa for scheme (ii) at the optimum |alpha|^2 = N/2: 2^{-N}/sqrt(2 pi N).
/// Closed form only; no homodyne detection is simulated.
inline double kappa_scheme_ii(int n) {
  if (n < 1) throw InvalidArgument("kappa_scheme_ii: N must be at least 1");
  return kappa_scheme_i(n) / std::sqrt(2.0 * std::numbers::pi * n);
}

}  // namespace tsr
