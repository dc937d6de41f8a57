#pragma once

// Mode unitaries for linear-optical multiports.
//
// Beamsplitter convention (symmetric, i-phase):
//
//     B(r) = [[ sqrt(r),      i sqrt(1-r) ],
//             [ i sqrt(1-r),  sqrt(r)     ]]
//
// Elements compose in application order: compose({E1, E2}) = E2 * E1.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "tsr/errors.hpp"
#include "tsr/fock.hpp"

namespace tsr {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Entrywise tolerance on U^dagger U = I.
inline constexpr double kUnitarityTolerance = 1e-10;

/// Largest entrywise deviation of U^dagger U from the identity.
inline double unitarity_residual(const Matrix& u) {
  if (u.rows() != u.cols()) return std::numeric_limits<double>::infinity();
  const Matrix d = u.adjoint() * u - Matrix::Identity(u.rows(), u.cols());
  return d.cwiseAbs().maxCoeff();
}

/// An N x N unitary acting on optical mode amplitudes. Unitarity is checked
/// on construction.
class ModeUnitary {
public:
  explicit ModeUnitary(Matrix m, double tol = kUnitarityTolerance) : m_(std::move(m)) {
    if (m_.rows() == 0 || m_.rows() != m_.cols())
      throw InvalidArgument("ModeUnitary: matrix must be square and non-empty");
    const double r = unitarity_residual(m_);
    if (!(r <= tol))
      throw NumericalFailure("ModeUnitary: not unitary (residual " + std::to_string(r) + ")");
  }

  static ModeUnitary identity(std::size_t n) {
    return ModeUnitary(Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
  const Matrix& matrix() const noexcept { return m_; }
  complex operator()(std::size_t row, std::size_t col) const {
    return m_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
  }

  ModeUnitary adjoint() const { return ModeUnitary(m_.adjoint()); }

  /// Apply `this` after `first`.
  ModeUnitary after(const ModeUnitary& first) const {
    if (first.dim() != dim()) throw InvalidArgument("ModeUnitary: dimension mismatch");
    return ModeUnitary(m_ * first.m_);
  }

  double residual() const { return unitarity_residual(m_); }

private:
  Matrix m_;
};

// ---------------------------------------------------------------------------
// Optical elements

struct Beamsplitter {
  std::size_t mode_a = 0;
  std::size_t mode_b = 1;
  double reflectivity = 0.5;
};

struct PhaseShifter {
  std::size_t mode = 0;
  double phase = 0.0;  // radians
};

struct ModeSwap {
  std::size_t mode_a = 0;
  std::size_t mode_b = 1;
};

using OpticalElement = std::variant<Beamsplitter, PhaseShifter, ModeSwap>;

namespace detail {

inline void check_mode(std::size_t mode, std::size_t dim) {
  if (mode >= dim)
    throw InvalidArgument("optical element: mode " + std::to_string(mode) +
                          " out of range for dimension " + std::to_string(dim));
}

inline void check_pair(std::size_t a, std::size_t b, std::size_t dim) {
  check_mode(a, dim);
  check_mode(b, dim);
  if (a == b) throw InvalidArgument("optical element: modes must be distinct");
}

}  // namespace detail

inline void validate(const OpticalElement& e, std::size_t dim) {
  std::visit(
      [dim](const auto& el) {
        using T = std::decay_t<decltype(el)>;
        if constexpr (std::is_same_v<T, Beamsplitter>) {
          detail::check_pair(el.mode_a, el.mode_b, dim);
          if (!(el.reflectivity >= 0.0 && el.reflectivity <= 1.0))
            throw InvalidArgument("beamsplitter: reflectivity must lie in [0, 1]");
        } else if constexpr (std::is_same_v<T, PhaseShifter>) {
          detail::check_mode(el.mode, dim);
          if (!std::isfinite(el.phase)) throw InvalidArgument("phase shifter: phase must be finite");
        } else {
          detail::check_pair(el.mode_a, el.mode_b, dim);
        }
      },
      e);
}

/// The dim x dim matrix of a single element.
inline Matrix element_matrix(const OpticalElement& e, std::size_t dim) {
  validate(e, dim);
  const auto n = static_cast<Eigen::Index>(dim);
  Matrix m = Matrix::Identity(n, n);
  std::visit(
      [&m](const auto& el) {
        using T = std::decay_t<decltype(el)>;
        if constexpr (std::is_same_v<T, Beamsplitter>) {
          const auto a = static_cast<Eigen::Index>(el.mode_a);
          const auto b = static_cast<Eigen::Index>(el.mode_b);
          const double t = std::sqrt(el.reflectivity);
          const complex s{0.0, std::sqrt(1.0 - el.reflectivity)};
          m(a, a) = t;
          m(b, b) = t;
          m(a, b) = s;
          m(b, a) = s;
        } else if constexpr (std::is_same_v<T, PhaseShifter>) {
          const auto i = static_cast<Eigen::Index>(el.mode);
          m(i, i) = std::polar(1.0, el.phase);
        } else {
          const auto a = static_cast<Eigen::Index>(el.mode_a);
          const auto b = static_cast<Eigen::Index>(el.mode_b);
          m(a, a) = 0.0;
          m(b, b) = 0.0;
          m(a, b) = 1.0;
          m(b, a) = 1.0;
        }
      },
      e);
  return m;
}

/// Product of the element unitaries, the first element acting first.
inline ModeUnitary compose(std::span<const OpticalElement> elements, std::size_t dim) {
  if (dim == 0) throw InvalidArgument("compose: dimension must be positive");
  for (const auto& e : elements) validate(e, dim);
  const auto n = static_cast<Eigen::Index>(dim);
  Matrix acc = Matrix::Identity(n, n);
  for (const auto& e : elements) acc = element_matrix(e, dim) * acc;
  return ModeUnitary(std::move(acc));
}

inline ModeUnitary compose(const std::vector<OpticalElement>& elements, std::size_t dim) {
  return compose(std::span<const OpticalElement>(elements), dim);
}

/// diag(1, ..., e^{i phase}, ..., 1) with the phase on `mode`.
inline ModeUnitary phase_on_mode(std::size_t dim, std::size_t mode, double phase) {
  return ModeUnitary(element_matrix(PhaseShifter{mode, phase}, dim));
}

// ---------------------------------------------------------------------------
// Completion and canonical multiports

/// Threshold below which a projected canonical vector counts as dependent.
inline constexpr double kCompletionSkipThreshold = 1e-8;

/// Extends orthonormal columns to a full unitary. Remaining columns are
/// Gram-Schmidt orthonormalized canonical basis vectors e_0, e_1, ... taken
/// in index order, skipping near-dependent candidates.
inline ModeUnitary complete_unitary(const std::vector<Vector>& columns, std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  if (dim == 0) throw InvalidArgument("complete_unitary: dimension must be positive");
  if (columns.size() > dim) throw InvalidArgument("complete_unitary: too many columns");
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].size() != n) throw InvalidArgument("complete_unitary: column length mismatch");
    for (std::size_t j = 0; j <= i; ++j) {
      const complex g = columns[j].dot(columns[i]);
      const complex expect = i == j ? 1.0 : 0.0;
      if (std::abs(g - expect) > kUnitarityTolerance)
        throw InvalidArgument("complete_unitary: input columns are not orthonormal");
    }
  }

  Matrix u(n, n);
  Eigen::Index filled = 0;
  for (const auto& c : columns) u.col(filled++) = c;

  for (Eigen::Index k = 0; k < n && filled < n; ++k) {
    Vector v = Vector::Unit(n, k);
    // Two passes of modified Gram-Schmidt keep the completion orthogonal to
    // machine precision.
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index j = 0; j < filled; ++j) v -= u.col(j).dot(v) * u.col(j);
    const double norm = v.norm();
    if (norm < kCompletionSkipThreshold) continue;
    u.col(filled++) = v / norm;
  }
  if (filled != n) throw NumericalFailure("complete_unitary: failed to span the space");
  return ModeUnitary(std::move(u));
}

/// Discrete-Fourier multiport, U_jk = exp(2 pi i jk/N)/sqrt(N). Every input
/// mode is spread evenly over all outputs.
inline ModeUnitary symmetric_multiport(std::size_t n) {
  if (n < 2) throw InvalidArgument("symmetric_multiport: N must be at least 2");
  const auto dim = static_cast<Eigen::Index>(n);
  Matrix u(dim, dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (Eigen::Index j = 0; j < dim; ++j)
    for (Eigen::Index k = 0; k < dim; ++k) {
      // Reduce jk mod N before scaling so equal phases come out bit-identical.
      const auto jk = static_cast<double>((j * k) % dim);
      u(j, k) = std::polar(scale, 2.0 * std::numbers::pi * jk / static_cast<double>(n));
    }
  return ModeUnitary(std::move(u));
}

/// Even-N multiport whose first two columns are 1/sqrt(N) and
/// exp(i(2 pi k/N + offset))/sqrt(N). Driving modes 0 and 1 with
/// (1, e^{i phi})/sqrt(2) gives output intensities (1 + cos(phi + 2 pi k/N + offset))/N.
inline ModeUnitary asymmetric_multiport(std::size_t n, double offset = 0.0) {
  if (n < 2 || n % 2 != 0) throw InvalidArgument("asymmetric_multiport: N must be even and >= 2");
  const auto dim = static_cast<Eigen::Index>(n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  Vector c1 = Vector::Constant(dim, scale);
  Vector c2(dim);
  for (Eigen::Index k = 0; k < dim; ++k)
    c2(k) = std::polar(scale, 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n) + offset);
  return complete_unitary({c1, c2}, n);
}

/// Haar-random unitary from the QR decomposition of a complex Ginibre matrix.
template <class Rng>
ModeUnitary random_unitary(std::size_t n, Rng& rng) {
  const auto dim = static_cast<Eigen::Index>(n);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix z(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) z(i, j) = complex(gauss(rng), gauss(rng));
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < dim; ++j) {
    const complex d = r(j, j);
    if (std::abs(d) > 0.0) q.col(j) *= d / std::abs(d);
  }
  return ModeUnitary(std::move(q));
}

// ---------------------------------------------------------------------------
// Polarization preparation

/// Jones vector of the laser light entering the half-wave plate: linear
/// polarization at -45 degrees. This reference makes the relative phase
/// vanish at zero plate angle.
inline Eigen::Vector2cd laser_polarization() {
  const double h = 1.0 / std::sqrt(2.0);
  return {complex(h), complex(-h)};
}

/// Half-wave plate with its fast axis at `angle` (horizontal = 0).
inline Eigen::Matrix2cd half_wave_plate(double angle) {
  const double c = std::cos(2.0 * angle), s = std::sin(2.0 * angle);
  Eigen::Matrix2cd m;
  m << c, s, s, -c;
  return m;
}

/// Quarter-wave plate with its fast axis at `angle`.
inline Eigen::Matrix2cd quarter_wave_plate(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Eigen::Matrix2cd rot;
  rot << c, -s, s, c;
  Eigen::Matrix2cd retard = Eigen::Matrix2cd::Zero();
  retard(0, 0) = 1.0;
  retard(1, 1) = complex(0.0, 1.0);
  return rot * retard * rot.transpose();
}

/// Two-mode field after HWP(angle) then QWP(45 deg), with the global phase
/// removed so the first component is real and positive. The result is
/// (1, e^{i phi})/sqrt(2) with phi = 4 * angle.
inline Eigen::Vector2cd polarization_input(double hwp_angle) {
  Eigen::Vector2cd out =
      quarter_wave_plate(std::numbers::pi / 4.0) * half_wave_plate(hwp_angle) * laser_polarization();
  const complex a = out(0);
  if (std::abs(a) > 0.0) out *= std::conj(a) / std::abs(a);
  return out;
}

}  // namespace tsr
