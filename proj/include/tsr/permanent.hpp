#pragma once

#include <Eigen/Dense>

#include <bit>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "tsr/errors.hpp"

namespace tsr {

/// Default largest matrix dimension accepted by `permanent`.
inline constexpr std::size_t kDefaultPermanentCap = 12;

/// Matrix permanent by Ryser's formula, visiting column subsets in Gray-code
/// order so each step updates the row sums with a single column: O(2^n n).
///
///   Per(A) = (-1)^n sum_{S} (-1)^{|S|} prod_i sum_{j in S} a_ij
template <class Derived>
std::complex<double> permanent(const Eigen::MatrixBase<Derived>& a,
                               std::size_t cap = kDefaultPermanentCap) {
  using C = std::complex<double>;
  const auto n = a.rows();
  if (n != a.cols()) throw InvalidArgument("permanent: matrix must be square");
  if (static_cast<std::size_t>(n) > cap)
    throw ResourceLimit("permanent: dimension " + std::to_string(n) + " exceeds cap " +
                        std::to_string(cap));
  if (n == 0) return C(1.0);

  // The alternating sum cancels heavily, so row sums and the running total
  // are kept in extended precision.
  using L = long double;
  std::vector<L> re(static_cast<std::size_t>(n), 0.0L), im(static_cast<std::size_t>(n), 0.0L);
  L total_re = 0.0L, total_im = 0.0L;
  std::uint64_t gray = 0;
  const std::uint64_t steps = std::uint64_t{1} << n;
  for (std::uint64_t k = 1; k < steps; ++k) {
    const int col = std::countr_zero(k);
    const std::uint64_t bit = std::uint64_t{1} << col;
    gray ^= bit;
    const L sign_col = (gray & bit) ? 1.0L : -1.0L;
    L pr = 1.0L, pi = 0.0L;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto r = static_cast<std::size_t>(i);
      const C x = C(a(i, col));
      re[r] += sign_col * x.real();
      im[r] += sign_col * x.imag();
      const L t = pr * re[r] - pi * im[r];
      pi = pr * im[r] + pi * re[r];
      pr = t;
    }
    if (std::popcount(gray) % 2 == 0) {
      total_re += pr;
      total_im += pi;
    } else {
      total_re -= pr;
      total_im -= pi;
    }
  }
  const C total(static_cast<double>(total_re), static_cast<double>(total_im));
  return (n % 2 == 0) ? total : -total;
}

}  // namespace tsr
