#pragma once

// Occupation-number bookkeeping for n photons in m optical modes.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "tsr/errors.hpp"

namespace tsr {

using complex = std::complex<double>;

/// Absolute tolerance used by every normalization check.
inline constexpr double kNormTolerance = 1e-12;

/// Default cap on the number of basis states a sector may hold.
inline constexpr std::size_t kDefaultSectorCap = 1'000'000;

/// A basis ket |n_1 n_2 ... n_m>, stored as photons per mode.
class FockState {
public:
  FockState() = default;

  explicit FockState(std::vector<int> occupations) : occ_(std::move(occupations)) {
    if (occ_.empty()) throw InvalidArgument("FockState needs at least one mode");
    for (int n : occ_)
      if (n < 0) throw InvalidArgument("FockState occupations must be non-negative");
  }

  FockState(std::initializer_list<int> occupations)
      : FockState(std::vector<int>(occupations)) {}

  std::size_t modes() const noexcept { return occ_.size(); }
  int photons() const noexcept { return std::accumulate(occ_.begin(), occ_.end(), 0); }
  int operator[](std::size_t mode) const { return occ_.at(mode); }
  std::span<const int> occupations() const noexcept { return occ_; }

  /// |1 1 ... 1> over m modes.
  static FockState ones(std::size_t m) { return FockState(std::vector<int>(m, 1)); }

  std::string str() const {
    std::string s = "|";
    for (std::size_t i = 0; i < occ_.size(); ++i) {
      if (i) s += ',';
      s += std::to_string(occ_[i]);
    }
    return s + ">";
  }

  friend bool operator==(const FockState&, const FockState&) = default;
  friend auto operator<=>(const FockState& a, const FockState& b) { return a.occ_ <=> b.occ_; }

private:
  std::vector<int> occ_;
};

struct Sector {
  std::size_t modes = 1;
  int photons = 0;
  friend bool operator==(const Sector&, const Sector&) = default;
};

/// Number of basis states in a sector: C(n+m-1, m-1). Saturates at SIZE_MAX.
inline std::size_t sector_size(std::size_t m, int n) {
  if (m == 0 || n < 0) return 0;
  // C(n+m-1, k) with k = min(m-1, n); each partial product is itself a binomial.
  const std::uint64_t top = static_cast<std::uint64_t>(n) + m - 1;
  const std::uint64_t k = std::min<std::uint64_t>(m - 1, static_cast<std::uint64_t>(n));
  unsigned __int128 acc = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    acc = acc * (top - k + i) / i;
    if (acc > SIZE_MAX) return SIZE_MAX;
  }
  return static_cast<std::size_t>(acc);
}

/// All occupation lists of n photons in m modes, lexicographically descending:
/// (n,0,...,0) first, (0,...,0,n) last.
inline std::vector<FockState> enumerate_sector(std::size_t m, int n,
                                               std::size_t cap = kDefaultSectorCap) {
  if (m < 1) throw InvalidArgument("enumerate_sector: need at least one mode");
  if (n < 0) throw InvalidArgument("enumerate_sector: photon number must be non-negative");
  const std::size_t size = sector_size(m, n);
  if (size > cap)
    throw ResourceLimit("enumerate_sector: sector (" + std::to_string(m) + "," +
                        std::to_string(n) + ") has " + std::to_string(size) +
                        " states, cap is " + std::to_string(cap));

  std::vector<FockState> out;
  out.reserve(size);
  std::vector<int> occ(m, 0);
  occ[0] = n;
  while (true) {
    out.emplace_back(occ);
    // Next state in descending order: take one photon from the rightmost
    // occupied mode before the last and gather it with everything after.
    std::ptrdiff_t j = static_cast<std::ptrdiff_t>(m) - 2;
    while (j >= 0 && occ[j] == 0) --j;
    if (j < 0) break;
    int tail = 0;
    for (std::size_t k = j + 1; k < m; ++k) {
      tail += occ[k];
      occ[k] = 0;
    }
    --occ[j];
    occ[j + 1] = tail + 1;
  }
  return out;
}

/// Sparse complex superposition over one (m, n) sector.
class FockVector {
public:
  using Map = std::map<FockState, complex, std::greater<>>;

  explicit FockVector(Sector sector) : sector_(sector) {}

  FockVector(Sector sector, std::initializer_list<std::pair<const FockState, complex>> terms)
      : sector_(sector) {
    for (const auto& [state, amp] : terms) add(state, amp);
  }

  static FockVector basis(const FockState& s) {
    FockVector v({s.modes(), s.photons()});
    v.add(s, 1.0);
    return v;
  }

  const Sector& sector() const noexcept { return sector_; }
  const Map& amplitudes() const noexcept { return amps_; }
  std::size_t size() const noexcept { return amps_.size(); }

  complex amplitude(const FockState& s) const {
    auto it = amps_.find(s);
    return it == amps_.end() ? complex{} : it->second;
  }

  /// Adds `amp` to the coefficient of `s`.
  void add(const FockState& s, complex amp) {
    if (s.modes() != sector_.modes || s.photons() != sector_.photons)
      throw SectorMismatch("FockVector: " + s.str() + " lies outside the sector");
    amps_[s] += amp;
  }

  double norm2() const {
    double acc = 0.0;
    for (const auto& [s, a] : amps_) acc += std::norm(a);
    return acc;
  }

  bool is_normalized(double tol = kNormTolerance) const { return std::abs(norm2() - 1.0) <= tol; }

  FockVector normalized() const {
    const double n = std::sqrt(norm2());
    if (n == 0.0) throw NumericalFailure("FockVector: cannot normalize the zero vector");
    FockVector out(sector_);
    for (const auto& [s, a] : amps_) out.amps_.emplace(s, a / n);
    return out;
  }

private:
  Sector sector_;
  Map amps_;
};

/// <a|b>, conjugate-linear in `a`.
inline complex inner_product(const FockVector& a, const FockVector& b) {
  if (!(a.sector() == b.sector())) throw SectorMismatch("inner_product: sector mismatch");
  complex acc{};
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& large = a.size() <= b.size() ? b : a;
  for (const auto& [s, amp] : small.amplitudes()) {
    const complex other = large.amplitude(s);
    acc += &small == &a ? std::conj(amp) * other : std::conj(other) * amp;
  }
  return acc;
}

/// (|N,0> + |0,N>)/sqrt(2) over two modes.
inline FockVector noon_state(int n) {
  if (n < 1) throw InvalidArgument("noon_state: N must be at least 1");
  const double h = 1.0 / std::sqrt(2.0);
  return FockVector({2, n}, {{FockState{n, 0}, h}, {FockState{0, n}, h}});
}

}  // namespace tsr
