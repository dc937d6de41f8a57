// Prints herald probabilities and NOON fidelities for the symmetric and
// asymmetric multiports, then the resource bounds for N = 2..8.

#include <cstdio>

#include "tsr/metrology.hpp"
#include "tsr/multiport.hpp"
#include "tsr/quantum_sim.hpp"

int main() {
  std::printf("%-3s %-10s %12s %12s %12s %12s\n", "N", "multiport", "eta_p", "2N!/N^N", "fidelity", "up-to-phase");
  for (int n = 2; n <= 6; ++n) {
    const auto un = static_cast<std::size_t>(n);
    const double expected = tsr::preparation_efficiency(n);
    auto row = [&](const char* name, const tsr::ModeUnitary& u) {
      try {
        const auto h = tsr::herald_noon(u, n);
        std::printf("%-3d %-10s %12.8f %12.8f %12.8f %12.8f\n", n, name, h.herald_probability, expected,
                    tsr::noon_fidelity(h.state, n), tsr::noon_fidelity_up_to_phase(h.state, n));
      } catch (const tsr::NumericalFailure&) {
        std::printf("%-3d %-10s %12s %12.8f %12s %12s\n", n, name, "0", expected, "-", "-");
      }
    };
    row("symmetric", tsr::symmetric_multiport(un));
    if (n % 2 == 0) row("asymmetric", tsr::asymmetric_multiport(un));
  }

  std::printf("\n%-3s %14s %16s %18s %12s\n", "N", "kappa_i", "multi-exp. V", "heralded > class.", "lambda/N nm");
  for (int n = 2; n <= 8; ++n)
    std::printf("%-3d %14.8f %16.8f %18s %12.2f\n", n, tsr::kappa_scheme_i(n), tsr::multi_exposure_visibility(n),
                tsr::nondeterministic_supersensitivity_possible(n) ? "yes" : "no",
                tsr::equivalent_wavelength(632.8, n));
  return 0;
}
