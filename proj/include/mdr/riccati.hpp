#ifndef MDR_RICCATI_HPP
#define MDR_RICCATI_HPP

#include <array>
#include <optional>

#include "mdr/kkt_solver.hpp"

namespace mdr {

/// Solution of the two-description coupling equation
///   X (Kw1 - Kw0)^{-1} X = 2 X + Kw2 - Kw1,   X = Kw1 + A*,
/// by the closed form
///   X = M + M^{1/2} ( M^{-1/2} (Kw2 - Kw0) M^{-1/2} )^{1/2} M^{1/2},
/// with M = Kw1 - Kw0.
struct RiccatiSolution {
    SymMatrix x;
    SymMatrix a_star;
    double residual; // Frobenius norm of the equation defect
    bool interior;   // 0 < A* < Kx; false when no Kx was supplied
};

/// Requires Kw1 - Kw0 and Kw2 - Kw0 positive definite (OrderingViolation
/// otherwise).  Pass the source covariance to have the interiority of A*
/// checked.
RiccatiSolution solve_riccati(const SymMatrix& kw1, const SymMatrix& kw2,
                              const SymMatrix& kw0,
                              const std::optional<SymMatrix>& kx = std::nullopt);

/// Interior-solution test for a two-description instance: both
///   D0 + Kx - D1 - D2   and   D0^{-1} + Kx^{-1} - D1^{-1} - D2^{-1}
/// positive definite.  Margins are the minimum eigenvalues.
struct SufficiencyReport {
    bool sum_condition;
    bool inverse_condition;
    double sum_margin;
    double inverse_margin;
    bool holds() const { return sum_condition && inverse_condition; }
};

SufficiencyReport check_sufficient(const MDInstance& inst);

/// How the two-description solution was obtained.
enum class TwoDescPath {
    riccati,        // interior closed form
    boundary_zero,  // coupling zero: central cap slack everywhere
    boundary_full,  // coupling saturated: weaker individual cap slack
    delegated,      // indefinite conditions: general solver
};

const char* to_string(TwoDescPath p);

struct TwoDescSolution {
    double sum_rate_nats;
    TwoDescPath path;
    kkt::Case scase;
    SymMatrix a_star; // original coordinates
    TestChannel channel;
    std::vector<SymMatrix> d_achieved;
    SymMatrix d0_achieved;
    // Dominant corner points of the rate region, (R1, R2):
    // corner[0] pins R1 at its individual floor, corner[1] pins R2.
    std::array<std::array<double, 2>, 2> corners;
};

/// Full two-description solution: sum rate, achieving channel, corners.
TwoDescSolution two_description_solve(const MDInstance& inst);

} // namespace mdr

#endif
