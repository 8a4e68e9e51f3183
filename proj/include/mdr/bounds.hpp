#ifndef MDR_BOUNDS_HPP
#define MDR_BOUNDS_HPP

#include <functional>

#include "mdr/instance.hpp"

namespace mdr {

/// Converse sum-rate bound evaluated at one auxiliary noise covariance Kz:
///   (1/2) log( |Kx| |Kx+Kz|^{L-1} |D0+Kz| / (|D0| prod_l |D_l+Kz|) )   [nats].
/// Kz may be positive semidefinite; if rounding pushes a determinant
/// negative the evaluation retries at Kz + eps I with eps = 1e-12.
double lower_bound_at(const MDInstance& inst, const SymMatrix& kz);

/// Rate floor for description l alone: (1/2) log(|Kx| / |D_l|).  l is
/// zero-based.
double individual_bound(const MDInstance& inst, int l);

/// Rate floor for the central receiver: (1/2) log(|Kx| / |D0|).
double central_bound(const MDInstance& inst);

/// Auxiliary noise covariance induced by a coupling matrix A:
///   Kz = Kx (Kx - A)^{-1} Kx - Kx.
/// Requires 0 <= A < Kx; Kz is positive definite exactly when A is.
SymMatrix kz_from_A(const SymMatrix& a, const SymMatrix& kx);

/// Result of the derivative-free search over Kz.
struct SupResult {
    double value;     // best bound found, nats
    SymMatrix kz;     // where it was found (original coordinates)
    long evaluations; // bound evaluations spent
};

/// Approximate supremum of lower_bound_at over Kz >= 0 by direct search:
/// log-spaced eigenvalue grids over several orthobases (via the coupling
/// parameterization kz_from_A), then cyclic eigenvalue line searches and
/// pairwise rotation refinements of the incumbent.  Deterministic; the
/// candidate sequence does not depend on the budget, so the returned
/// value is nondecreasing in it.  Every candidate is feasible, hence the
/// result never exceeds the true supremum.
SupResult sup_lower_bound(const MDInstance& inst, long budget);

/// Runs the same candidate stream that sup_lower_bound maximizes over,
/// invoking visit(value, kz_whitened) on every evaluation.  Exposed so
/// independent consistency checks can reuse the grid.  Returns the number
/// of evaluations performed.
long scan_lower_bound(const MDInstance& whitened, long budget,
                      const std::function<void(double, const SymMatrix&)>& visit);

} // namespace mdr

#endif
