#ifndef MDR_KKT_SOLVER_HPP
#define MDR_KKT_SOLVER_HPP

#include <optional>
#include <vector>

#include "mdr/instance.hpp"

namespace mdr {
namespace kkt {

/// Boundary pattern of the optimal coupling in whitened coordinates,
/// where the feasible set is 0 <= A <= I (Loewner order).
enum class Case {
    interior,  // no eigenvalue of A* on either face
    zero_eigs, // some eigenvalues at 0: central cap is slack there
    one_eigs,  // some eigenvalues at 1: one individual cap is slack
    both,      // eigenvalues on both faces
};

const char* to_string(Case c);

struct Options {
    double tol = 1e-8;        // stationarity residual target
    double eig_tol = 1e-7;    // boundary classification threshold
    int max_iter = 20000;     // per start
    int starts = 3;           // multistart count (0.5 I, eps I, (1-eps) I)
    int concavity_probes = 8; // random midpoint checks per solve
};

/// Coupling objective in whitened coordinates:
///   F(A) = log|Kw0 + A| - sum_l log|Kw_l + A|.
double objective_F(const SymMatrix& a, const SymMatrix& kw0,
                   const std::vector<SymMatrix>& kw);

/// Gradient of F:  f(A) = (Kw0+A)^{-1} - sum_l (Kw_l+A)^{-1}.
SymMatrix gradient_f(const SymMatrix& a, const SymMatrix& kw0,
                     const std::vector<SymMatrix>& kw);

struct MaximizeResult {
    SymMatrix a_star;
    double f_value;
    double stat_residual;     // norm of the gradient projected on feasible directions
    long iterations;          // total across starts
    bool concavity_ok;        // no midpoint probe found a concavity violation
    double multistart_spread; // best minus worst objective across converged starts
};

/// Maximizes F over 0 <= A <= I by projected gradient ascent with
/// Barzilai-Borwein steps, Armijo backtracking, and eigenvalue-clamping
/// projection, from several deterministic starts.
MaximizeResult maximize_F(const SymMatrix& kw0, const std::vector<SymMatrix>& kw,
                          const Options& opt = {});

struct CaseInfo {
    Case c;
    Eigen::MatrixXd basis_zero; // columns span the near-0 eigenspace of A*
    Eigen::MatrixXd basis_one;  // columns span the near-1 eigenspace
};

CaseInfo classify_case(const SymMatrix& a_star, double eig_tol = 1e-7);

struct Multipliers {
    SymMatrix lambda1; // multiplier of A >= 0
    SymMatrix lambda2; // multiplier of A <= I
    double stationarity; // |f(A*) + L1 - L2|_F
    double slack1;       // |L1 A*|_F
    double slack2;       // |L2 (A* - I)|_F
};

/// Recovers the face multipliers by projecting the gradient onto the
/// active eigenspaces.  A multiplier eigenvalue below -1e-6 means the
/// point is not a maximizer and raises KKTViolation; smaller negative
/// dust is clamped to zero.
Multipliers multipliers(const SymMatrix& a_star, const SymMatrix& grad,
                        const CaseInfo& info);

/// Central distortion the optimal scheme actually delivers when the
/// central cap is slack:  (D0^{-1} + Lambda1)^{-1}.
SymMatrix enhanced_central(const SymMatrix& d0, const SymMatrix& lambda1);

/// Individual distortion after tightening by the upper-face multiplier:
/// D_l - Lambda2.
SymMatrix enhanced_individual(const SymMatrix& dl, const SymMatrix& lambda2);

/// Complete solution of one instance.  Whitened-coordinate diagnostics
/// (a_star_white, multipliers, residuals) sit next to original-coordinate
/// deliverables (channel, achieved distortions, kz).
struct SumRateSolution {
    double sum_rate_nats;
    Case scase;

    SymMatrix a_star_white;
    SymMatrix lambda1;
    SymMatrix lambda2;
    double stationarity;
    double slack1;
    double slack2;
    double multistart_spread;
    bool concavity_certified;

    TestChannel channel;               // original coordinates
    std::vector<SymMatrix> d_achieved; // original coordinates
    SymMatrix d0_achieved;
    std::optional<SymMatrix> kz; // absent when the optimum needs unbounded noise
    double achievable_gap;       // | scheme rate - reported rate |
};

/// Exact sum rate for a valid instance, any L >= 1, any dimension.
SumRateSolution sum_rate(const MDInstance& inst, const Options& opt = {});

} // namespace kkt
} // namespace mdr

#endif
