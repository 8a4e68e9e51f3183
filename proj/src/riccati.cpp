#include "mdr/riccati.hpp"

#include "mdr/bounds.hpp"

#include <cmath>
#include <sstream>

namespace mdr {

namespace {

// Channel sum rate (1/2) log( prod_l |Kx + Kw_l| / |Kw| ), shared guard
// that the assembled covariance is usable.
double channel_rate(const SymMatrix& kx, const std::vector<SymMatrix>& blocks,
                    const SymMatrix& a, const char* what) {
    const SymMatrix kw_big = assemble_kw(blocks, a);
    if (eig_sym(kw_big).values(0) <= 0.0) {
        throw TheoryViolation(std::string(what) +
                              ": assembled noise covariance is not positive definite");
    }
    double v = -log_det_pd(kw_big);
    for (const SymMatrix& b : blocks) v += log_det_pd(kx + b);
    return 0.5 * v;
}

void require_two(const MDInstance& inst, const char* what) {
    if (inst.l() != 2) {
        std::ostringstream os;
        os << what << ": needs exactly two descriptions, got " << inst.l();
        throw Unsupported(os.str());
    }
}

} // namespace

RiccatiSolution solve_riccati(const SymMatrix& kw1, const SymMatrix& kw2,
                              const SymMatrix& kw0,
                              const std::optional<SymMatrix>& kx) {
    const int n = kw0.n();
    if (kw1.n() != n || kw2.n() != n) throw DimensionError("solve_riccati: size mismatch");
    const SymMatrix m = kw1 - kw0;
    const SymMatrix g2 = kw2 - kw0;
    if (!is_pd(m)) throw OrderingViolation("solve_riccati: Kw0 < Kw1 fails");
    if (!is_pd(g2)) throw OrderingViolation("solve_riccati: Kw0 < Kw2 fails");

    const SymMatrix m_half = sqrt_psd(m);
    const SymMatrix m_ihalf = inv_sqrt_pd(m);
    const SymMatrix core = sqrt_psd(SymMatrix(m_ihalf.mat() * g2.mat() * m_ihalf.mat()));
    const SymMatrix x(m.mat() + m_half.mat() * core.mat() * m_half.mat());

    RiccatiSolution sol;
    sol.x = x;
    sol.a_star = x - kw1;
    sol.interior = kx.has_value() && is_pd(sol.a_star) &&
                   psd_compare(sol.a_star, *kx).verdict == PsdVerdict::less;
    const Eigen::MatrixXd defect =
        x.mat() * inverse_pd(m).mat() * x.mat() - 2.0 * x.mat() - g2.mat() + m.mat();
    sol.residual = defect.norm();
    if (sol.residual > 1e-6 * std::max(1.0, x.mat().norm())) {
        std::ostringstream os;
        os << "solve_riccati: closed form left residual " << sol.residual;
        throw InternalError(os.str());
    }
    return sol;
}

SufficiencyReport check_sufficient(const MDInstance& inst) {
    require_two(inst, "check_sufficient");
    ensure_valid(inst);
    const SymMatrix sum_cond = inst.d0 + inst.kx - inst.d[0] - inst.d[1];
    const SymMatrix inv_cond = inverse_pd(inst.d0) + inverse_pd(inst.kx) -
                               inverse_pd(inst.d[0]) - inverse_pd(inst.d[1]);
    SufficiencyReport r;
    r.sum_margin = eig_sym(sum_cond).values(0);
    r.inverse_margin = eig_sym(inv_cond).values(0);
    r.sum_condition = r.sum_margin > default_eig_tol(sum_cond);
    r.inverse_condition = r.inverse_margin > default_eig_tol(inv_cond);
    return r;
}

const char* to_string(TwoDescPath p) {
    switch (p) {
        case TwoDescPath::riccati: return "riccati";
        case TwoDescPath::boundary_zero: return "boundary_zero";
        case TwoDescPath::boundary_full: return "boundary_full";
        case TwoDescPath::delegated: return "delegated";
    }
    return "?";
}

TwoDescSolution two_description_solve(const MDInstance& inst) {
    require_two(inst, "two_description_solve");
    ensure_valid(inst);
    const int n = inst.n();

    TwoDescSolution sol;
    const SufficiencyReport suff = check_sufficient(inst);
    const SymMatrix zero = SymMatrix::zero(n);

    if (suff.holds()) {
        const SymMatrix kw0 = noise_of_distortion(inst.d0, inst.kx);
        const SymMatrix kw1 = noise_of_distortion(inst.d[0], inst.kx);
        const SymMatrix kw2 = noise_of_distortion(inst.d[1], inst.kx);
        const RiccatiSolution ric = solve_riccati(kw1, kw2, kw0, inst.kx);

        if (!ric.interior) {
            throw TheoryViolation(
                "two_description_solve: interior coupling left the open box despite "
                "the sufficiency conditions");
        }
        const SymMatrix match = inverse_pd(kw0 + ric.a_star) - inverse_pd(kw1 + ric.a_star) -
                                inverse_pd(kw2 + ric.a_star);
        if (match.mat().norm() > 1e-6 * std::max(1.0, inverse_pd(kw0 + ric.a_star).mat().norm())) {
            throw TheoryViolation("two_description_solve: coupling match equation violated");
        }

        sol.path = TwoDescPath::riccati;
        sol.scase = kkt::Case::interior;
        sol.a_star = ric.a_star;
        sol.channel = TestChannel{{kw1, kw2}, ric.a_star};
        sol.d_achieved = {inst.d[0], inst.d[1]};
        sol.d0_achieved = inst.d0;
        sol.sum_rate_nats = lower_bound_at(inst, kz_from_A(ric.a_star, inst.kx));
    } else {
        const SymMatrix inv_cond = inverse_pd(inst.d0) + inverse_pd(inst.kx) -
                                   inverse_pd(inst.d[0]) - inverse_pd(inst.d[1]);
        const SymMatrix sum_cond = inst.d0 + inst.kx - inst.d[0] - inst.d[1];
        // The objective gradient at the coupling extremes, whitened:
        // at A = 0 it is congruent to inv_cond, at A = I to -sum_cond.
        // A face is optimal when the gradient points out of the box there.
        const PsdVerdict inv_v = psd_compare(inv_cond, zero).verdict;
        const PsdVerdict sum_v = psd_compare(sum_cond, zero).verdict;
        const bool inv_nsd = inv_v == PsdVerdict::less || inv_v == PsdVerdict::less_equal ||
                             inv_v == PsdVerdict::equal;
        const bool sum_nsd = sum_v == PsdVerdict::less || sum_v == PsdVerdict::less_equal ||
                             sum_v == PsdVerdict::equal;

        if (inv_nsd) {
            // No coupling: each description works alone and the central
            // receiver already beats its cap.
            const SymMatrix kw1 = noise_of_distortion(inst.d[0], inst.kx);
            const SymMatrix kw2 = noise_of_distortion(inst.d[1], inst.kx);
            sol.path = TwoDescPath::boundary_zero;
            sol.scase = kkt::Case::zero_eigs;
            sol.a_star = zero;
            sol.channel = TestChannel{{kw1, kw2}, zero};
            sol.d_achieved = {inst.d[0], inst.d[1]};
            sol.d0_achieved = inverse_pd(inverse_pd(inst.d[0]) + inverse_pd(inst.d[1]) -
                                         inverse_pd(inst.kx));
            sol.sum_rate_nats = individual_bound(inst, 0) + individual_bound(inst, 1);
        } else if (sum_nsd) {
            // Saturated coupling: the central cap dictates everything and
            // the second description can be relaxed until it binds.
            const WhitenReport w = whiten(inst);
            const SymMatrix s_half = sqrt_psd(inst.kx);
            const SymMatrix idw = SymMatrix::identity(n);
            const SymMatrix lambda2 =
                w.whitened.d[0] + w.whitened.d[1] - w.whitened.d0 - idw;
            const SymMatrix tight = kkt::enhanced_individual(w.whitened.d[1], lambda2);
            const SymMatrix b1 = noise_of_distortion(w.whitened.d[0], idw);
            const SymMatrix b2 = noise_of_distortion(tight, idw);
            const auto unwhiten = [&](const SymMatrix& m) {
                return SymMatrix(s_half.mat() * m.mat() * s_half.mat());
            };
            sol.path = TwoDescPath::boundary_full;
            sol.scase = kkt::Case::one_eigs;
            sol.a_star = inst.kx;
            sol.channel = TestChannel{{unwhiten(b1), unwhiten(b2)}, inst.kx};
            sol.d_achieved = {inst.d[0], unwhiten(tight)};
            sol.d0_achieved = inst.d0;
            sol.sum_rate_nats = central_bound(inst);
        } else {
            const kkt::SumRateSolution k = kkt::sum_rate(inst);
            sol.path = TwoDescPath::delegated;
            sol.scase = k.scase;
            sol.a_star = k.channel.a;
            sol.channel = k.channel;
            sol.d_achieved = k.d_achieved;
            sol.d0_achieved = k.d0_achieved;
            sol.sum_rate_nats = k.sum_rate_nats;
        }
    }

    if (sol.path != TwoDescPath::delegated) {
        const double achievable =
            channel_rate(inst.kx, sol.channel.kw, sol.channel.a, "two_description_solve");
        if (std::abs(achievable - sol.sum_rate_nats) >
            1e-5 * std::max(1.0, std::abs(sol.sum_rate_nats))) {
            throw TheoryViolation("two_description_solve: scheme rate disagrees with bound");
        }
    }

    const double r1 = individual_bound(inst, 0);
    const double r2 = individual_bound(inst, 1);
    sol.corners[0] = {r1, sol.sum_rate_nats - r1};
    sol.corners[1] = {sol.sum_rate_nats - r2, r2};
    return sol;
}

} // namespace mdr
