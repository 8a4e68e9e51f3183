#include "mdr/kkt_solver.hpp"

#include "mdr/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <sstream>

namespace mdr {
namespace kkt {

namespace {

constexpr double kActiveTol = 1e-12;    // activity detection inside the loop
constexpr double kMultiplierDust = 1e-6; // worst tolerated multiplier sign error

void check_blocks(const SymMatrix& kw0, const std::vector<SymMatrix>& kw, const char* what) {
    if (kw.empty()) throw DimensionError(std::string(what) + ": no description blocks");
    const int n = kw0.n();
    if (!is_pd(kw0)) throw NotPd(std::string(what) + ": Kw0 is not positive definite");
    for (const SymMatrix& k : kw) {
        if (k.n() != n) throw DimensionError(std::string(what) + ": block size mismatch");
        if (!is_pd(k)) throw NotPd(std::string(what) + ": description block is not positive definite");
    }
}

Eigen::MatrixXd pos_part(const Eigen::MatrixXd& sym) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (sym + sym.transpose()));
    const Eigen::VectorXd clamped = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().transpose();
}

std::vector<int> indices_where(const Eigen::VectorXd& lam, bool zero_side, double tol) {
    std::vector<int> idx;
    for (int i = 0; i < lam.size(); ++i) {
        if (zero_side ? (lam(i) <= tol) : (lam(i) >= 1.0 - tol)) idx.push_back(i);
    }
    return idx;
}

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& m, const std::vector<int>& idx) {
    Eigen::MatrixXd s(idx.size(), idx.size());
    for (size_t i = 0; i < idx.size(); ++i) {
        for (size_t j = 0; j < idx.size(); ++j) s(i, j) = m(idx[i], idx[j]);
    }
    return s;
}

void add_embedded(Eigen::MatrixXd& m, const Eigen::MatrixXd& block,
                  const std::vector<int>& idx, double sign) {
    for (size_t i = 0; i < idx.size(); ++i) {
        for (size_t j = 0; j < idx.size(); ++j) m(idx[i], idx[j]) += sign * block(i, j);
    }
}

// Norm of the gradient projected onto the feasible directions at A:
// inside the box the whole gradient counts; on the lower face only its
// outward-positive part can be followed, on the upper face only the
// negative part.
double tangent_residual(const EigSym& ea, const Eigen::MatrixXd& grad, double act_tol) {
    const Eigen::MatrixXd b = ea.vectors.transpose() * grad * ea.vectors;
    const std::vector<int> zero = indices_where(ea.values, true, act_tol);
    const std::vector<int> one = indices_where(ea.values, false, act_tol);
    Eigen::MatrixXd p = b;
    if (!zero.empty()) {
        const Eigen::MatrixXd bz = submatrix(b, zero);
        add_embedded(p, pos_part(bz) - bz, zero, 1.0);
    }
    if (!one.empty()) {
        const Eigen::MatrixXd bo = submatrix(b, one);
        add_embedded(p, pos_part(bo), one, -1.0);
    }
    return p.norm();
}

SymMatrix project_box(const SymMatrix& a) {
    EigSym e = eig_sym(a);
    const Eigen::VectorXd clamped = e.values.cwiseMax(0.0).cwiseMin(1.0);
    return SymMatrix(e.vectors * clamped.asDiagonal() * e.vectors.transpose());
}

double frob_inner(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a.array() * b.array()).sum();
}

struct StartRun {
    SymMatrix a;
    double f_value = -std::numeric_limits<double>::infinity();
    double residual = std::numeric_limits<double>::infinity();
    long iterations = 0;
    bool converged = false;
};

StartRun ascend(SymMatrix a, const SymMatrix& kw0, const std::vector<SymMatrix>& kw,
                const Options& opt) {
    StartRun run;
    double fval = objective_F(a, kw0, kw);
    SymMatrix grad = gradient_f(a, kw0, kw);
    double step = 1.0 / (1.0 + spectral_norm(grad));
    bool fresh_step = true; // step was just (re)set to the gradient scale

    // Nonmonotone sufficient-increase reference: near the maximum the
    // certifiable per-step gain falls below the evaluation noise of F,
    // so progress is measured against the recent best with a noise
    // allowance instead of strictly monotone Armijo.
    std::deque<double> window{fval};

    for (int it = 0; it < opt.max_iter; ++it) {
        ++run.iterations;
        const EigSym ea = eig_sym(a);
        const double resid = tangent_residual(ea, grad.mat(), kActiveTol);
        if (resid <= opt.tol) {
            run.converged = true;
            break;
        }

        const double fref = *std::max_element(window.begin(), window.end());
        const double noise = 1e-12 * (1.0 + std::abs(fref));

        // Backtracking on the projected step.
        SymMatrix cand = a;
        double fcand = fval;
        double s = step;
        bool accepted = false;
        for (int half = 0; half < 60; ++half) {
            cand = project_box(SymMatrix(a.mat() + s * grad.mat()));
            const Eigen::MatrixXd delta = cand.mat() - a.mat();
            if (delta.norm() < 1e-16) break;
            fcand = objective_F(cand, kw0, kw);
            if (fcand >= fref + 1e-4 * frob_inner(grad.mat(), delta) - noise) {
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if (!accepted) {
            // A spectral step poisoned by an active-set change can fail at
            // every scale; retry once from the plain gradient scale before
            // declaring numerical stationarity.
            if (fresh_step) break;
            step = 1.0 / (1.0 + spectral_norm(grad));
            fresh_step = true;
            continue;
        }
        fresh_step = false;

        const SymMatrix grad_new = gradient_f(cand, kw0, kw);
        const Eigen::MatrixXd da = cand.mat() - a.mat();
        const Eigen::MatrixXd dg = grad_new.mat() - grad.mat();
        const double denom = -frob_inner(da, dg); // positive where F is locally concave
        const double num = frob_inner(da, da);
        step = (denom > 1e-18) ? std::min(std::max(num / denom, 1e-10), 1e8) : s * 2.0;

        a = cand;
        fval = fcand;
        grad = grad_new;
        window.push_back(fval);
        if (window.size() > 10) window.pop_front();
    }

    run.a = a;
    run.f_value = fval;
    run.residual = tangent_residual(eig_sym(a), gradient_f(a, kw0, kw).mat(), kActiveTol);
    run.converged = run.converged || run.residual <= opt.tol;
    return run;
}

SymMatrix snap_boundary(const SymMatrix& a, double eig_tol) {
    EigSym e = eig_sym(a);
    Eigen::VectorXd lam = e.values;
    for (int i = 0; i < lam.size(); ++i) {
        if (lam(i) <= eig_tol) lam(i) = 0.0;
        if (lam(i) >= 1.0 - eig_tol) lam(i) = 1.0;
    }
    return SymMatrix(e.vectors * lam.asDiagonal() * e.vectors.transpose());
}

} // namespace

const char* to_string(Case c) {
    switch (c) {
        case Case::interior: return "Interior";
        case Case::zero_eigs: return "ZeroEigs";
        case Case::one_eigs: return "OneEigs";
        case Case::both: return "Both";
    }
    return "?";
}

double objective_F(const SymMatrix& a, const SymMatrix& kw0, const std::vector<SymMatrix>& kw) {
    double v = log_det_pd(kw0 + a);
    for (const SymMatrix& k : kw) v -= log_det_pd(k + a);
    return v;
}

SymMatrix gradient_f(const SymMatrix& a, const SymMatrix& kw0, const std::vector<SymMatrix>& kw) {
    Eigen::MatrixXd g = inverse_pd(kw0 + a).mat();
    for (const SymMatrix& k : kw) g -= inverse_pd(k + a).mat();
    return SymMatrix(g);
}

MaximizeResult maximize_F(const SymMatrix& kw0, const std::vector<SymMatrix>& kw,
                          const Options& opt) {
    check_blocks(kw0, kw, "maximize_F");
    const int n = kw0.n();
    if (opt.starts < 1) throw Unsupported("maximize_F: need at least one start");

    std::vector<SymMatrix> starts;
    const double eps = 1e-3;
    starts.push_back(SymMatrix(0.5 * Eigen::MatrixXd::Identity(n, n)));
    starts.push_back(SymMatrix(eps * Eigen::MatrixXd::Identity(n, n)));
    starts.push_back(SymMatrix((1.0 - eps) * Eigen::MatrixXd::Identity(n, n)));
    for (int k = 3; k < opt.starts; ++k) {
        starts.push_back(SymMatrix((k - 2.0) / (opt.starts - 1.0) *
                                   Eigen::MatrixXd::Identity(n, n)));
    }
    starts.resize(std::min<size_t>(starts.size(), static_cast<size_t>(opt.starts)));

    MaximizeResult out;
    out.iterations = 0;
    double best = -std::numeric_limits<double>::infinity();
    double worst_converged = std::numeric_limits<double>::infinity();
    bool any = false;
    for (const SymMatrix& s : starts) {
        const StartRun run = ascend(s, kw0, kw, opt);
        out.iterations += run.iterations;
        if (!run.converged) continue;
        any = true;
        worst_converged = std::min(worst_converged, run.f_value);
        if (run.f_value > best) {
            best = run.f_value;
            out.a_star = run.a;
            out.f_value = run.f_value;
            out.stat_residual = run.residual;
        }
    }
    if (!any) {
        std::ostringstream os;
        os << "maximize_F: no start reached stationarity " << opt.tol << " within "
           << opt.max_iter << " iterations";
        throw DidNotConverge(os.str());
    }
    out.multistart_spread = best - worst_converged;

    // Pull almost-active eigenvalues onto the boundary when that does not
    // hurt stationarity; exact zeros and ones make the multiplier
    // complementarity checks sharp.
    const SymMatrix snapped = snap_boundary(out.a_star, opt.eig_tol);
    const double snapped_resid = tangent_residual(
        eig_sym(snapped), gradient_f(snapped, kw0, kw).mat(), kActiveTol);
    if (snapped_resid <= std::max(out.stat_residual, opt.tol)) {
        out.a_star = snapped;
        out.stat_residual = snapped_resid;
    }

    // Random-segment midpoint probes guard the concavity assumption the
    // ascent relies on; a violation is reported, not fatal.
    out.concavity_ok = true;
    std::mt19937_64 rng(0xABCD1234u);
    std::uniform_real_distribution<double> unif(-1.0, 2.0);
    for (int p = 0; p < opt.concavity_probes; ++p) {
        Eigen::MatrixXd m1(n, n), m2(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                m1(i, j) = unif(rng);
                m2(i, j) = unif(rng);
            }
        }
        const SymMatrix a1 = project_box(SymMatrix(0.5 * (m1 + m1.transpose())));
        const SymMatrix a2 = project_box(SymMatrix(0.5 * (m2 + m2.transpose())));
        const SymMatrix mid(0.5 * (a1.mat() + a2.mat()));
        const double lhs = objective_F(mid, kw0, kw);
        const double rhs = 0.5 * (objective_F(a1, kw0, kw) + objective_F(a2, kw0, kw));
        if (lhs < rhs - 1e-9) {
            out.concavity_ok = false;
            break;
        }
    }
    return out;
}

CaseInfo classify_case(const SymMatrix& a_star, double eig_tol) {
    const EigSym e = eig_sym(a_star);
    const int n = a_star.n();
    if (e.values(0) < -eig_tol || e.values(n - 1) > 1.0 + eig_tol) {
        throw OrderingViolation("classify_case: A outside the box 0 <= A <= I");
    }
    const std::vector<int> zero = indices_where(e.values, true, eig_tol);
    const std::vector<int> one = indices_where(e.values, false, eig_tol);
    CaseInfo info;
    info.basis_zero.resize(n, zero.size());
    for (size_t i = 0; i < zero.size(); ++i) info.basis_zero.col(i) = e.vectors.col(zero[i]);
    info.basis_one.resize(n, one.size());
    for (size_t i = 0; i < one.size(); ++i) info.basis_one.col(i) = e.vectors.col(one[i]);
    if (zero.empty() && one.empty()) {
        info.c = Case::interior;
    } else if (one.empty()) {
        info.c = Case::zero_eigs;
    } else if (zero.empty()) {
        info.c = Case::one_eigs;
    } else {
        info.c = Case::both;
    }
    return info;
}

Multipliers multipliers(const SymMatrix& a_star, const SymMatrix& grad, const CaseInfo& info) {
    const int n = a_star.n();
    Multipliers m;

    const auto face_multiplier = [&](const Eigen::MatrixXd& basis, double sign) {
        if (basis.cols() == 0) return SymMatrix::zero(n);
        const Eigen::MatrixXd raw = sign * basis.transpose() * grad.mat() * basis;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (raw + raw.transpose()));
        if (es.eigenvalues()(0) < -kMultiplierDust) {
            std::ostringstream os;
            os << "multipliers: face multiplier eigenvalue " << es.eigenvalues()(0)
               << " below -" << kMultiplierDust;
            throw KKTViolation(os.str());
        }
        const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
        const Eigen::MatrixXd small = es.eigenvectors() * lam.asDiagonal() *
                                      es.eigenvectors().transpose();
        return SymMatrix(basis * small * basis.transpose());
    };

    m.lambda1 = face_multiplier(info.basis_zero, -1.0);
    m.lambda2 = face_multiplier(info.basis_one, +1.0);
    m.stationarity = (grad.mat() + m.lambda1.mat() - m.lambda2.mat()).norm();
    m.slack1 = (m.lambda1.mat() * a_star.mat()).norm();
    m.slack2 = (m.lambda2.mat() * (a_star.mat() - Eigen::MatrixXd::Identity(n, n))).norm();
    return m;
}

SymMatrix enhanced_central(const SymMatrix& d0, const SymMatrix& lambda1) {
    if (d0.n() != lambda1.n()) throw DimensionError("enhanced_central: size mismatch");
    if (!is_psd(lambda1)) throw NotPsd("enhanced_central: multiplier not positive semidefinite");
    return inverse_pd(inverse_pd(d0) + lambda1);
}

SymMatrix enhanced_individual(const SymMatrix& dl, const SymMatrix& lambda2) {
    if (dl.n() != lambda2.n()) throw DimensionError("enhanced_individual: size mismatch");
    if (!is_psd(lambda2)) throw NotPsd("enhanced_individual: multiplier not positive semidefinite");
    const SymMatrix tightened = dl - lambda2;
    if (!is_pd(tightened)) {
        throw InternalError("enhanced_individual: tightened distortion lost definiteness");
    }
    return tightened;
}

SumRateSolution sum_rate(const MDInstance& inst, const Options& opt) {
    ensure_valid(inst);
    const WhitenReport w = whiten(inst);
    const SymMatrix s_half = sqrt_psd(inst.kx);
    const int n = inst.n();
    const int big_l = inst.l();
    const SymMatrix id = SymMatrix::identity(n);

    const SymMatrix kw0 = noise_of_distortion(w.whitened.d0, id);
    std::vector<SymMatrix> kw;
    kw.reserve(big_l);
    for (const SymMatrix& d : w.whitened.d) kw.push_back(noise_of_distortion(d, id));

    const MaximizeResult mx = maximize_F(kw0, kw, opt);
    const CaseInfo info = classify_case(mx.a_star, opt.eig_tol);
    const SymMatrix grad = gradient_f(mx.a_star, kw0, kw);
    const Multipliers mult = multipliers(mx.a_star, grad, info);

    SumRateSolution sol;
    sol.scase = info.c;
    sol.a_star_white = mx.a_star;
    sol.lambda1 = mult.lambda1;
    sol.lambda2 = mult.lambda2;
    sol.stationarity = mult.stationarity;
    sol.slack1 = mult.slack1;
    sol.slack2 = mult.slack2;
    sol.multistart_spread = mx.multistart_spread;
    sol.concavity_certified = mx.concavity_ok;

    std::vector<SymMatrix> blocks = kw;
    std::vector<SymMatrix> dach = w.whitened.d;
    SymMatrix d0ach = w.whitened.d0;
    std::optional<SymMatrix> kzw;
    double rate = 0.0;

    const bool has_one = info.c == Case::one_eigs || info.c == Case::both;
    const bool has_zero = info.c == Case::zero_eigs || info.c == Case::both;

    if (has_zero) {
        d0ach = enhanced_central(w.whitened.d0, mult.lambda1);
    }
    if (has_one) {
        const SymMatrix tightened = enhanced_individual(w.whitened.d.back(), mult.lambda2);
        dach.back() = tightened;
        blocks.back() = noise_of_distortion(tightened, id);
        // Saturated directions push Kz to infinity, so the bound is the
        // limit of lower_bound_at along Kz(eps); that limit is
        //   (F(A*) + sum_l log|I+Kw_l| - log|Kw0|) / 2
        // with the *original* noise blocks.  The face enhancements cancel
        // inside the determinant ratios (their ranges annihilate I - A*),
        // which is why the enhanced scheme below meets this value exactly.
        // Only when every eigenvalue of A* saturates does it collapse to
        // the central bound log(|Kx|/|D0|)/2.
        rate = 0.5 * (objective_F(mx.a_star, kw0, kw) - log_det_pd(kw0));
        for (const SymMatrix& k : kw) rate += 0.5 * log_det_pd(id + k);
    } else {
        kzw = kz_from_A(mx.a_star, id);
        rate = lower_bound_at(w.whitened, *kzw);
        if (has_zero) {
            // The slack-face enhancement must not change the bound value:
            // log|D0+Kz| - log|D0| has to match the enhanced version.
            const double lhs = log_det_pd(w.whitened.d0 + *kzw) - log_det_pd(w.whitened.d0);
            const double rhs = log_det_pd(d0ach + *kzw) - log_det_pd(d0ach);
            if (std::abs(lhs - rhs) > 1e-8 * std::max(1.0, std::abs(lhs))) {
                throw TheoryViolation("sum_rate: slack-face determinant identity failed");
            }
        }
    }

    const SymMatrix kw_big = assemble_kw(blocks, mx.a_star);
    if (eig_sym(kw_big).values(0) <= 0.0) {
        throw TheoryViolation("sum_rate: assembled noise covariance is not positive definite");
    }
    double achievable = -log_det_pd(kw_big);
    for (const SymMatrix& b : blocks) achievable += log_det_pd(id + b);
    achievable *= 0.5;
    sol.achievable_gap = std::abs(achievable - rate);
    if (sol.achievable_gap > 1e-5 * std::max(1.0, std::abs(rate))) {
        std::ostringstream os;
        os << "sum_rate: scheme rate " << achievable << " disagrees with bound " << rate;
        throw TheoryViolation(os.str());
    }

    const auto unwhiten = [&](const SymMatrix& m) {
        return SymMatrix(s_half.mat() * m.mat() * s_half.mat());
    };
    sol.sum_rate_nats = rate;
    sol.channel.a = unwhiten(mx.a_star);
    for (const SymMatrix& b : blocks) sol.channel.kw.push_back(unwhiten(b));
    for (const SymMatrix& d : dach) sol.d_achieved.push_back(unwhiten(d));
    sol.d0_achieved = unwhiten(d0ach);
    if (kzw) sol.kz = unwhiten(*kzw);
    return sol;
}

} // namespace kkt
} // namespace mdr
