#include "mdr/bounds.hpp"

#include <Eigen/QR>

#include <cmath>
#include <limits>
#include <random>

namespace mdr {

namespace {

void check_dims(const MDInstance& inst, const SymMatrix& kz, const char* what) {
    const int n = inst.n();
    if (kz.n() != n) throw DimensionError(std::string(what) + ": Kz dimension differs from Kx");
    if (inst.d0.n() != n || inst.l() < 1) {
        throw DimensionError(std::string(what) + ": malformed instance");
    }
    for (const SymMatrix& d : inst.d) {
        if (d.n() != n) throw DimensionError(std::string(what) + ": distortion dimension differs");
    }
}

// log det((Kx+Kz)^{-1}(D+Kz)) through the eigenvalues s_i of the
// congruence (Kx+Kz)^{-1/2}(Kx-D)(Kx+Kz)^{-1/2}: each factor is
// 1 - s_i, summed with log1p.  Splitting the bound into such ratios
// keeps it accurate when Kz is near-divergent, where the raw
// +/- log-determinant terms (which grow like log|Kz|) would cancel
// catastrophically.
double log_det_ratio(const SymMatrix& inv_half, const SymMatrix& gap, const char* what) {
    const Eigen::MatrixXd m = inv_half.mat() * gap.mat() * inv_half.mat();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
    double r = 0.0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
        const double s = es.eigenvalues()(i);
        if (s >= 1.0) throw NotPd(std::string(what) + ": D + Kz is not positive definite");
        r += std::log1p(-s);
    }
    return r;
}

double lower_bound_terms(const MDInstance& inst, const SymMatrix& kz) {
    // The (L-1) powers of |Kx+Kz| cancel exactly against the per-term
    // denominators, leaving one well-conditioned ratio per distortion.
    const SymMatrix inv_half = inv_sqrt_pd(inst.kx + kz);
    double v = log_det_pd(inst.kx) - log_det_pd(inst.d0);
    v += log_det_ratio(inv_half, inst.kx - inst.d0, "lower_bound_at");
    for (const SymMatrix& d : inst.d) {
        v -= log_det_ratio(inv_half, inst.kx - d, "lower_bound_at");
    }
    return 0.5 * v;
}

} // namespace

double lower_bound_at(const MDInstance& inst, const SymMatrix& kz) {
    check_dims(inst, kz, "lower_bound_at");
    try {
        return lower_bound_terms(inst, kz);
    } catch (const NotPd&) {
        // Kz on the semidefinite boundary can lose definiteness to
        // rounding; nudge it inward once and retry.
        const double eps = 1e-12 * std::max(1.0, kz.mat().cwiseAbs().maxCoeff());
        const SymMatrix shifted(kz.mat() + eps * Eigen::MatrixXd::Identity(kz.n(), kz.n()));
        return lower_bound_terms(inst, shifted);
    }
}

double individual_bound(const MDInstance& inst, int l) {
    if (l < 0 || l >= inst.l()) throw DimensionError("individual_bound: description index out of range");
    return 0.5 * (log_det_pd(inst.kx) - log_det_pd(inst.d[l]));
}

double central_bound(const MDInstance& inst) {
    if (inst.d0.n() != inst.n()) throw DimensionError("central_bound: malformed instance");
    return 0.5 * (log_det_pd(inst.kx) - log_det_pd(inst.d0));
}

namespace {

// Formula body shared by the checked public map and the search loop.
SymMatrix kz_from_A_unchecked(const SymMatrix& a, const SymMatrix& kx) {
    Eigen::LLT<Eigen::MatrixXd> llt(kx.mat() - a.mat());
    if (llt.info() != Eigen::Success) {
        throw OrderingViolation("kz_from_A: A < Kx fails, Kx - A is not positive definite");
    }
    const Eigen::MatrixXd m = kx.mat() * llt.solve(kx.mat()) - kx.mat();
    return SymMatrix(0.5 * (m + m.transpose()));
}

} // namespace

SymMatrix kz_from_A(const SymMatrix& a, const SymMatrix& kx) {
    if (a.n() != kx.n()) throw DimensionError("kz_from_A: size mismatch");
    if (!is_psd(a)) throw NotPsd("kz_from_A: A is not positive semidefinite");
    return kz_from_A_unchecked(a, kx);
}

namespace {

constexpr double kLogLo = -12.0; // eigenvalue cap 1e-12 downward
constexpr double kLogHi = 12.0;  // and 1e12 upward

// Direct-search state over Kz = Q diag(t) Q^t, evaluated through the
// coupling parameterization A = Q diag(t/(1+t)) Q^t.
struct Scan {
    const MDInstance& inst; // whitened
    const long budget;
    const std::function<void(double, const SymMatrix&)>& visit;

    long used = 0;
    double best = -std::numeric_limits<double>::infinity();
    Eigen::MatrixXd best_q;
    Eigen::VectorXd best_logt;

    Scan(const MDInstance& i, long b, const std::function<void(double, const SymMatrix&)>& v)
        : inst(i), budget(b), visit(v) {
        const int n = inst.n();
        best_q = Eigen::MatrixXd::Identity(n, n);
        best_logt = Eigen::VectorXd::Zero(n);
    }

    bool spent() const { return used >= budget; }

    double eval(const Eigen::MatrixXd& q, const Eigen::VectorXd& logt) {
        ++used;
        const int n = inst.n();
        Eigen::VectorXd acoef(n);
        for (int i = 0; i < n; ++i) {
            const double t = std::pow(10.0, logt(i));
            acoef(i) = t / (1.0 + t);
        }
        const SymMatrix a(q * acoef.asDiagonal() * q.transpose());
        double value;
        SymMatrix kz;
        try {
            kz = kz_from_A_unchecked(a, inst.kx);
            value = lower_bound_at(inst, kz);
        } catch (const Error&) {
            return -std::numeric_limits<double>::infinity();
        }
        visit(value, kz);
        if (value > best) {
            best = value;
            best_q = q;
            best_logt = logt;
        }
        return value;
    }

    // Coordinate pattern search on one log-eigenvalue of the incumbent.
    void refine_coordinate(int i) {
        double h = 0.5;
        while (h > 1e-4 && !spent()) {
            Eigen::VectorXd up = best_logt, dn = best_logt;
            up(i) = std::min(kLogHi, best_logt(i) + h);
            dn(i) = std::max(kLogLo, best_logt(i) - h);
            const double before = best;
            eval(best_q, up);
            if (!spent()) eval(best_q, dn);
            if (best <= before + 1e-15) h *= 0.5;
        }
    }

    // Pattern search on a plane rotation of the incumbent basis.
    void refine_rotation(int i, int j) {
        double h = 0.3;
        while (h > 1e-4 && !spent()) {
            const double before = best;
            for (const double theta : {h, -h}) {
                Eigen::MatrixXd q = best_q;
                const double c = std::cos(theta), s = std::sin(theta);
                const Eigen::VectorXd qi = q.col(i), qj = q.col(j);
                q.col(i) = c * qi + s * qj;
                q.col(j) = -s * qi + c * qj;
                eval(q, best_logt);
                if (spent()) break;
            }
            if (best <= before + 1e-15) h *= 0.5;
        }
    }

    // Alternate eigenvalue and rotation passes until no pass improves.
    void refine() {
        const int n = inst.n();
        while (!spent()) {
            const double before = best;
            for (int i = 0; i < n && !spent(); ++i) refine_coordinate(i);
            for (int i = 0; i < n && !spent(); ++i) {
                for (int j = i + 1; j < n && !spent(); ++j) refine_rotation(i, j);
            }
            if (best <= before + 1e-13) break;
        }
    }

    void product_grid(const Eigen::MatrixXd& q) {
        const int n = inst.n();
        const Eigen::VectorXd levels =
            Eigen::VectorXd::LinSpaced(7, -3.0, 3.0); // 7 log-spaced eigenvalues
        std::vector<int> idx(n, 0);
        while (!spent()) {
            Eigen::VectorXd logt(n);
            for (int i = 0; i < n; ++i) logt(i) = levels(idx[i]);
            eval(q, logt);
            int pos = 0;
            while (pos < n && ++idx[pos] == levels.size()) idx[pos++] = 0;
            if (pos == n) break;
        }
    }
};

Eigen::MatrixXd random_orthogonal(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd g(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) g(i, j) = gauss(rng);
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < n; ++i) {
        if (r(i, i) < 0) q.col(i) = -q.col(i);
    }
    return q;
}

} // namespace

long scan_lower_bound(const MDInstance& whitened, long budget,
                      const std::function<void(double, const SymMatrix&)>& visit) {
    if (budget < 1) throw Unsupported("scan_lower_bound: budget must be positive");
    const int n = whitened.n();
    Scan scan(whitened, budget, visit);

    // Isotropic sweep first: cheap and already exact for scalar problems.
    {
        const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
        const Eigen::VectorXd sweep = Eigen::VectorXd::LinSpaced(33, -8.0, 8.0);
        for (int k = 0; k < sweep.size() && !scan.spent(); ++k) {
            scan.eval(id, Eigen::VectorXd::Constant(n, sweep(k)));
        }
    }

    // Structured bases, then an endless deterministic stream of random
    // rotations; each basis gets a product grid and a refinement round.
    std::vector<Eigen::MatrixXd> bases;
    bases.push_back(Eigen::MatrixXd::Identity(n, n));
    bases.push_back(eig_sym(whitened.d0).vectors);
    {
        SymMatrix sum = whitened.d[0];
        for (int l = 1; l < whitened.l(); ++l) sum = sum + whitened.d[l];
        bases.push_back(eig_sym(sum).vectors);
    }
    for (const SymMatrix& d : whitened.d) bases.push_back(eig_sym(d).vectors);

    std::mt19937_64 rng(0x5eed5eedULL);
    int stalled_rounds = 0;
    size_t next_basis = 0;
    while (!scan.spent() && stalled_rounds < 3) {
        const double before = scan.best;
        const Eigen::MatrixXd q = (next_basis < bases.size())
                                      ? bases[next_basis]
                                      : random_orthogonal(n, rng);
        ++next_basis;
        scan.product_grid(q);
        scan.refine();
        stalled_rounds = (scan.best > before + 1e-13) ? 0 : stalled_rounds + 1;
    }
    return scan.used;
}

SupResult sup_lower_bound(const MDInstance& inst, long budget) {
    if (budget < 1) throw Unsupported("sup_lower_bound: budget must be positive");
    ensure_valid(inst);
    const WhitenReport w = whiten(inst);
    const SymMatrix s = sqrt_psd(inst.kx);

    SupResult out;
    out.value = -std::numeric_limits<double>::infinity();
    out.kz = SymMatrix::zero(inst.n());
    SymMatrix best_white = SymMatrix::zero(inst.n());
    out.evaluations = scan_lower_bound(w.whitened, budget,
                                       [&](double value, const SymMatrix& kz) {
                                           if (value > out.value) {
                                               out.value = value;
                                               best_white = kz;
                                           }
                                       });
    out.kz = SymMatrix(s.mat() * best_white.mat() * s.mat());
    return out;
}

} // namespace mdr
