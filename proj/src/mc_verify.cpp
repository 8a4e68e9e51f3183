#include "mdr/mc_verify.hpp"

#include "mdr/bounds.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <sstream>

namespace mdr {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Counter-based stream: state depends only on (seed, counter), so samples
// are identical however the sample range is partitioned.
struct CounterRng {
    std::uint64_t state;
    CounterRng(std::uint64_t seed, std::uint64_t counter)
        : state(mix64(seed ^ mix64(0x9E3779B97F4A7C15ULL * (counter + 1)))) {}
    std::uint64_t next_bits() {
        state += 0x9E3779B97F4A7C15ULL;
        return mix64(state);
    }
    double next_unit() { // (0, 1]
        return 1.0 - double(next_bits() >> 11) * 0x1.0p-53;
    }
    void fill_gaussian(Eigen::VectorXd& z) {
        for (Eigen::Index i = 0; i < z.size(); i += 2) {
            const double r = std::sqrt(-2.0 * std::log(next_unit()));
            const double th = kTwoPi * next_unit();
            z(i) = r * std::cos(th);
            if (i + 1 < z.size()) z(i + 1) = r * std::sin(th);
        }
    }
};

Eigen::MatrixXd chol_lower(const SymMatrix& m, const char* what) {
    Eigen::LLT<Eigen::MatrixXd> llt(m.mat());
    if (llt.info() != Eigen::Success)
        throw NotPd(std::string(what) + ": covariance is not positive definite");
    return llt.matrixL();
}

// Pairwise reduction keeps the accumulation order fixed and the rounding
// error logarithmic in the chunk count.
Eigen::MatrixXd pairwise_sum(std::vector<Eigen::MatrixXd>& parts) {
    if (parts.empty()) throw InternalError("pairwise_sum: no chunks");
    while (parts.size() > 1) {
        std::vector<Eigen::MatrixXd> next;
        next.reserve((parts.size() + 1) / 2);
        for (std::size_t i = 0; i + 1 < parts.size(); i += 2)
            next.push_back(parts[i] + parts[i + 1]);
        if (parts.size() % 2) next.push_back(parts.back());
        parts.swap(next);
    }
    return parts[0];
}

} // namespace

McReport sample_verify(const SymMatrix& kx, const TestChannel& tc, long n,
                       std::uint64_t seed, double tol) {
    const int nn = kx.n();
    const int l = tc.l();
    if (n < 1000) throw Unsupported("sample_verify: need at least 1000 samples");
    for (const SymMatrix& b : tc.kw)
        if (b.n() != nn) throw DimensionError("sample_verify: block size mismatch");

    const SymMatrix kw_big = assemble_kw(tc.kw, tc.a);
    const Eigen::MatrixXd lx = chol_lower(kx, "sample_verify: Kx");
    const Eigen::MatrixXd lw = chol_lower(kw_big, "sample_verify: Kw");

    // Analytic distortions and the matching linear estimators.
    std::vector<SymMatrix> dl;
    std::vector<Eigen::MatrixXd> gl; // E[x|u_l] = G_l u_l
    for (int i = 0; i < l; ++i) {
        dl.push_back(distortion_of_noise(tc.kw[std::size_t(i)], kx));
        gl.push_back(kx.mat() * inverse_pd(kx + tc.kw[std::size_t(i)]).mat());
    }
    const SymMatrix d0 = distortions_of_channel(kx, tc).central;
    Eigen::MatrixXd cuu(l * nn, l * nn);
    for (int i = 0; i < l; ++i)
        for (int j = 0; j < l; ++j)
            cuu.block(i * nn, j * nn, nn, nn) =
                kx.mat() + kw_big.mat().block(i * nn, j * nn, nn, nn);
    Eigen::MatrixXd cxu(nn, l * nn);
    for (int i = 0; i < l; ++i) cxu.block(0, i * nn, nn, nn) = kx.mat();
    Eigen::LLT<Eigen::MatrixXd> cuu_llt(cuu);
    if (cuu_llt.info() != Eigen::Success)
        throw NotPd("sample_verify: observation covariance is not positive definite");
    const Eigen::MatrixXd g0 = cuu_llt.solve(cxu.transpose()).transpose();

    const long chunk = 4096;
    std::vector<std::vector<Eigen::MatrixXd>> parts(std::size_t(l) + 1);
    std::vector<Eigen::MatrixXd> acc(std::size_t(l) + 1,
                                     Eigen::MatrixXd::Zero(nn, nn));
    Eigen::VectorXd z(Eigen::Index((l + 1) * nn));
    Eigen::VectorXd u(Eigen::Index(l * nn));
    long in_chunk = 0;
    for (long s = 0; s < n; ++s) {
        CounterRng rng(seed, std::uint64_t(s));
        rng.fill_gaussian(z);
        const Eigen::VectorXd x = lx * z.head(nn);
        const Eigen::VectorXd w = lw * z.tail(l * nn);
        for (int i = 0; i < l; ++i) u.segment(i * nn, nn) = x + w.segment(i * nn, nn);
        for (int i = 0; i < l; ++i) {
            const Eigen::VectorXd r = x - gl[std::size_t(i)] * u.segment(i * nn, nn);
            acc[std::size_t(i)].noalias() += r * r.transpose();
        }
        const Eigen::VectorXd r0 = x - g0 * u;
        acc[std::size_t(l)].noalias() += r0 * r0.transpose();
        if (++in_chunk == chunk || s + 1 == n) {
            for (std::size_t i = 0; i < acc.size(); ++i) {
                parts[i].push_back(acc[i]);
                acc[i].setZero();
            }
            in_chunk = 0;
        }
    }

    McReport rep;
    rep.n_samples = n;
    rep.seed = seed;
    rep.tolerance = tol >= 0.0 ? tol : 3.0 * double(nn) * double(l) / std::sqrt(double(n));
    double worst = 0.0;
    for (int i = 0; i < l; ++i) {
        const Eigen::MatrixXd emp = pairwise_sum(parts[std::size_t(i)]) / double(n);
        rep.empirical_dl.push_back(SymMatrix((emp + emp.transpose()) / 2.0));
        worst = std::max(worst, (emp - dl[std::size_t(i)].mat()).norm() /
                                    std::max(dl[std::size_t(i)].mat().norm(),
                                             std::numeric_limits<double>::min()));
    }
    const Eigen::MatrixXd emp0 = pairwise_sum(parts[std::size_t(l)]) / double(n);
    rep.empirical_d0 = SymMatrix((emp0 + emp0.transpose()) / 2.0);
    worst = std::max(worst, (emp0 - d0.mat()).norm() /
                                std::max(d0.mat().norm(),
                                         std::numeric_limits<double>::min()));
    rep.max_rel_frobenius_error = worst;
    rep.pass = worst <= rep.tolerance;
    return rep;
}

double independence_check(const SymMatrix& kx, const TestChannel& tc, const SymMatrix& a) {
    if (a.n() != kx.n() || tc.a.n() != kx.n())
        throw DimensionError("independence_check: size mismatch");
    if (tc.l() < 2) return 0.0;
    if (!is_psd(a)) throw OrderingViolation("independence_check: coupling candidate not PSD");
    const SymMatrix kz = kz_from_A(a, kx); // throws OrderingViolation unless a < Kx
    const Eigen::MatrixXd shrink = kx.mat() * inverse_pd(kx + kz).mat() * kx.mat();
    // Every description pair shares the same cross block Kx - A_tc.
    return ((kx.mat() - tc.a.mat()) - shrink).norm();
}

ConsistencyReport bound_consistency(const MDInstance& inst, const TestChannel& tc,
                                    long grid_budget) {
    ensure_valid(inst);
    if (tc.l() != inst.l()) throw DimensionError("bound_consistency: description count mismatch");
    const double slack = 1e-7 * spectral_norm(inst.kx);
    const ChannelDistortions got = distortions_of_channel(inst.kx, tc);
    for (int i = 0; i < inst.l(); ++i) {
        const PsdVerdict v =
            psd_compare(got.individual[std::size_t(i)], inst.d[std::size_t(i)], slack).verdict;
        if (v != PsdVerdict::less && v != PsdVerdict::less_equal && v != PsdVerdict::equal) {
            std::ostringstream os;
            os << "bound_consistency: channel misses distortion target " << (i + 1);
            throw OrderingViolation(os.str());
        }
    }
    const PsdVerdict v0 = psd_compare(got.central, inst.d0, slack).verdict;
    if (v0 != PsdVerdict::less && v0 != PsdVerdict::less_equal && v0 != PsdVerdict::equal)
        throw OrderingViolation("bound_consistency: channel misses the central target");

    const SymMatrix kw_big = assemble_kw(tc.kw, tc.a);
    double rate = -log_det_pd(kw_big);
    for (const SymMatrix& b : tc.kw) rate += log_det_pd(inst.kx + b);
    rate *= 0.5;

    ConsistencyReport rep;
    rep.achievable_rate = rate;
    rep.min_gap = std::numeric_limits<double>::infinity();
    auto take = [&](double bound) {
        ++rep.points;
        rep.min_gap = std::min(rep.min_gap, rate - bound);
    };

    // The channel's own remote noise first: for an optimal channel this is
    // where the converse touches the rate.
    if (is_psd(tc.a) && psd_compare(tc.a, inst.kx).verdict == PsdVerdict::less)
        take(lower_bound_at(inst, kz_from_A(tc.a, inst.kx)));

    const WhitenReport w = whiten(inst);
    scan_lower_bound(w.whitened, grid_budget,
                     [&](double value, const SymMatrix&) { take(value); });

    if (rep.min_gap < -1e-9) {
        std::ostringstream os;
        os << "bound_consistency: converse exceeds the channel rate by " << -rep.min_gap;
        throw TheoryViolation(os.str());
    }
    return rep;
}

} // namespace mdr
