#include "mdr/scalar_solver.hpp"

#include "mdr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace mdr {

namespace {

constexpr double kRootTol = 1e-12;
constexpr int kMaxBisect = 200;

void check_instance(const ScalarInstance& inst) {
    if (inst.l() < 1) throw DimensionError("scalar solve: need at least one description");
    if (!(inst.var_x > 0) || !std::isfinite(inst.var_x)) {
        throw NotPd("scalar solve: source variance must be positive");
    }
    const double margin = 1e-9 * inst.var_x;
    if (!(inst.d0 > margin)) throw OrderingViolation("scalar solve: 0 < d0 fails");
    for (int l = 0; l < inst.l(); ++l) {
        std::ostringstream os;
        if (!(inst.d[l] - inst.d0 > margin)) {
            os << "scalar solve: d0 < d" << (l + 1) << " fails";
            throw OrderingViolation(os.str());
        }
        if (!(inst.var_x - inst.d[l] > margin)) {
            os << "scalar solve: d" << (l + 1) << " < var_x fails";
            throw OrderingViolation(os.str());
        }
    }
}

double noise_var(double d, double vx) { return d * vx / (vx - d); }

double f_of_a(double a, double s0, const std::vector<double>& s) {
    double v = 1.0 / (s0 + a);
    for (double sl : s) v -= 1.0 / (sl + a);
    return v;
}

// det of the L x L noise covariance with diagonal s_l and off-diagonal
// -a, via the rank-one form diag(s_l + a) - a * ones.
double det_kw(double a, const std::vector<double>& s) {
    double prod = 1.0, dip = 0.0;
    for (double sl : s) {
        prod *= sl + a;
        dip += a / (sl + a);
    }
    return prod * (1.0 - dip);
}

} // namespace

const char* to_string(ScalarCase c) {
    switch (c) {
        case ScalarCase::interior: return "Interior";
        case ScalarCase::zero: return "Zero";
        case ScalarCase::saturated: return "Saturated";
    }
    return "?";
}

ScalarCase classify(const ScalarInstance& inst) {
    check_instance(inst);
    const double vx = inst.var_x;
    double inv_sum = 0.0, d_sum = 0.0;
    for (double dl : inst.d) {
        inv_sum += 1.0 / dl;
        d_sum += dl;
    }
    const double f0 = 1.0 / inst.d0 + (inst.l() - 1) / vx - inv_sum;
    const double fvx = (d_sum - inst.d0 - (inst.l() - 1) * vx) / (vx * vx);
    if (f0 <= 0.0 && fvx >= 0.0) {
        throw TheoryViolation("scalar classify: f(0) <= 0 and f(var_x) >= 0 simultaneously");
    }
    if (f0 <= 0.0) return ScalarCase::zero;
    if (fvx >= 0.0) return ScalarCase::saturated;
    return ScalarCase::interior;
}

ScalarSolution solve(const ScalarInstance& inst) {
    const ScalarCase scase = classify(inst);
    const double vx = inst.var_x;
    const int big_l = inst.l();

    ScalarSolution out;
    out.scase = scase;
    out.d_achieved = inst.d;
    out.d0_achieved = inst.d0;
    out.residual = 0.0;

    if (scase == ScalarCase::zero) {
        out.a_star = 0.0;
        double rate = 0.0, inv = -(big_l - 1) / vx;
        for (double dl : inst.d) {
            rate += 0.5 * std::log(vx / dl);
            inv += 1.0 / dl;
        }
        out.sum_rate_nats = rate;
        out.d0_achieved = 1.0 / inv; // central distortion the uncoupled scheme hits
        out.sigma2.reserve(big_l);
        for (double dl : inst.d) out.sigma2.push_back(noise_var(dl, vx));
        if (det_kw(0.0, out.sigma2) <= 0.0) {
            throw TheoryViolation("scalar solve: noise covariance determinant not positive");
        }
        return out;
    }

    if (scase == ScalarCase::saturated) {
        out.a_star = vx;
        // Tighten the final description until the sum constraint binds,
        // matching the matrix solvers which always enhance the last block.
        // Saturation makes the binding value d0 + (L-1)vx - sum(others)
        // at most d[L-1], so the tightened cap stays in range.
        const int widx = big_l - 1;
        double others = 0.0;
        for (int l = 0; l < big_l; ++l) {
            if (l != widx) others += inst.d[l];
        }
        const double d_new = inst.d0 + (big_l - 1) * vx - others;
        if (!(d_new > inst.d0) || d_new > inst.d[widx] + 1e-12 * vx) {
            throw TheoryViolation("scalar solve: relaxed distortion leaves the valid range");
        }
        out.d_achieved[widx] = std::min(d_new, inst.d[widx]);
        out.sum_rate_nats = 0.5 * std::log(vx / inst.d0);
        out.sigma2.reserve(big_l);
        for (double dl : out.d_achieved) out.sigma2.push_back(noise_var(dl, vx));
        if (det_kw(vx, out.sigma2) <= 0.0) {
            throw TheoryViolation("scalar solve: noise covariance determinant not positive");
        }
        return out;
    }

    // Interior: bracket the root of f on (0, var_x) and bisect.
    const double s0 = noise_var(inst.d0, vx);
    std::vector<double> s;
    s.reserve(big_l);
    for (double dl : inst.d) s.push_back(noise_var(dl, vx));

    double lo = 0.0, hi = vx;
    double a = 0.5 * (lo + hi), fa = f_of_a(a, s0, s);
    int iter = 0;
    while (std::abs(fa) > kRootTol && iter++ < kMaxBisect) {
        if (fa > 0.0) {
            lo = a;
        } else {
            hi = a;
        }
        a = 0.5 * (lo + hi);
        fa = f_of_a(a, s0, s);
    }
    if (std::abs(fa) > kRootTol) {
        std::ostringstream os;
        os << "scalar solve: bisection stalled with |f| = " << std::abs(fa);
        throw DidNotConverge(os.str());
    }

    const double det = det_kw(a, s);
    if (det <= 0.0) {
        throw TheoryViolation("scalar solve: noise covariance determinant not positive");
    }
    double num = 0.0;
    for (double sl : s) num += std::log(vx + sl);
    out.a_star = a;
    out.residual = std::abs(fa);
    out.sum_rate_nats = 0.5 * (num - std::log(det));
    out.sigma2 = s;
    return out;
}

} // namespace mdr
