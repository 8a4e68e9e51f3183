#include "mdr/instance.hpp"

#include <sstream>

namespace mdr {

namespace {

constexpr double kStrictRel = 1e-9;

// min eigenvalue of (b - a); the chain checks need the raw value to
// report how badly an ordering fails.
double order_margin(const SymMatrix& a, const SymMatrix& b) {
    return eig_sym(b - a).values(0);
}

void check_strict(const SymMatrix& a, const SymMatrix& b, const char* label,
                  double margin, ValidationReport& report) {
    const double m = order_margin(a, b);
    if (m <= margin) {
        std::ostringstream os;
        os << label << " fails (min eigenvalue of difference = " << m
           << ", need > " << margin << ")";
        report.violations.push_back(os.str());
    }
}

} // namespace

std::string ValidationReport::joined() const {
    std::ostringstream os;
    for (size_t i = 0; i < violations.size(); ++i) {
        if (i) os << "; ";
        os << violations[i];
    }
    return os.str();
}

ValidationReport validate(const MDInstance& inst) {
    ValidationReport report;
    const int n = inst.n();
    if (n == 0) {
        report.violations.push_back("Kx is empty");
        return report;
    }
    if (inst.l() < 1) {
        report.violations.push_back("no individual distortion caps (need L >= 1)");
        return report;
    }
    if (inst.d0.n() != n) {
        report.violations.push_back("D0 dimension differs from Kx");
        return report;
    }
    for (int l = 0; l < inst.l(); ++l) {
        if (inst.d[l].n() != n) {
            std::ostringstream os;
            os << "D" << (l + 1) << " dimension differs from Kx";
            report.violations.push_back(os.str());
            return report;
        }
    }
    const double margin = kStrictRel * spectral_norm(inst.kx);
    check_strict(SymMatrix::zero(n), inst.d0, "0 < D0", margin, report);
    for (int l = 0; l < inst.l(); ++l) {
        std::ostringstream lo, hi;
        lo << "D0 < D" << (l + 1);
        hi << "D" << (l + 1) << " < Kx";
        check_strict(inst.d0, inst.d[l], lo.str().c_str(), margin, report);
        check_strict(inst.d[l], inst.kx, hi.str().c_str(), margin, report);
    }
    return report;
}

void ensure_valid(const MDInstance& inst) {
    const ValidationReport report = validate(inst);
    if (report.ok()) return;
    const int n = inst.n();
    bool dimensional = n == 0 || inst.l() < 1 || inst.d0.n() != n;
    for (const SymMatrix& d : inst.d) dimensional = dimensional || d.n() != n;
    if (dimensional) throw DimensionError("invalid instance: " + report.joined());
    throw OrderingViolation("invalid instance: " + report.joined());
}

WhitenReport whiten(const MDInstance& inst) {
    ensure_valid(inst);
    const SymMatrix t = inv_sqrt_pd(inst.kx);
    WhitenReport r;
    r.transform = t;
    r.whitened.kx = SymMatrix::identity(inst.n());
    r.whitened.d0 = SymMatrix(t.mat() * inst.d0.mat() * t.mat());
    for (const SymMatrix& d : inst.d) {
        r.whitened.d.push_back(SymMatrix(t.mat() * d.mat() * t.mat()));
    }
    return r;
}

SymMatrix noise_of_distortion(const SymMatrix& d, const SymMatrix& kx) {
    if (d.n() != kx.n()) throw DimensionError("noise_of_distortion: size mismatch");
    if (!is_pd(d)) throw NotPd("noise_of_distortion: D is not positive definite");
    if (!is_pd(kx)) throw NotPd("noise_of_distortion: Kx is not positive definite");
    const SymMatrix gap = inverse_pd(d) - inverse_pd(kx);
    if (!is_pd(gap)) {
        throw OrderingViolation("noise_of_distortion: D < Kx fails, no finite noise meets D");
    }
    return inverse_pd(gap);
}

SymMatrix distortion_of_noise(const SymMatrix& kw, const SymMatrix& kx) {
    if (kw.n() != kx.n()) throw DimensionError("distortion_of_noise: size mismatch");
    if (!is_pd(kw)) throw NotPd("distortion_of_noise: Kw is not positive definite");
    if (!is_pd(kx)) throw NotPd("distortion_of_noise: Kx is not positive definite");
    return inverse_pd(inverse_pd(kx) + inverse_pd(kw));
}

ChannelDistortions distortions_of_channel(const SymMatrix& kx, const TestChannel& tc) {
    if (tc.l() < 1) throw DimensionError("distortions_of_channel: empty channel");
    if (!is_pd(assemble_kw(tc.kw, tc.a))) {
        throw NotPd("distortions_of_channel: assembled noise covariance is not positive definite");
    }
    ChannelDistortions out;
    for (const SymMatrix& kw : tc.kw) {
        out.individual.push_back(distortion_of_noise(kw, kx));
    }
    const SymMatrix collapsed = collapsed_inverse(tc.kw, tc.a);
    out.central = inverse_pd(inverse_pd(kx) + collapsed);
    return out;
}

} // namespace mdr
