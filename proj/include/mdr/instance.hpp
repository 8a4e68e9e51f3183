#ifndef MDR_INSTANCE_HPP
#define MDR_INSTANCE_HPP

#include <string>
#include <vector>

#include "mdr/sym_matrix.hpp"

namespace mdr {

/// One multiple-description problem: a Gaussian source covariance Kx,
/// per-description distortion caps D_1..D_L for the individual receivers,
/// and a central distortion cap D0 for the receiver that sees everything.
struct MDInstance {
    SymMatrix kx;
    std::vector<SymMatrix> d;
    SymMatrix d0;

    int n() const { return kx.n(); }
    int l() const { return static_cast<int>(d.size()); }
};

/// Outcome of validate(): empty means the instance is usable.
struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
    std::string joined() const;
};

/// Checks dimensions and the strict ordering chain
///   0 < D0 < D_l < Kx   (Loewner order, every l).
/// Strictness margin is 1e-9 times the spectral norm of Kx; differences
/// with a smaller minimum eigenvalue are reported as violations.
ValidationReport validate(const MDInstance& inst);

/// validate() and throw OrderingViolation / DimensionError on failure.
void ensure_valid(const MDInstance& inst);

/// Whitened copy of an instance together with the change of basis.
/// transform is Kx^{-1/2}; the whitened source covariance is the identity
/// and every distortion cap is transform * D * transform.
struct WhitenReport {
    MDInstance whitened;
    SymMatrix transform;
};

WhitenReport whiten(const MDInstance& inst);

/// Backward test-channel noise covariance that meets distortion D exactly
/// for source Kx:  (D^{-1} - Kx^{-1})^{-1}.  Requires 0 < D < Kx.
SymMatrix noise_of_distortion(const SymMatrix& d, const SymMatrix& kx);

/// Inverse map: distortion achieved by additive noise Kw on source Kx,
///   (Kx^{-1} + Kw^{-1})^{-1}.
SymMatrix distortion_of_noise(const SymMatrix& kw, const SymMatrix& kx);

/// Jointly Gaussian description scheme u_l = x + w_l.  kw holds the
/// per-description noise covariances; the noise cross-covariance between
/// any two distinct descriptions is -a.
struct TestChannel {
    std::vector<SymMatrix> kw;
    SymMatrix a;

    int l() const { return static_cast<int>(kw.size()); }
};

/// Distortions realized by a test channel: per-description MMSE
/// covariances and the central MMSE covariance from all descriptions.
struct ChannelDistortions {
    std::vector<SymMatrix> individual;
    SymMatrix central;
};

ChannelDistortions distortions_of_channel(const SymMatrix& kx, const TestChannel& tc);

} // namespace mdr

#endif
