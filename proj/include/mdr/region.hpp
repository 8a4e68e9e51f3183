#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mdr/instance.hpp"
#include "mdr/sym_matrix.hpp"

namespace mdr {

// One linear constraint sum_{l in subset} R_l >= value. Subsets are bitmasks
// with bit 0 = description 1.
struct Constraint {
    std::uint32_t subset = 0;
    double value_nats = 0.0;
};

struct RateRegion {
    int l = 0;
    std::vector<Constraint> constraints;
    std::vector<std::vector<double>> vertices;
};

// Subset rate of a coupled channel: (1/2) log( prod_{l in S} |Kx+Kw_l| / |Kw_S| )
// where Kw_S is the principal sub-block of the assembled noise covariance.
double phi(std::uint32_t subset, const SymMatrix& kx, const TestChannel& tc);

struct PolymatroidReport {
    bool ok = true;
    // Smallest slack seen over all monotonicity and supermodularity checks.
    double worst_margin = 0.0;
    std::uint32_t worst_s = 0;
    std::uint32_t worst_t = 0;
    long checks = 0;
};

// Exhaustive over all subset pairs for L <= 6, sampled beyond that.
PolymatroidReport is_contra_polymatroid(const SymMatrix& kx, const TestChannel& tc,
                                        long sample_budget = 20000);

// All L! greedy vertices b[pi_i] = phi(prefix_i) - phi(prefix_{i-1}).
std::vector<std::vector<double>> vertices(const SymMatrix& kx, const TestChannel& tc);

// Exact region for two descriptions: individual floors plus the optimal sum rate.
RateRegion two_description_region(const MDInstance& inst);

// Region induced by a coupled channel: one constraint phi(S) per nonempty S,
// exact for the distortion family D_S the channel itself induces.
RateRegion general_region_from_channel(const SymMatrix& kx, const TestChannel& tc);

// Distortion the channel induces for the receiver that observes the subset S.
SymMatrix subset_distortion(std::uint32_t subset, const SymMatrix& kx,
                            const TestChannel& tc);

struct SeparateCertificate {
    bool achievable = false;
    // Valid only when achievable: full-size completions and their region.
    SymMatrix d1_completion{Eigen::MatrixXd::Identity(1, 1)};
    SymMatrix d2_completion{Eigen::MatrixXd::Identity(1, 1)};
    RateRegion witness_region;
    long evaluated = 0;
};

// Sound, incomplete membership test for the two-receiver problem where
// description 1 covers only the first n1 coordinates and description 2 the
// rest: searches completions D1', D2' with the designated principal block
// dominated by the given target, and accepts if the rate pair lands in the
// two-description region of any completion. "Not achievable" is never claimed.
SeparateCertificate separate_constraint_certificate(const SymMatrix& kx, int n1,
                                                    const SymMatrix& d1,
                                                    const SymMatrix& d2,
                                                    const SymMatrix& d0,
                                                    std::array<double, 2> rates,
                                                    long budget = 2000);

} // namespace mdr
