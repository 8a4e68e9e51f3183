#pragma once

#include <cstdint>
#include <vector>

#include "mdr/instance.hpp"
#include "mdr/sym_matrix.hpp"

namespace mdr {

struct McReport {
    long n_samples = 0;
    std::uint64_t seed = 0;
    std::vector<SymMatrix> empirical_dl;
    SymMatrix empirical_d0{Eigen::MatrixXd::Identity(1, 1)};
    double max_rel_frobenius_error = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

// Samples (x, w_1..w_L) jointly Gaussian, estimates the receivers' MMSE
// residual covariances empirically with the analytic linear estimators, and
// compares against the closed-form distortions. Deterministic given the seed
// (counter-based generator keyed by sample index). tol < 0 picks the default
// band 3 (N L) / sqrt(n).
McReport sample_verify(const SymMatrix& kx, const TestChannel& tc, long n,
                       std::uint64_t seed, double tol = -1.0);

// Max Frobenius norm over description pairs of Cov(u_i, u_j | y) where
// y = x + z and Kz is induced by the coupling candidate a. Zero exactly when
// the channel's coupling matches a.
double independence_check(const SymMatrix& kx, const TestChannel& tc, const SymMatrix& a);

struct ConsistencyReport {
    double achievable_rate = 0.0;
    double min_gap = 0.0;
    long points = 0;
};

// Weak-duality sweep: the channel's rate must dominate the converse value at
// every remote-noise covariance the budgeted grid visits.
ConsistencyReport bound_consistency(const MDInstance& inst, const TestChannel& tc,
                                    long grid_budget = 2000);

} // namespace mdr
