#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mdr/instance.hpp"
#include "mdr/sym_matrix.hpp"

namespace testutil {

inline mdr::SymMatrix sym(std::initializer_list<std::initializer_list<double>> rows) {
    const int n = int(rows.size());
    Eigen::MatrixXd m(n, n);
    int i = 0;
    for (const auto& row : rows) {
        int j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return mdr::SymMatrix(m);
}

inline mdr::SymMatrix s1(double v) {
    return mdr::SymMatrix(Eigen::MatrixXd::Constant(1, 1, v));
}

inline Eigen::MatrixXd random_orthogonal(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = g(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::VectorXd d = qr.matrixQR().diagonal();
    for (int i = 0; i < n; ++i)
        if (d(i) < 0) q.col(i) = -q.col(i);
    return q;
}

// Eigenvalues drawn log-uniformly from [lo, hi], random eigenbasis.
inline mdr::SymMatrix random_spd(std::mt19937_64& rng, int n, double lo, double hi) {
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    Eigen::VectorXd ev(n);
    for (int i = 0; i < n; ++i) ev(i) = std::exp(u(rng));
    const Eigen::MatrixXd q = random_orthogonal(rng, n);
    return mdr::SymMatrix(q * ev.asDiagonal() * q.transpose());
}

// Valid instance with comfortable ordering margins: built in whitened space
// as D0 + s (I-D0)^{1/2} R (I-D0)^{1/2} with R spectrum in (0,1), then mapped
// through a random source covariance unless identity_kx is set.
inline mdr::MDInstance random_instance(std::mt19937_64& rng, int n, int l,
                                       bool identity_kx = false) {
    const mdr::SymMatrix d0w = random_spd(rng, n, 0.05, 0.35);
    const mdr::SymMatrix gap = mdr::SymMatrix(Eigen::MatrixXd::Identity(n, n)) - d0w;
    const mdr::SymMatrix gap_half = mdr::sqrt_psd(gap);
    std::vector<mdr::SymMatrix> dw;
    for (int i = 0; i < l; ++i) {
        const mdr::SymMatrix r = random_spd(rng, n, 0.15, 0.85);
        dw.push_back(mdr::SymMatrix(d0w.mat() +
                                    gap_half.mat() * r.mat() * gap_half.mat()));
    }
    if (identity_kx)
        return mdr::MDInstance{mdr::SymMatrix::identity(n), dw, d0w};
    const mdr::SymMatrix kx = random_spd(rng, n, 0.3, 3.0);
    const mdr::SymMatrix s = mdr::sqrt_psd(kx);
    auto lift = [&](const mdr::SymMatrix& m) {
        return mdr::SymMatrix(s.mat() * m.mat() * s.mat());
    };
    std::vector<mdr::SymMatrix> d;
    for (const auto& m : dw) d.push_back(lift(m));
    return mdr::MDInstance{kx, d, lift(d0w)};
}

// Scalar (per-coordinate) distortion pairs engineered to land in a given
// boundary regime of the coupling for L descriptions and unit variance.
enum class CoordCase { interior, zero, saturated };

inline std::pair<double, double> coord_pair(std::mt19937_64& rng, int l, CoordCase c) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    switch (c) {
        case CoordCase::interior: {
            // d mid-range, d0 well below the no-coupling distortion.
            const double d = 0.4 + 0.2 * u(rng);
            const double free0 = 1.0 / (l / d - (l - 1.0)); // central at A = 0
            const double d0 = free0 * (0.5 + 0.3 * u(rng));
            return {d, d0};
        }
        case CoordCase::zero: {
            const double d = 0.4 + 0.2 * u(rng);
            const double free0 = 1.0 / (l / d - (l - 1.0));
            const double d0 = free0 + (d - free0) * (0.2 + 0.6 * u(rng));
            return {d, d0};
        }
        case CoordCase::saturated: {
            const double d = 0.85 + 0.1 * u(rng);
            const double cap = l * d - (l - 1.0); // f(1) >= 0 iff d0 <= L d - (L-1)
            const double d0 = cap * (0.6 + 0.3 * u(rng));
            return {d, d0};
        }
    }
    return {0.5, 0.2};
}

// Instance whose whitened matrices share one eigenbasis, with coordinate j
// shaped by cases[j]; exercises every coupling regime deliberately.
inline mdr::MDInstance case_instance(std::mt19937_64& rng, int l,
                                     const std::vector<CoordCase>& cases,
                                     bool identity_kx = false) {
    const int n = int(cases.size());
    Eigen::VectorXd dv(n), d0v(n);
    for (int j = 0; j < n; ++j) {
        const auto [d, d0] = coord_pair(rng, l, cases[std::size_t(j)]);
        dv(j) = d;
        d0v(j) = d0;
    }
    const Eigen::MatrixXd q = random_orthogonal(rng, n);
    auto rot = [&](const Eigen::VectorXd& v) {
        return mdr::SymMatrix(q * v.asDiagonal() * q.transpose());
    };
    std::vector<mdr::SymMatrix> d(std::size_t(l), rot(dv));
    if (identity_kx) return mdr::MDInstance{mdr::SymMatrix::identity(n), d, rot(d0v)};
    const mdr::SymMatrix kx = random_spd(rng, n, 0.4, 2.5);
    const mdr::SymMatrix s = mdr::sqrt_psd(kx);
    auto lift = [&](const mdr::SymMatrix& m) {
        return mdr::SymMatrix(s.mat() * m.mat() * s.mat());
    };
    std::vector<mdr::SymMatrix> dl;
    for (const auto& m : d) dl.push_back(lift(m));
    return mdr::MDInstance{kx, dl, lift(rot(d0v))};
}

// Channel with random blocks and a coupling kept small enough for the
// assembled covariance to stay positive definite.
inline mdr::TestChannel random_channel(std::mt19937_64& rng, int n, int l) {
    for (;;) {
        std::vector<mdr::SymMatrix> blocks;
        double min_eig = 1e300;
        for (int i = 0; i < l; ++i) {
            blocks.push_back(random_spd(rng, n, 0.3, 3.0));
            min_eig = std::min(min_eig, mdr::eig_sym(blocks.back()).values(0));
        }
        mdr::SymMatrix a = random_spd(rng, n, 0.1, 1.0);
        const double amax = mdr::eig_sym(a).values(n - 1);
        a = a.scaled(0.8 * min_eig / (l * amax));
        const mdr::TestChannel tc{blocks, a};
        if (mdr::is_pd(mdr::assemble_kw(blocks, a))) return tc;
    }
}

// Collapsed inverse the slow way: invert the full LN x LN matrix and add up
// all its N x N blocks.
inline Eigen::MatrixXd dense_collapsed(const std::vector<mdr::SymMatrix>& blocks,
                                       const mdr::SymMatrix& a) {
    const int n = a.n();
    const int l = int(blocks.size());
    const Eigen::MatrixXd inv =
        mdr::assemble_kw(blocks, a).mat().fullPivLu().inverse();
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < l; ++i)
        for (int j = 0; j < l; ++j) sum += inv.block(i * n, j * n, n, n);
    return sum;
}

// log det through a pivoted LU, independent of the Cholesky-based library path.
inline double logdet_lu(const Eigen::MatrixXd& m) {
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
    double v = 0.0;
    for (int i = 0; i < m.rows(); ++i) v += std::log(std::abs(lu.matrixLU()(i, i)));
    return v;
}

} // namespace testutil
