#include "mdr/sym_matrix.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>
#include <sstream>

namespace mdr {

namespace {

constexpr double kSymTol = 1e-12;
constexpr double kRelEigTol = 1e-10;

void check_square_finite(const Eigen::MatrixXd& m, const char* what) {
    if (m.rows() != m.cols()) {
        std::ostringstream os;
        os << what << ": matrix is " << m.rows() << "x" << m.cols() << ", expected square";
        throw InvalidMatrix(os.str());
    }
    if (!m.allFinite()) {
        throw InvalidMatrix(std::string(what) + ": matrix has non-finite entries");
    }
}

} // namespace

SymMatrix::SymMatrix(const Eigen::MatrixXd& m) {
    check_square_finite(m, "SymMatrix");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > kSymTol * scale) {
        std::ostringstream os;
        os << "SymMatrix: asymmetry " << asym << " exceeds " << kSymTol * scale;
        throw InvalidMatrix(os.str());
    }
    m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::identity(int n) {
    return SymMatrix(Eigen::MatrixXd::Identity(n, n));
}

SymMatrix SymMatrix::zero(int n) {
    return SymMatrix(Eigen::MatrixXd::Zero(n, n));
}

SymMatrix SymMatrix::diagonal(const Eigen::VectorXd& d) {
    return SymMatrix(Eigen::MatrixXd(d.asDiagonal()));
}

SymMatrix SymMatrix::operator+(const SymMatrix& o) const {
    if (o.n() != n()) throw DimensionError("SymMatrix: size mismatch in +");
    return SymMatrix(m_ + o.m_);
}

SymMatrix SymMatrix::operator-(const SymMatrix& o) const {
    if (o.n() != n()) throw DimensionError("SymMatrix: size mismatch in -");
    return SymMatrix(m_ - o.m_);
}

SymMatrix SymMatrix::scaled(double c) const {
    return SymMatrix(c * m_);
}

EigSym eig_sym(const SymMatrix& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.mat());
    if (es.info() != Eigen::Success) {
        throw InternalError("eig_sym: eigendecomposition failed");
    }
    return EigSym{es.eigenvalues(), es.eigenvectors()};
}

double spectral_norm(const SymMatrix& m) {
    if (m.n() == 0) return 0.0;
    const EigSym e = eig_sym(m);
    return std::max(std::abs(e.values(0)), std::abs(e.values(m.n() - 1)));
}

double default_eig_tol(const SymMatrix& m) {
    return kRelEigTol * std::max(1.0, spectral_norm(m));
}

bool is_pd(const SymMatrix& m, double tol) {
    if (m.n() == 0) throw InvalidMatrix("is_pd: empty matrix");
    if (tol < 0) tol = default_eig_tol(m);
    return eig_sym(m).values(0) > tol;
}

bool is_psd(const SymMatrix& m, double tol) {
    if (m.n() == 0) throw InvalidMatrix("is_psd: empty matrix");
    if (tol < 0) tol = default_eig_tol(m);
    return eig_sym(m).values(0) >= -tol;
}

PsdOrder psd_compare(const SymMatrix& a, const SymMatrix& b, double tol) {
    if (a.n() != b.n()) throw DimensionError("psd_compare: size mismatch");
    const SymMatrix diff = b - a;
    if (tol < 0) {
        const double scale = std::max(spectral_norm(a), spectral_norm(b));
        tol = kRelEigTol * std::max(1.0, scale);
    }
    const EigSym e = eig_sym(diff);
    const double lo = e.values(0);
    const double hi = e.values(diff.n() - 1);
    if (std::max(std::abs(lo), std::abs(hi)) <= tol) return {PsdVerdict::equal, lo};
    if (lo > tol) return {PsdVerdict::less, lo};
    if (lo >= -tol) return {PsdVerdict::less_equal, lo};
    if (hi < -tol) return {PsdVerdict::greater, hi};
    if (hi <= tol) return {PsdVerdict::greater_equal, hi};
    return {PsdVerdict::incomparable, lo};
}

const char* to_string(PsdVerdict v) {
    switch (v) {
        case PsdVerdict::less: return "less";
        case PsdVerdict::less_equal: return "less_equal";
        case PsdVerdict::equal: return "equal";
        case PsdVerdict::greater_equal: return "greater_equal";
        case PsdVerdict::greater: return "greater";
        case PsdVerdict::incomparable: return "incomparable";
    }
    return "?";
}

SymMatrix sqrt_psd(const SymMatrix& m, double tol) {
    // Wider default band than the PSD tests: eigenvalue dust from upstream
    // arithmetic is clamped to zero, genuine indefiniteness is rejected.
    if (tol < 0) tol = 1e-8 * std::max(1.0, spectral_norm(m));
    EigSym e = eig_sym(m);
    if (e.values(0) < -tol) {
        std::ostringstream os;
        os << "sqrt_psd: min eigenvalue " << e.values(0) << " below -" << tol;
        throw NotPsd(os.str());
    }
    Eigen::VectorXd r = e.values.cwiseMax(0.0).cwiseSqrt();
    return SymMatrix(e.vectors * r.asDiagonal() * e.vectors.transpose());
}

SymMatrix inv_sqrt_pd(const SymMatrix& m, double tol) {
    if (tol < 0) tol = default_eig_tol(m);
    EigSym e = eig_sym(m);
    if (e.values(0) <= tol) {
        std::ostringstream os;
        os << "inv_sqrt_pd: min eigenvalue " << e.values(0) << " not above " << tol;
        throw NotPd(os.str());
    }
    Eigen::VectorXd r = e.values.cwiseSqrt().cwiseInverse();
    return SymMatrix(e.vectors * r.asDiagonal() * e.vectors.transpose());
}

SymMatrix inverse_pd(const SymMatrix& m) {
    Eigen::LLT<Eigen::MatrixXd> llt(m.mat());
    if (llt.info() != Eigen::Success) {
        throw NotPd("inverse_pd: Cholesky factorization failed");
    }
    Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(m.n(), m.n()));
    return SymMatrix(0.5 * (inv + inv.transpose()));
}

double log_det_pd(const SymMatrix& m) {
    Eigen::LLT<Eigen::MatrixXd> llt(m.mat());
    if (llt.info() != Eigen::Success) {
        throw NotPd("log_det_pd: Cholesky factorization failed");
    }
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

SymMatrix woodbury_inverse(const SymMatrix& a, const Eigen::MatrixXd& c,
                           const SymMatrix& b, const Eigen::MatrixXd& d) {
    const int n = a.n();
    const int m = b.n();
    if (c.rows() != n || c.cols() != m || d.rows() != m || d.cols() != n) {
        throw DimensionError("woodbury_inverse: factor dimensions do not match");
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lua(a.mat());
    if (!lua.isInvertible()) throw SingularMatrix("woodbury_inverse: A is singular");
    Eigen::FullPivLU<Eigen::MatrixXd> lub(b.mat());
    if (!lub.isInvertible()) throw SingularMatrix("woodbury_inverse: B is singular");

    const Eigen::MatrixXd ainv_c = lua.solve(c);
    const Eigen::MatrixXd inner = lub.inverse() + d * ainv_c;
    Eigen::FullPivLU<Eigen::MatrixXd> lui(inner);
    if (!lui.isInvertible()) {
        throw SingularMatrix("woodbury_inverse: inner matrix B^{-1} + D A^{-1} C is singular");
    }
    const Eigen::MatrixXd d_ainv = lua.solve(d.transpose()).transpose();
    return SymMatrix(lua.inverse() - ainv_c * lui.solve(d_ainv));
}

Block2x2 block_2x2_inverse(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           const Eigen::MatrixXd& c, const Eigen::MatrixXd& d) {
    if (a.rows() != a.cols() || d.rows() != d.cols()) {
        throw DimensionError("block_2x2_inverse: diagonal blocks must be square");
    }
    if (b.rows() != a.rows() || b.cols() != d.cols() || c.rows() != d.rows() ||
        c.cols() != a.cols()) {
        throw DimensionError("block_2x2_inverse: off-diagonal block dimensions do not match");
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lua(a);
    if (!lua.isInvertible()) throw SingularMatrix("block_2x2_inverse: A block is singular");
    const Eigen::MatrixXd ainv_b = lua.solve(b);
    const Eigen::MatrixXd schur = d - c * ainv_b;
    Eigen::FullPivLU<Eigen::MatrixXd> lus(schur);
    if (!lus.isInvertible()) {
        throw SingularMatrix("block_2x2_inverse: Schur complement is singular");
    }
    Block2x2 r;
    r.v = lus.inverse();
    const Eigen::MatrixXd c_ainv = lua.solve(c.transpose()).transpose();
    r.u = -lus.solve(c_ainv);
    r.y = -ainv_b * r.v;
    r.x = lua.inverse() + ainv_b * lus.solve(c_ainv);
    return r;
}

SymMatrix assemble_kw(const std::vector<SymMatrix>& blocks, const SymMatrix& a) {
    if (blocks.empty()) throw DimensionError("assemble_kw: no blocks");
    const int n = a.n();
    const int big = static_cast<int>(blocks.size()) * n;
    for (const SymMatrix& b : blocks) {
        if (b.n() != n) throw DimensionError("assemble_kw: block size differs from coupling size");
    }
    Eigen::MatrixXd kw(big, big);
    for (int i = 0; i < static_cast<int>(blocks.size()); ++i) {
        for (int j = 0; j < static_cast<int>(blocks.size()); ++j) {
            kw.block(i * n, j * n, n, n) = (i == j) ? blocks[i].mat() : (-a.mat()).eval();
        }
    }
    return SymMatrix(kw);
}

namespace {

// Direct evaluation of the collapsed-inverse identity; throws if the
// inner difference fails to be positive definite.
SymMatrix collapsed_inverse_direct(const std::vector<SymMatrix>& blocks,
                                   const Eigen::MatrixXd& a) {
    const int n = static_cast<int>(a.rows());
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
    for (const SymMatrix& b : blocks) {
        s += inverse_pd(SymMatrix(b.mat() + a)).mat();
    }
    const SymMatrix s_inv = inverse_pd(SymMatrix(s));
    return inverse_pd(SymMatrix(s_inv.mat() - a));
}

} // namespace

SymMatrix collapsed_inverse(const std::vector<SymMatrix>& blocks, const SymMatrix& a) {
    if (blocks.empty()) throw DimensionError("collapsed_inverse: no blocks");
    const int n = a.n();
    for (const SymMatrix& b : blocks) {
        if (b.n() != n) {
            throw DimensionError("collapsed_inverse: block size differs from coupling size");
        }
        if (!is_pd(b)) throw NotPd("collapsed_inverse: diagonal block is not positive definite");
    }
    const double min_eig = eig_sym(a).values(0);
    const double eps = 1e-10 * spectral_norm(a) + 1e-14;
    const bool near_singular = min_eig <= eps;
    if (!near_singular) {
        try {
            return collapsed_inverse_direct(blocks, a.mat());
        } catch (const NotPd&) {
            // fall through to the shifted evaluation
        }
    }
    // Shift the coupling off the singular set and extrapolate the linear
    // term away: M(0) ~= 2 M(eps) - M(2 eps).
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    const SymMatrix m1 = collapsed_inverse_direct(blocks, a.mat() + eps * id);
    const SymMatrix m2 = collapsed_inverse_direct(blocks, a.mat() + 2.0 * eps * id);
    return SymMatrix(2.0 * m1.mat() - m2.mat());
}

} // namespace mdr
