#ifndef MDR_SYM_MATRIX_HPP
#define MDR_SYM_MATRIX_HPP

#include <Eigen/Dense>
#include <vector>

#include "mdr/errors.hpp"

namespace mdr {

/// Validated real symmetric matrix.
///
/// Construction enforces squareness and finiteness and symmetrizes the
/// input.  Asymmetry up to 1e-12 (relative to the largest entry) is
/// absorbed by averaging with the transpose; anything larger is rejected
/// as InvalidMatrix, since it indicates a computation error upstream
/// rather than floating-point noise.
class SymMatrix {
public:
    SymMatrix() = default;

    explicit SymMatrix(const Eigen::MatrixXd& m);

    static SymMatrix identity(int n);
    static SymMatrix zero(int n);
    static SymMatrix diagonal(const Eigen::VectorXd& d);

    int n() const { return static_cast<int>(m_.rows()); }
    const Eigen::MatrixXd& mat() const { return m_; }
    double operator()(int i, int j) const { return m_(i, j); }

    SymMatrix operator+(const SymMatrix& o) const;
    SymMatrix operator-(const SymMatrix& o) const;
    SymMatrix scaled(double c) const;

private:
    Eigen::MatrixXd m_;
};

/// Eigendecomposition of a symmetric matrix; eigenvalues ascending.
struct EigSym {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

/// Single decomposition primitive behind every definiteness check and
/// matrix square root in the library.
EigSym eig_sym(const SymMatrix& m);

/// Largest-magnitude eigenvalue.
double spectral_norm(const SymMatrix& m);

/// Default tolerance for definiteness decisions: relative to the spectral
/// norm with a floor of one, so tiny and huge matrices are judged alike.
double default_eig_tol(const SymMatrix& m);

/// True iff the smallest eigenvalue exceeds tol.
/// tol < 0 requests the default relative tolerance.
bool is_pd(const SymMatrix& m, double tol = -1.0);

/// True iff the smallest eigenvalue is at least -tol.
bool is_psd(const SymMatrix& m, double tol = -1.0);

enum class PsdVerdict {
    less,          // A < B strictly (B - A positive definite)
    less_equal,    // A <= B (B - A positive semidefinite, singular)
    equal,         // B - A vanishes within tolerance
    greater_equal, // A >= B
    greater,       // A > B strictly
    incomparable,  // B - A indefinite
};

/// Loewner-order comparison verdict.  witness is the decisive eigenvalue
/// of B - A: the minimum for less/less_equal/incomparable verdicts, the
/// maximum for greater/greater_equal.
struct PsdOrder {
    PsdVerdict verdict;
    double witness;
};

PsdOrder psd_compare(const SymMatrix& a, const SymMatrix& b, double tol = -1.0);

const char* to_string(PsdVerdict v);

/// Principal square root of a positive semidefinite matrix.  Eigenvalues
/// in [-tol, 0) are clamped to zero; smaller ones raise NotPsd.
SymMatrix sqrt_psd(const SymMatrix& m, double tol = -1.0);

/// Inverse principal square root of a positive definite matrix.
SymMatrix inv_sqrt_pd(const SymMatrix& m, double tol = -1.0);

/// Inverse of a positive definite matrix via Cholesky.
SymMatrix inverse_pd(const SymMatrix& m);

/// log det of a positive definite matrix via Cholesky.
double log_det_pd(const SymMatrix& m);

/// (A + C B D)^{-1} computed as
///   A^{-1} - A^{-1} C (B^{-1} + D A^{-1} C)^{-1} D A^{-1}.
/// A is n x n, B is m x m, C is n x m, D is m x n; the result must come
/// out symmetric (use D = C^t), otherwise the construction rejects it.
SymMatrix woodbury_inverse(const SymMatrix& a, const Eigen::MatrixXd& c,
                           const SymMatrix& b, const Eigen::MatrixXd& d);

/// Blocks of the inverse of [[A, B], [C, D]].
struct Block2x2 {
    Eigen::MatrixXd x; // top-left
    Eigen::MatrixXd y; // top-right
    Eigen::MatrixXd u; // bottom-left
    Eigen::MatrixXd v; // bottom-right
};

/// Inverse of a 2x2 block matrix by Schur complement elimination on A.
Block2x2 block_2x2_inverse(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           const Eigen::MatrixXd& c, const Eigen::MatrixXd& d);

/// Assembles the LN x LN coupled noise covariance with the given diagonal
/// blocks and -A in every off-diagonal block.
SymMatrix assemble_kw(const std::vector<SymMatrix>& blocks, const SymMatrix& a);

/// Sum of all N x N blocks of Kw^{-1}, computed without forming Kw:
///   [ (sum_l (Kw_l + A)^{-1})^{-1} - A ]^{-1}.
/// Near-singular A is handled by evaluating at A + eps I with one
/// Richardson refinement pass, which reproduces the limit value.
SymMatrix collapsed_inverse(const std::vector<SymMatrix>& blocks, const SymMatrix& a);

} // namespace mdr

#endif
