#ifndef QPROBE_NUMERICS_HPP
#define QPROBE_NUMERICS_HPP

#include <Eigen/Dense>
#include <complex>
#include <span>
#include <string>
#include <vector>

namespace qprobe::numerics {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

// Relative tolerance used as the default everywhere in the library.
inline constexpr double kDefaultTol = 1e-10;

// Guard against runaway dense instances; kron() and friends reject results
// beyond this edge length. The per-scenario Hilbert-space cap is enforced
// separately in scenarios.
inline constexpr Eigen::Index kMaxDenseDim = 4096;

struct EigResult {
    RVector eigenvalues;   // ascending
    CMatrix eigenvectors;  // orthonormal columns, deterministic phases
};

struct SvdResult {
    CMatrix u;
    RVector singular_values;  // descending, nonnegative
    CMatrix v;
};

/// Builds a matrix from row-major entries, rejecting NaN/Inf and shape
/// mismatches. This is the validated entry point used by deserialization.
CMatrix make_cmatrix(Eigen::Index rows, Eigen::Index cols,
                     std::span<const Complex> entries);

void require_finite(const CMatrix& a, const std::string& what);

double frobenius_norm(const CMatrix& a);

bool is_hermitian(const CMatrix& a, double tol = kDefaultTol);

CMatrix identity(Eigen::Index n);

// Kronecker product, (i*rows_b + k, j*cols_b + l) indexing.
CMatrix kron(const CMatrix& a, const CMatrix& b);

/// Eigendecomposition of a Hermitian matrix. Eigenvalues ascending;
/// each eigenvector's first component of non-negligible modulus is made
/// real-positive so serialized output is reproducible run to run.
EigResult herm_eig(const CMatrix& a, double tol = kDefaultTol);

// exp(-i*h*t) through the spectral decomposition of Hermitian h.
CMatrix unitary_evolution(const CMatrix& h, double t);
CMatrix unitary_evolution(const EigResult& eig, double t);

SvdResult svd(const CMatrix& a);

/// Orthonormal basis (columns) of {x : ||Ax|| <= tol*||A||_F*||x||}.
/// Returns an n x 0 matrix when the nullspace is trivial.
CMatrix nullspace(const CMatrix& a, double tol);

/// Minimum-norm least-squares solution via SVD, truncating singular values
/// below tol relative to the largest.
CMatrix lstsq(const CMatrix& a, const CMatrix& b, double tol);

// Real-field variants used by the h_j linear system.
RMatrix nullspace(const RMatrix& a, double tol);
RVector lstsq(const RMatrix& a, const RVector& b, double tol);

}  // namespace qprobe::numerics

#endif  // QPROBE_NUMERICS_HPP
