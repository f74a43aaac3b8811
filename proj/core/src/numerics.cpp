#include "qprobe/numerics.hpp"

#include <cmath>
#include <stdexcept>

namespace qprobe::numerics {

CMatrix make_cmatrix(Eigen::Index rows, Eigen::Index cols,
                     std::span<const Complex> entries) {
    if (rows <= 0 || cols <= 0) {
        throw std::invalid_argument("make_cmatrix: dimensions must be positive");
    }
    if (static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) !=
        entries.size()) {
        throw std::invalid_argument("make_cmatrix: entry count does not match shape");
    }
    CMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            m(i, j) = entries[static_cast<std::size_t>(i * cols + j)];
        }
    }
    require_finite(m, "make_cmatrix");
    return m;
}

void require_finite(const CMatrix& a, const std::string& what) {
    if (!a.allFinite()) {
        throw std::invalid_argument(what + ": non-finite entries");
    }
}

double frobenius_norm(const CMatrix& a) { return a.norm(); }

bool is_hermitian(const CMatrix& a, double tol) {
    if (a.rows() != a.cols()) return false;
    return (a - a.adjoint()).norm() <= tol * std::max(1.0, a.norm());
}

CMatrix identity(Eigen::Index n) { return CMatrix::Identity(n, n); }

CMatrix kron(const CMatrix& a, const CMatrix& b) {
    const Eigen::Index rows = a.rows() * b.rows();
    const Eigen::Index cols = a.cols() * b.cols();
    if (rows > kMaxDenseDim || cols > kMaxDenseDim) {
        throw std::length_error("kron: result exceeds maximum dense dimension");
    }
    CMatrix out(rows, cols);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

namespace {

// Rotates each column so its first component of non-negligible modulus is
// real-positive. Ties in eigenvalue order are left to Eigen, which is
// deterministic for identical input.
void fix_phases(CMatrix& v) {
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
        const double scale = v.col(c).cwiseAbs().maxCoeff();
        if (scale <= 0.0) continue;
        for (Eigen::Index r = 0; r < v.rows(); ++r) {
            const Complex z = v(r, c);
            if (std::abs(z) > 1e-12 * scale) {
                v.col(c) *= std::conj(z) / std::abs(z);
                break;
            }
        }
    }
}

}  // namespace

EigResult herm_eig(const CMatrix& a, double tol) {
    if (a.rows() != a.cols()) {
        throw std::invalid_argument("herm_eig: matrix must be square");
    }
    if (!is_hermitian(a, tol)) {
        throw std::invalid_argument("herm_eig: matrix is not Hermitian within tolerance");
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> solver((a + a.adjoint()) / 2.0);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("herm_eig: eigensolver failed to converge");
    }
    EigResult result{solver.eigenvalues(), solver.eigenvectors()};
    fix_phases(result.eigenvectors);
    return result;
}

CMatrix unitary_evolution(const EigResult& eig, double t) {
    const Eigen::Index n = eig.eigenvalues.size();
    CVector phases(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        phases(k) = std::exp(Complex(0.0, -eig.eigenvalues(k) * t));
    }
    return eig.eigenvectors * phases.asDiagonal() * eig.eigenvectors.adjoint();
}

CMatrix unitary_evolution(const CMatrix& h, double t) {
    return unitary_evolution(herm_eig(h), t);
}

SvdResult svd(const CMatrix& a) {
    Eigen::JacobiSVD<CMatrix> solver(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return SvdResult{solver.matrixU(), solver.singularValues(), solver.matrixV()};
}

CMatrix nullspace(const CMatrix& a, double tol) {
    if (tol <= 0.0) {
        throw std::invalid_argument("nullspace: tol must be positive");
    }
    const SvdResult s = svd(a);
    const double threshold = tol * std::max(a.norm(), 1e-300);
    Eigen::Index rank = 0;
    while (rank < s.singular_values.size() && s.singular_values(rank) > threshold) {
        ++rank;
    }
    const Eigen::Index dim = a.cols() - rank;
    return s.v.rightCols(dim);
}

CMatrix lstsq(const CMatrix& a, const CMatrix& b, double tol) {
    if (a.rows() != b.rows()) {
        throw std::invalid_argument("lstsq: incompatible shapes");
    }
    const SvdResult s = svd(a);
    const double smax = s.singular_values.size() > 0 ? s.singular_values(0) : 0.0;
    const double threshold = tol * smax;
    const CMatrix y = s.u.adjoint() * b;
    CMatrix z = CMatrix::Zero(a.cols(), b.cols());
    for (Eigen::Index k = 0; k < s.singular_values.size(); ++k) {
        if (s.singular_values(k) > threshold && s.singular_values(k) > 0.0) {
            z.row(k) = y.row(k) / s.singular_values(k);
        }
    }
    return s.v * z;
}

RMatrix nullspace(const RMatrix& a, double tol) {
    CMatrix n = nullspace(CMatrix(a.cast<Complex>()), tol);
    return n.real();
}

RVector lstsq(const RMatrix& a, const RVector& b, double tol) {
    CMatrix x = lstsq(CMatrix(a.cast<Complex>()), CMatrix(b.cast<Complex>()), tol);
    return x.real().col(0);
}

}  // namespace qprobe::numerics
