#ifndef QPROBE_HILBERT_HPP
#define QPROBE_HILBERT_HPP

#include <string>
#include <utility>
#include <vector>

#include "qprobe/numerics.hpp"

namespace qprobe::hilbert {

using numerics::CMatrix;
using numerics::Complex;
using numerics::CVector;

struct Factor {
    std::string label;
    Eigen::Index dim = 1;

    friend bool operator==(const Factor&, const Factor&) = default;
};

/// Ordered labeled tensor factorization of a Hilbert space. Multi-indices are
/// row-major: the first factor varies slowest. Canonical order in this
/// library is (S, E, ancillas...), with new ancilla factors appended at the
/// end.
class SubsystemLayout {
public:
    SubsystemLayout() = default;
    explicit SubsystemLayout(std::vector<Factor> factors);

    const std::vector<Factor>& factors() const { return factors_; }
    Eigen::Index total_dim() const { return total_dim_; }
    std::size_t size() const { return factors_.size(); }

    bool has(const std::string& label) const;
    std::size_t position(const std::string& label) const;  // throws if absent
    Eigen::Index dim_of(const std::string& label) const;
    Eigen::Index dim_of(std::span<const std::string> labels) const;

    std::vector<std::string> labels() const;
    /// All labels not in the given set, in layout order.
    std::vector<std::string> complement(std::span<const std::string> labels) const;

    /// Layout consisting of the given labels only, in this layout's order.
    SubsystemLayout sublayout(std::span<const std::string> labels) const;

    /// Replaces a contiguous run of factors by one merged factor.
    SubsystemLayout merged(std::span<const std::string> labels,
                           const std::string& merged_label) const;

    friend bool operator==(const SubsystemLayout&, const SubsystemLayout&) = default;

private:
    std::vector<Factor> factors_;
    Eigen::Index total_dim_ = 1;
};

class PureState {
public:
    PureState(SubsystemLayout layout, CVector amplitudes,
              double norm_tol = numerics::kDefaultTol);

    const SubsystemLayout& layout() const { return layout_; }
    const CVector& amplitudes() const { return amplitudes_; }
    Eigen::Index dim() const { return amplitudes_.size(); }

private:
    SubsystemLayout layout_;
    CVector amplitudes_;
};

/// Density matrix with an explicit weight in [0, 1] for post-selection
/// branches; weight 1 means a normalized state. Hermiticity and trace are
/// validated at construction, positivity on demand via validate().
class DensityMatrix {
public:
    DensityMatrix(SubsystemLayout layout, CMatrix matrix, double weight = 1.0,
                  double tol = numerics::kDefaultTol);

    const SubsystemLayout& layout() const { return layout_; }
    const CMatrix& matrix() const { return matrix_; }
    double weight() const { return weight_; }
    Eigen::Index dim() const { return matrix_.rows(); }

    /// Full check including positive semidefiniteness.
    void validate(double tol = numerics::kDefaultTol) const;

private:
    SubsystemLayout layout_;
    CMatrix matrix_;
    double weight_;
};

struct HermitianOperator {
    SubsystemLayout layout;  // the factors the operator acts on
    CMatrix matrix;

    HermitianOperator(SubsystemLayout layout_, CMatrix matrix_,
                      double tol = numerics::kDefaultTol);

    std::vector<std::string> support_labels() const { return layout.labels(); }
};

/// The characterization (d_E, |Psi_SEA>, H_SE) of one hypothesis for the
/// hidden dynamics. The environment factor is labeled "E", the principal
/// system "S"; h_se acts on (S, E) and as identity on all ancillas.
struct Triple {
    Eigen::Index d_e = 1;
    PureState psi;
    HermitianOperator h_se;

    Triple(Eigen::Index d_e_, PureState psi_, HermitianOperator h_se_);

    Eigen::Index d_s() const { return psi.layout().dim_of("S"); }
};

// ---- operations ----------------------------------------------------------

DensityMatrix partial_trace(const PureState& state,
                            std::span<const std::string> keep);
DensityMatrix partial_trace(const DensityMatrix& rho,
                            std::span<const std::string> keep);

/// op tensor identity on the remaining factors of the target layout, with
/// the index permutation implied by the factor order.
HermitianOperator embed(const HermitianOperator& op, const SubsystemLayout& target);

/// Applies a (not necessarily Hermitian) operator acting on the given factors
/// to the state; the result is not renormalized.
CVector apply_operator(const PureState& state, const CMatrix& op,
                       std::span<const std::string> labels);
CVector apply_operator(const SubsystemLayout& layout, const CVector& amplitudes,
                       const CMatrix& op, std::span<const std::string> labels);

/// Reduction of an (unnormalized) vector's outer product onto the kept
/// factors; no density-matrix validation.
CMatrix reduced_matrix(const SubsystemLayout& layout, const CVector& amplitudes,
                       std::span<const std::string> keep);

/// Applies a rectangular map (rows = new dim, cols = old dim) to a single
/// factor, resizing it; the result is not renormalized.
std::pair<SubsystemLayout, CVector> map_factor(const SubsystemLayout& layout,
                                               const CVector& amplitudes,
                                               const std::string& label,
                                               const CMatrix& op);

PureState swap_factors(const PureState& state, const std::string& a,
                       const std::string& b);

PureState tensor(const PureState& a, const PureState& b);

/// d^{-1/2} sum_i |i i> on two fresh factors of dimension d.
PureState mes(Eigen::Index d, const std::string& x, const std::string& y);

struct SchmidtDecomposition {
    numerics::RVector coefficients;  // descending, nonnegative
    CMatrix left_vectors;            // columns, on the "left" factor group
    CMatrix right_vectors;           // columns, on the complement
};

SchmidtDecomposition schmidt(const PureState& state,
                             std::span<const std::string> left);

/// Von Neumann entropy in nats. Eigenvalues in [-1e-10, 0) are clamped to 0;
/// anything below that threshold throws.
double entropy(const DensityMatrix& rho);
double entropy_of_eigenvalues(const numerics::RVector& eigenvalues);

/// Relative entropy D(rho||sigma) in nats; returns +infinity when the
/// support of rho is not contained in the support of sigma.
double relative_entropy(const DensityMatrix& rho, const DensityMatrix& sigma);

/// exp(-i H_SE t) applied to the triple's state; norm preserved.
PureState evolve(const Triple& triple, double t);

/// || U_SE|Psi> - (U_SE)^T_A|Psi> || for a state of the two-MES product form
/// Upsilon_{SA1} (x) Upsilon_{EA2}, with the transpose acting on A1 (x) A2 in
/// the computational basis. Layout must be (S, E, A1, A2).
double mirror_check(const CMatrix& u_se, const PureState& psi,
                    double form_tol = 1e-8);

}  // namespace qprobe::hilbert

#endif  // QPROBE_HILBERT_HPP
