#include "qprobe/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

namespace qprobe::hilbert {

namespace {

std::vector<Eigen::Index> layout_dims(const SubsystemLayout& layout) {
    std::vector<Eigen::Index> dims;
    dims.reserve(layout.size());
    for (const auto& f : layout.factors()) dims.push_back(f.dim);
    return dims;
}

// Row-major strides: the first factor varies slowest.
std::vector<Eigen::Index> strides_of(const std::vector<Eigen::Index>& dims) {
    std::vector<Eigen::Index> strides(dims.size(), 1);
    for (std::size_t k = dims.size(); k-- > 1;) {
        strides[k - 1] = strides[k] * dims[k];
    }
    return strides;
}

// map[old_flat] = new_flat for reordering factors as new_order (a permutation
// of old positions).
std::vector<Eigen::Index> permutation_map(const std::vector<Eigen::Index>& dims,
                                          const std::vector<std::size_t>& new_order) {
    const auto old_strides = strides_of(dims);
    std::vector<Eigen::Index> new_dims(dims.size());
    for (std::size_t k = 0; k < new_order.size(); ++k) new_dims[k] = dims[new_order[k]];
    const auto new_strides = strides_of(new_dims);

    Eigen::Index total = 1;
    for (auto d : dims) total *= d;

    std::vector<Eigen::Index> map(static_cast<std::size_t>(total));
    std::vector<Eigen::Index> digits(dims.size());
    for (Eigen::Index flat = 0; flat < total; ++flat) {
        Eigen::Index rem = flat;
        for (std::size_t k = 0; k < dims.size(); ++k) {
            digits[k] = rem / old_strides[k];
            rem %= old_strides[k];
        }
        Eigen::Index out = 0;
        for (std::size_t k = 0; k < new_order.size(); ++k) {
            out += digits[new_order[k]] * new_strides[k];
        }
        map[static_cast<std::size_t>(flat)] = out;
    }
    return map;
}

std::vector<std::size_t> positions_of(const SubsystemLayout& layout,
                                      std::span<const std::string> labels) {
    std::vector<std::size_t> pos;
    pos.reserve(labels.size());
    for (const auto& l : labels) pos.push_back(layout.position(l));
    return pos;
}

// Front group in the order given by `front`, remaining factors after it in
// layout order.
std::vector<std::size_t> front_order(const SubsystemLayout& layout,
                                     std::span<const std::string> front) {
    auto order = positions_of(layout, front);
    std::set<std::size_t> taken(order.begin(), order.end());
    if (taken.size() != order.size()) {
        throw std::invalid_argument("duplicate labels in factor selection");
    }
    for (std::size_t k = 0; k < layout.size(); ++k) {
        if (!taken.contains(k)) order.push_back(k);
    }
    return order;
}

CVector permute_amplitudes(const CVector& amps, const std::vector<Eigen::Index>& map) {
    CVector out(amps.size());
    for (Eigen::Index i = 0; i < amps.size(); ++i) {
        out(map[static_cast<std::size_t>(i)]) = amps(i);
    }
    return out;
}

CVector unpermute_amplitudes(const CVector& amps, const std::vector<Eigen::Index>& map) {
    CVector out(amps.size());
    for (Eigen::Index i = 0; i < amps.size(); ++i) {
        out(i) = amps(map[static_cast<std::size_t>(i)]);
    }
    return out;
}

}  // namespace

SubsystemLayout::SubsystemLayout(std::vector<Factor> factors)
    : factors_(std::move(factors)) {
    std::set<std::string> seen;
    for (const auto& f : factors_) {
        if (f.dim < 1) throw std::invalid_argument("layout: factor dims must be >= 1");
        if (!seen.insert(f.label).second) {
            throw std::invalid_argument("layout: duplicate label " + f.label);
        }
        total_dim_ *= f.dim;
    }
}

bool SubsystemLayout::has(const std::string& label) const {
    return std::any_of(factors_.begin(), factors_.end(),
                       [&](const Factor& f) { return f.label == label; });
}

std::size_t SubsystemLayout::position(const std::string& label) const {
    for (std::size_t k = 0; k < factors_.size(); ++k) {
        if (factors_[k].label == label) return k;
    }
    throw std::invalid_argument("layout: unknown label " + label);
}

Eigen::Index SubsystemLayout::dim_of(const std::string& label) const {
    return factors_[position(label)].dim;
}

Eigen::Index SubsystemLayout::dim_of(std::span<const std::string> labels) const {
    Eigen::Index d = 1;
    for (const auto& l : labels) d *= dim_of(l);
    return d;
}

std::vector<std::string> SubsystemLayout::labels() const {
    std::vector<std::string> out;
    out.reserve(factors_.size());
    for (const auto& f : factors_) out.push_back(f.label);
    return out;
}

std::vector<std::string> SubsystemLayout::complement(
    std::span<const std::string> labels) const {
    std::set<std::string> given(labels.begin(), labels.end());
    for (const auto& l : given) position(l);  // validate
    std::vector<std::string> out;
    for (const auto& f : factors_) {
        if (!given.contains(f.label)) out.push_back(f.label);
    }
    return out;
}

SubsystemLayout SubsystemLayout::sublayout(std::span<const std::string> labels) const {
    std::set<std::string> given(labels.begin(), labels.end());
    std::vector<Factor> kept;
    for (const auto& f : factors_) {
        if (given.contains(f.label)) kept.push_back(f);
    }
    if (kept.size() != given.size()) {
        throw std::invalid_argument("sublayout: unknown label in selection");
    }
    return SubsystemLayout(kept);
}

SubsystemLayout SubsystemLayout::merged(std::span<const std::string> labels,
                                        const std::string& merged_label) const {
    if (labels.empty()) throw std::invalid_argument("merged: empty label set");
    auto pos = positions_of(*this, labels);
    for (std::size_t k = 1; k < pos.size(); ++k) {
        if (pos[k] != pos[k - 1] + 1) {
            throw std::invalid_argument("merged: factors must be contiguous and ordered");
        }
    }
    std::vector<Factor> out;
    Eigen::Index d = 1;
    for (const auto& l : labels) d *= dim_of(l);
    for (std::size_t k = 0; k < factors_.size(); ++k) {
        if (k == pos.front()) {
            out.push_back(Factor{merged_label, d});
        } else if (k > pos.front() && k <= pos.back()) {
            continue;
        } else {
            out.push_back(factors_[k]);
        }
    }
    return SubsystemLayout(out);
}

PureState::PureState(SubsystemLayout layout, CVector amplitudes, double norm_tol)
    : layout_(std::move(layout)), amplitudes_(std::move(amplitudes)) {
    if (amplitudes_.size() != layout_.total_dim()) {
        throw std::invalid_argument("PureState: amplitude count does not match layout");
    }
    if (!amplitudes_.allFinite()) {
        throw std::invalid_argument("PureState: non-finite amplitudes");
    }
    if (std::abs(amplitudes_.norm() - 1.0) > norm_tol) {
        throw std::invalid_argument("PureState: amplitudes are not normalized");
    }
}

DensityMatrix::DensityMatrix(SubsystemLayout layout, CMatrix matrix, double weight,
                             double tol)
    : layout_(std::move(layout)), matrix_(std::move(matrix)), weight_(weight) {
    if (matrix_.rows() != layout_.total_dim() || matrix_.cols() != layout_.total_dim()) {
        throw std::invalid_argument("DensityMatrix: shape does not match layout");
    }
    numerics::require_finite(matrix_, "DensityMatrix");
    if (!numerics::is_hermitian(matrix_, tol)) {
        throw std::invalid_argument("DensityMatrix: not Hermitian");
    }
    if (weight_ < 0.0 || weight_ > 1.0 + tol) {
        throw std::invalid_argument("DensityMatrix: weight outside [0, 1]");
    }
    const double tr = matrix_.trace().real();
    if (std::abs(tr - weight_) > tol * std::max(1.0, std::abs(weight_))) {
        throw std::invalid_argument("DensityMatrix: trace does not match weight");
    }
}

void DensityMatrix::validate(double tol) const {
    const auto eig = numerics::herm_eig(matrix_, tol);
    if (eig.eigenvalues.minCoeff() < -tol) {
        throw std::runtime_error("DensityMatrix: negative eigenvalue");
    }
}

HermitianOperator::HermitianOperator(SubsystemLayout layout_, CMatrix matrix_,
                                     double tol)
    : layout(std::move(layout_)), matrix(std::move(matrix_)) {
    if (matrix.rows() != layout.total_dim() || matrix.cols() != layout.total_dim()) {
        throw std::invalid_argument("HermitianOperator: shape does not match layout");
    }
    numerics::require_finite(matrix, "HermitianOperator");
    if (!numerics::is_hermitian(matrix, tol)) {
        throw std::invalid_argument("HermitianOperator: not Hermitian");
    }
}

Triple::Triple(Eigen::Index d_e_, PureState psi_, HermitianOperator h_se_)
    : d_e(d_e_), psi(std::move(psi_)), h_se(std::move(h_se_)) {
    if (!psi.layout().has("S") || !psi.layout().has("E")) {
        throw std::invalid_argument("Triple: state must carry S and E factors");
    }
    if (psi.layout().dim_of("E") != d_e) {
        throw std::invalid_argument("Triple: E dimension does not match d_e");
    }
    for (const auto& l : h_se.layout.labels()) {
        if (l != "S" && l != "E") {
            throw std::invalid_argument("Triple: h_se must be supported on S and E only");
        }
    }
    // Normalize the stored Hamiltonian to the (S, E) sublayout.
    const std::vector<std::string> se = {"S", "E"};
    h_se = embed(h_se, psi.layout().sublayout(se));
}

DensityMatrix partial_trace(const PureState& state,
                            std::span<const std::string> keep) {
    const auto& layout = state.layout();
    auto kept_in_order = layout.sublayout(keep).labels();
    const auto order = front_order(layout, kept_in_order);
    const auto map = permutation_map(layout_dims(layout), order);
    const CVector permuted = permute_amplitudes(state.amplitudes(), map);

    const Eigen::Index keep_dim = layout.dim_of(kept_in_order);
    const Eigen::Index rest_dim = layout.total_dim() / keep_dim;
    Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>
        m(permuted.data(), keep_dim, rest_dim);
    CMatrix rho = m * m.adjoint();
    rho = (rho + rho.adjoint()) / 2.0;
    return DensityMatrix(layout.sublayout(keep), std::move(rho));
}

DensityMatrix partial_trace(const DensityMatrix& rho,
                            std::span<const std::string> keep) {
    const auto& layout = rho.layout();
    auto kept_in_order = layout.sublayout(keep).labels();
    const auto order = front_order(layout, kept_in_order);
    const auto map = permutation_map(layout_dims(layout), order);

    const Eigen::Index keep_dim = layout.dim_of(kept_in_order);
    const Eigen::Index rest_dim = layout.total_dim() / keep_dim;
    const Eigen::Index total = layout.total_dim();

    // inverse map: permuted index -> original index
    std::vector<Eigen::Index> inv(static_cast<std::size_t>(total));
    for (Eigen::Index i = 0; i < total; ++i) inv[static_cast<std::size_t>(map[i])] = i;

    CMatrix out = CMatrix::Zero(keep_dim, keep_dim);
    for (Eigen::Index a = 0; a < keep_dim; ++a) {
        for (Eigen::Index b = 0; b < keep_dim; ++b) {
            Complex acc = 0.0;
            for (Eigen::Index t = 0; t < rest_dim; ++t) {
                acc += rho.matrix()(inv[static_cast<std::size_t>(a * rest_dim + t)],
                                    inv[static_cast<std::size_t>(b * rest_dim + t)]);
            }
            out(a, b) = acc;
        }
    }
    out = (out + out.adjoint()) / 2.0;
    return DensityMatrix(layout.sublayout(keep), std::move(out), rho.weight());
}

HermitianOperator embed(const HermitianOperator& op, const SubsystemLayout& target) {
    for (const auto& l : op.layout.labels()) {
        if (!target.has(l)) {
            throw std::invalid_argument("embed: target layout lacks label " + l);
        }
        if (target.dim_of(l) != op.layout.dim_of(l)) {
            throw std::invalid_argument("embed: dimension mismatch for label " + l);
        }
    }
    if (target.total_dim() > numerics::kMaxDenseDim) {
        throw std::length_error("embed: target dimension exceeds dense limit");
    }

    const auto op_labels = op.layout.labels();
    const auto order = front_order(target, op_labels);
    const auto map = permutation_map(layout_dims(target), order);

    // In the permuted frame the operator is op (x) I; map back both indices.
    const Eigen::Index op_dim = op.layout.total_dim();
    const Eigen::Index rest_dim = target.total_dim() / op_dim;
    const Eigen::Index total = target.total_dim();
    std::vector<Eigen::Index> inv(static_cast<std::size_t>(total));
    for (Eigen::Index i = 0; i < total; ++i) inv[static_cast<std::size_t>(map[i])] = i;

    CMatrix out = CMatrix::Zero(total, total);
    for (Eigen::Index r = 0; r < op_dim; ++r) {
        for (Eigen::Index c = 0; c < op_dim; ++c) {
            const Complex v = op.matrix(r, c);
            if (v == Complex(0.0, 0.0)) continue;
            for (Eigen::Index t = 0; t < rest_dim; ++t) {
                out(inv[static_cast<std::size_t>(r * rest_dim + t)],
                    inv[static_cast<std::size_t>(c * rest_dim + t)]) = v;
            }
        }
    }
    return HermitianOperator(target, std::move(out));
}

CVector apply_operator(const SubsystemLayout& layout, const CVector& amplitudes,
                       const CMatrix& op, std::span<const std::string> labels) {
    const Eigen::Index sub_dim = layout.dim_of(labels);
    if (op.rows() != sub_dim || op.cols() != sub_dim) {
        throw std::invalid_argument("apply_operator: operator shape mismatch");
    }
    std::vector<std::string> front(labels.begin(), labels.end());
    const auto order = front_order(layout, front);
    const auto map = permutation_map(layout_dims(layout), order);
    const CVector permuted = permute_amplitudes(amplitudes, map);

    const Eigen::Index rest_dim = layout.total_dim() / sub_dim;
    Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>
        m(permuted.data(), sub_dim, rest_dim);
    Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> applied =
        op * m;
    const Eigen::Map<const CVector> flat(applied.data(), layout.total_dim());
    return unpermute_amplitudes(flat, map);
}

CVector apply_operator(const PureState& state, const CMatrix& op,
                       std::span<const std::string> labels) {
    return apply_operator(state.layout(), state.amplitudes(), op, labels);
}

CMatrix reduced_matrix(const SubsystemLayout& layout, const CVector& amplitudes,
                       std::span<const std::string> keep) {
    auto kept_in_order = layout.sublayout(keep).labels();
    const auto order = front_order(layout, kept_in_order);
    const auto map = permutation_map(layout_dims(layout), order);
    const CVector permuted = permute_amplitudes(amplitudes, map);

    const Eigen::Index keep_dim = layout.dim_of(kept_in_order);
    const Eigen::Index rest_dim = layout.total_dim() / keep_dim;
    Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>
        m(permuted.data(), keep_dim, rest_dim);
    return m * m.adjoint();
}

std::pair<SubsystemLayout, CVector> map_factor(const SubsystemLayout& layout,
                                               const CVector& amplitudes,
                                               const std::string& label,
                                               const CMatrix& op) {
    const std::size_t pos = layout.position(label);
    const Eigen::Index d_old = layout.dim_of(label);
    if (op.cols() != d_old) {
        throw std::invalid_argument("map_factor: operator column count mismatch");
    }
    const Eigen::Index d_new = op.rows();

    const std::vector<std::string> front = {label};
    const auto order = front_order(layout, front);
    const auto map = permutation_map(layout_dims(layout), order);
    const CVector permuted = permute_amplitudes(amplitudes, map);

    const Eigen::Index rest_dim = layout.total_dim() / d_old;
    Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>
        m(permuted.data(), d_old, rest_dim);
    Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> applied =
        op * m;

    std::vector<Factor> new_factors = layout.factors();
    new_factors[pos].dim = d_new;
    SubsystemLayout new_layout(new_factors);

    // permutation map for the resized layout, to undo the front ordering
    const auto new_map = permutation_map(layout_dims(new_layout), order);
    const Eigen::Map<const CVector> flat(applied.data(), new_layout.total_dim());
    return {new_layout, unpermute_amplitudes(flat, new_map)};
}

PureState swap_factors(const PureState& state, const std::string& a,
                       const std::string& b) {
    const auto& layout = state.layout();
    if (layout.dim_of(a) != layout.dim_of(b)) {
        throw std::invalid_argument("swap_factors: factor dimensions differ");
    }
    std::vector<std::size_t> order(layout.size());
    std::iota(order.begin(), order.end(), 0);
    std::swap(order[layout.position(a)], order[layout.position(b)]);
    const auto map = permutation_map(layout_dims(layout), order);
    // Exchanging the contents of two equal-dimension factors is the inverse
    // of exchanging their positions, and the two coincide here.
    return PureState(layout, permute_amplitudes(state.amplitudes(), map));
}

PureState tensor(const PureState& a, const PureState& b) {
    std::vector<Factor> factors = a.layout().factors();
    for (const auto& f : b.layout().factors()) factors.push_back(f);
    SubsystemLayout layout(std::move(factors));
    CVector amps(layout.total_dim());
    for (Eigen::Index i = 0; i < a.dim(); ++i) {
        for (Eigen::Index j = 0; j < b.dim(); ++j) {
            amps(i * b.dim() + j) = a.amplitudes()(i) * b.amplitudes()(j);
        }
    }
    return PureState(std::move(layout), std::move(amps));
}

PureState mes(Eigen::Index d, const std::string& x, const std::string& y) {
    if (d < 1) throw std::invalid_argument("mes: dimension must be >= 1");
    SubsystemLayout layout({Factor{x, d}, Factor{y, d}});
    CVector amps = CVector::Zero(d * d);
    const double c = 1.0 / std::sqrt(static_cast<double>(d));
    for (Eigen::Index i = 0; i < d; ++i) amps(i * d + i) = c;
    return PureState(std::move(layout), std::move(amps));
}

SchmidtDecomposition schmidt(const PureState& state,
                             std::span<const std::string> left) {
    const auto& layout = state.layout();
    if (left.empty() || left.size() >= layout.size()) {
        throw std::invalid_argument("schmidt: left set must be a nonempty proper subset");
    }
    auto left_in_order = layout.sublayout(left).labels();
    const auto order = front_order(layout, left_in_order);
    const auto map = permutation_map(layout_dims(layout), order);
    const CVector permuted = permute_amplitudes(state.amplitudes(), map);

    const Eigen::Index left_dim = layout.dim_of(left_in_order);
    const Eigen::Index right_dim = layout.total_dim() / left_dim;
    Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>
        m(permuted.data(), left_dim, right_dim);
    const auto s = numerics::svd(CMatrix(m));
    const Eigen::Index k = std::min(left_dim, right_dim);
    return SchmidtDecomposition{s.singular_values.head(k), s.u.leftCols(k),
                                s.v.conjugate().leftCols(k)};
}

double entropy_of_eigenvalues(const numerics::RVector& eigenvalues) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
        const double l = eigenvalues(i);
        if (l < -1e-10) {
            throw std::runtime_error("entropy: eigenvalue below -1e-10, invalid state");
        }
        if (l > 0.0) s -= l * std::log(l);
    }
    return s;
}

double entropy(const DensityMatrix& rho) {
    const auto eig = numerics::herm_eig(rho.matrix());
    return entropy_of_eigenvalues(eig.eigenvalues);
}

double relative_entropy(const DensityMatrix& rho, const DensityMatrix& sigma) {
    if (rho.dim() != sigma.dim()) {
        throw std::invalid_argument("relative_entropy: dimension mismatch");
    }
    const auto sig = numerics::herm_eig(sigma.matrix());
    const double lmax = std::max(sig.eigenvalues.maxCoeff(), 0.0);
    const double support_tol = 1e-12 * std::max(lmax, 1.0);

    double outside_mass = 0.0;
    double tr_rho_log_sigma = 0.0;
    for (Eigen::Index j = 0; j < sig.eigenvalues.size(); ++j) {
        const CVector v = sig.eigenvectors.col(j);
        const double p = std::real(v.adjoint() * rho.matrix() * v);
        if (sig.eigenvalues(j) <= support_tol) {
            outside_mass += std::max(p, 0.0);
        } else {
            tr_rho_log_sigma += p * std::log(sig.eigenvalues(j));
        }
    }
    if (outside_mass > 1e-10) {
        return std::numeric_limits<double>::infinity();
    }
    const auto re = numerics::herm_eig(rho.matrix());
    const double tr_rho_log_rho = -entropy_of_eigenvalues(re.eigenvalues);
    return tr_rho_log_rho - tr_rho_log_sigma;
}

PureState evolve(const Triple& triple, double t) {
    if (!std::isfinite(t)) throw std::invalid_argument("evolve: time must be finite");
    if (t == 0.0) return triple.psi;
    const CMatrix u = numerics::unitary_evolution(triple.h_se.matrix, t);
    const std::vector<std::string> se = {"S", "E"};
    return PureState(triple.psi.layout(), apply_operator(triple.psi, u, se));
}

double mirror_check(const CMatrix& u_se, const PureState& psi, double form_tol) {
    const auto& layout = psi.layout();
    const std::vector<std::string> expect = {"S", "E", "A1", "A2"};
    for (const auto& l : expect) {
        if (!layout.has(l)) {
            throw std::invalid_argument("mirror_check: layout must carry S,E,A1,A2");
        }
    }
    const Eigen::Index d_s = layout.dim_of("S");
    const Eigen::Index d_e = layout.dim_of("E");
    if (layout.dim_of("A1") != d_s || layout.dim_of("A2") != d_e) {
        throw std::invalid_argument("mirror_check: ancilla dimensions must mirror S,E");
    }

    // The state must be the two-MES product in the computational basis.
    CVector ref = CVector::Zero(layout.total_dim());
    const double c = 1.0 / std::sqrt(static_cast<double>(d_s * d_e));
    const std::vector<std::string> se = {"S", "E"};
    {
        const auto dims = layout_dims(layout);
        const auto strides = strides_of(dims);
        const auto pS = layout.position("S");
        const auto pE = layout.position("E");
        const auto pA1 = layout.position("A1");
        const auto pA2 = layout.position("A2");
        for (Eigen::Index s = 0; s < d_s; ++s) {
            for (Eigen::Index e = 0; e < d_e; ++e) {
                const Eigen::Index idx = s * strides[pS] + e * strides[pE] +
                                         s * strides[pA1] + e * strides[pA2];
                ref(idx) = c;
            }
        }
    }
    const Complex overlap = ref.adjoint() * psi.amplitudes();
    if (1.0 - std::abs(overlap) > form_tol) {
        throw std::invalid_argument("mirror_check: state is not of two-MES product form");
    }

    const std::vector<std::string> a_labels = {"A1", "A2"};
    const CVector lhs = apply_operator(psi, u_se, se);
    const CVector rhs = apply_operator(psi, u_se.transpose(), a_labels);
    return (lhs - rhs).norm();
}

}  // namespace qprobe::hilbert
