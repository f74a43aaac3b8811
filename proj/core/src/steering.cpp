#include "qprobe/steering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qprobe::steering {

namespace {

const std::vector<std::string> kS = {"S"};
const std::vector<std::string> kSE = {"S", "E"};

std::vector<std::string> ancilla_labels(const hilbert::SubsystemLayout& layout) {
    std::vector<std::string> out;
    for (const auto& f : layout.factors()) {
        if (f.label != "S" && f.label != "E") out.push_back(f.label);
    }
    return out;
}

// rho_SA with all ancilla factors merged into one factor "A".
DensityMatrix merge_ancillas(const DensityMatrix& rho_sa) {
    const auto anc = ancilla_labels(rho_sa.layout());
    if (anc.size() == 1 && anc[0] == "A") return rho_sa;
    if (anc.empty()) {
        throw std::invalid_argument("expected at least one ancilla factor");
    }
    return DensityMatrix(rho_sa.layout().merged(anc, "A"), rho_sa.matrix(),
                         rho_sa.weight());
}

}  // namespace

void SteeringConfig::validate() const {
    if (delta_t <= 0.0) throw std::invalid_argument("steering: delta_t must be > 0");
    if (samples_per_window < 2) {
        throw std::invalid_argument("steering: samples_per_window must be >= 2");
    }
    if (tol_zero <= 0.0) throw std::invalid_argument("steering: tol_zero must be > 0");
    if (max_rounds < 1) throw std::invalid_argument("steering: max_rounds must be >= 1");
}

CMatrix Split::a1_isometry() const {
    CMatrix out(w.rows(), d_a1);
    for (Eigen::Index i = 0; i < d_a1; ++i) out.col(i) = w.col(i * r);
    return out;
}

CMatrix Split::a2_isometry() const { return w.leftCols(r); }

double delta_e_sa(const DensityMatrix& rho_sa) {
    const auto& layout = rho_sa.layout();
    const Eigen::Index d_s = layout.dim_of("S");
    const auto anc = ancilla_labels(layout);
    const double s_sa = hilbert::entropy(rho_sa);
    const double s_a = anc.empty() ? 0.0 : hilbert::entropy(partial_trace(rho_sa, anc));
    return s_sa - s_a + std::log(static_cast<double>(d_s));
}

double delta_e_relative_form(const DensityMatrix& rho_se) {
    const auto& layout = rho_se.layout();
    const Eigen::Index d_s = layout.dim_of("S");
    const std::vector<std::string> e = {"E"};
    const DensityMatrix rho_s = partial_trace(rho_se, kS);
    const DensityMatrix rho_e = partial_trace(rho_se, e);

    const DensityMatrix product(rho_se.layout(),
                                numerics::kron(rho_s.matrix(), rho_e.matrix()));
    const DensityMatrix mixed(rho_s.layout(),
                              CMatrix::Identity(d_s, d_s) / static_cast<double>(d_s));
    return hilbert::relative_entropy(rho_se, product) +
           hilbert::relative_entropy(rho_s, mixed);
}

double delta_e_of_pure(const PureState& psi) {
    // For a pure SEA state, S(rho_SA) = S(rho_E) and S(rho_A) = S(rho_SE);
    // both complements stay small however large the ancilla block grows.
    const auto& layout = psi.layout();
    const Eigen::Index d_s = layout.dim_of("S");
    const std::vector<std::string> e = {"E"};
    const double s_e = hilbert::entropy(partial_trace(psi, e));
    const double s_se = hilbert::entropy(partial_trace(psi, kSE));
    return s_e - s_se + std::log(static_cast<double>(d_s));
}

double delta_e_swap_increment(const PureState& psi) {
    const Eigen::Index d_s = psi.layout().dim_of("S");
    const PureState in = tensor(psi, hilbert::mes(d_s, "__a1", "__a2"));
    const PureState out = swap_factors(in, "S", "__a1");
    const double e_in = hilbert::entropy(partial_trace(in, kSE));
    const double e_out = hilbert::entropy(partial_trace(out, kSE));
    return e_out - e_in;
}

FilterResult local_filter(const PureState& state,
                          std::span<const std::string> target, double rank_tol) {
    if (target.empty()) throw std::invalid_argument("local_filter: empty target");
    const DensityMatrix rho_a = partial_trace(state, target);
    const auto eig = numerics::herm_eig(rho_a.matrix());

    double lambda_min = std::numeric_limits<double>::infinity();
    Eigen::Index rank = 0;
    for (Eigen::Index k = 0; k < eig.eigenvalues.size(); ++k) {
        const double l = eig.eigenvalues(k);
        if (l > rank_tol) {
            ++rank;
            lambda_min = std::min(lambda_min, l);
        }
    }
    if (rank == 0) throw std::runtime_error("local_filter: reduction has empty support");

    // F = sqrt(lambda_min) * rho_A^{-1/2} on the support, 0 outside.
    CVector diag = CVector::Zero(eig.eigenvalues.size());
    for (Eigen::Index k = 0; k < eig.eigenvalues.size(); ++k) {
        const double l = eig.eigenvalues(k);
        if (l > rank_tol) diag(k) = std::sqrt(lambda_min / l);
    }
    const CMatrix f = eig.eigenvectors * diag.asDiagonal() * eig.eigenvectors.adjoint();

    CVector amps = hilbert::apply_operator(state, f, target);
    const double norm = amps.norm();
    amps /= norm;
    return FilterResult{PureState(state.layout(), std::move(amps)),
                        lambda_min * static_cast<double>(rank), rank};
}

PureState compress_ancilla(const PureState& state, double rank_tol) {
    const auto anc = ancilla_labels(state.layout());
    if (anc.empty()) return state;

    const DensityMatrix rho_a = partial_trace(state, anc);
    const auto eig = numerics::herm_eig(rho_a.matrix());
    const Eigen::Index d_a = rho_a.dim();

    std::vector<Eigen::Index> kept;  // descending eigenvalue order
    for (Eigen::Index k = d_a; k-- > 0;) {
        if (eig.eigenvalues(k) > rank_tol) kept.push_back(k);
    }
    const Eigen::Index r = static_cast<Eigen::Index>(kept.size());
    CMatrix w(d_a, r);
    for (Eigen::Index k = 0; k < r; ++k) {
        w.col(k) = eig.eigenvectors.col(kept[static_cast<std::size_t>(k)]);
    }

    // Ancilla factors are contiguous at the end, so the amplitudes reshape
    // directly into (SE, A).
    const Eigen::Index d_se = state.layout().total_dim() / d_a;
    Eigen::Map<const Eigen::Matrix<numerics::Complex, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>
        m(state.amplitudes().data(), d_se, d_a);
    Eigen::Matrix<numerics::Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
        compressed = m * w.conjugate();
    Eigen::Map<const CVector> flat(compressed.data(), d_se * r);
    CVector amps = flat;
    amps /= amps.norm();

    std::vector<hilbert::Factor> factors;
    for (const auto& f : state.layout().factors()) {
        if (f.label == "S" || f.label == "E") factors.push_back(f);
    }
    factors.push_back(hilbert::Factor{"A", r});
    return PureState(hilbert::SubsystemLayout(std::move(factors)), std::move(amps));
}

RoundResult steering_round(const PureState& state, const HermitianOperator& h_se,
                           const SteeringConfig& cfg, int round_index, double t_start,
                           scenarios::RngStream* mc_rng) {
    cfg.validate();
    const Eigen::Index d_s = state.layout().dim_of("S");

    // Step 1: fresh MES pair appended at the end, swap S into its first half.
    const std::string a1 = "A" + std::to_string(2 * round_index - 1);
    const std::string a2 = "A" + std::to_string(2 * round_index);
    PureState st = swap_factors(tensor(state, hilbert::mes(d_s, a1, a2)), "S", a1);

    // Step 2: local filtering on the whole ancilla block.
    const auto anc = ancilla_labels(st.layout());
    FilterResult filtered = local_filter(st, anc);
    if (mc_rng != nullptr && cfg.mc_filtering) {
        if (mc_rng->uniform() >= filtered.success_prob) {
            RoundRecord rec;
            rec.round_index = round_index;
            rec.swap_time = t_start;
            rec.filter_success_prob = filtered.success_prob;
            rec.rank_rho_a = filtered.rank;
            return RoundResult{st, std::move(rec), false, true, t_start};
        }
    }
    PureState current = cfg.compress_ancilla ? compress_ancilla(filtered.state)
                                             : filtered.state;

    // Step 3: sample Delta E_SA over [t_C, t_C + delta_t].
    const auto eig = numerics::herm_eig(h_se.matrix);
    const int n = cfg.samples_per_window;
    const double dt = cfg.delta_t / static_cast<double>(n - 1);
    const CMatrix u_step = numerics::unitary_evolution(eig, dt);

    RoundRecord rec;
    rec.round_index = round_index;
    rec.swap_time = t_start;
    rec.filter_success_prob = filtered.success_prob;
    rec.rank_rho_a = filtered.rank;

    PureState walker = current;
    double max_de = 0.0;
    for (int k = 0; k < n; ++k) {
        const double de = delta_e_of_pure(walker);
        rec.delta_e_series.emplace_back(t_start + k * dt, de);
        max_de = std::max(max_de, de);
        if (k + 1 < n) {
            walker = PureState(walker.layout(),
                               hilbert::apply_operator(walker, u_step, kSE));
        }
    }
    rec.epsilon_c = 0.5 * max_de;

    // Step 4: halt on a flat window, otherwise evolve to the first sampled
    // time at or above epsilon_C.
    if (rec.epsilon_c <= cfg.tol_zero) {
        return RoundResult{std::move(current), std::move(rec), true, false, t_start};
    }
    for (const auto& [t, de] : rec.delta_e_series) {
        if (de >= rec.epsilon_c) {
            PureState out =
                (t == t_start)
                    ? current
                    : PureState(current.layout(),
                                hilbert::apply_operator(
                                    current,
                                    numerics::unitary_evolution(eig, t - t_start), kSE));
            return RoundResult{std::move(out), std::move(rec), false, false, t};
        }
    }
    // Unreachable when epsilon_C = max/2 over the same samples; kept as a
    // guard with an extended search window.
    PureState extended = walker;
    for (int k = n; k <= 10 * (n - 1); ++k) {
        extended = PureState(extended.layout(),
                             hilbert::apply_operator(extended, u_step, kSE));
        const double t = t_start + k * dt;
        if (delta_e_of_pure(extended) >= rec.epsilon_c) {
            return RoundResult{std::move(extended), std::move(rec), false, false, t};
        }
    }
    throw std::runtime_error(
        "steering_round: Delta E never reached epsilon_C within 10 windows; "
        "sampling density too low");
}

SteeringResult run_steering(const Triple& triple, const SteeringConfig& cfg) {
    cfg.validate();
    scenarios::RngStream mc_rng(cfg.rng_seed, "mc_filter");
    constexpr int kMaxAttempts = 100000;

    SteeringTrace trace;
    for (int attempt = 1; attempt <= kMaxAttempts; ++attempt) {
        trace.rounds.clear();
        trace.attempts = attempt;
        PureState state = triple.psi;
        double t = 0.0;
        bool aborted = false;

        for (int c = 1; c <= cfg.max_rounds; ++c) {
            RoundResult rr = steering_round(state, triple.h_se, cfg, c, t,
                                            cfg.mc_filtering ? &mc_rng : nullptr);
            if (rr.aborted) {
                aborted = true;
                break;
            }
            trace.rounds.push_back(std::move(rr.record));
            if (rr.halted) {
                trace.halted_at = c;
                trace.halt_time = rr.t_end;
                return SteeringResult{std::move(rr.state), std::move(trace)};
            }
            state = std::move(rr.state);
            t = rr.t_end;
        }
        if (!aborted) {
            throw std::runtime_error(
                "run_steering: max_rounds exceeded without halt; tol_zero may be "
                "too small for the accumulated numerical error");
        }
    }
    throw std::runtime_error("run_steering: Monte-Carlo filtering never succeeded");
}

Split find_split(const DensityMatrix& rho_sa_in, double tol) {
    const DensityMatrix rho_sa = merge_ancillas(rho_sa_in);
    const Eigen::Index d_s = rho_sa.layout().dim_of("S");
    const Eigen::Index d_a = rho_sa.layout().dim_of("A");
    const CMatrix& rho = rho_sa.matrix();

    // Structural gate; the caller compares the exact deviation against its
    // own tolerance.
    const DensityMatrix rho_s = partial_trace(rho_sa, kS);
    const double dev_s =
        (rho_s.matrix() - CMatrix::Identity(d_s, d_s) / static_cast<double>(d_s))
            .norm();
    if (dev_s > std::max(tol, 1e-4)) {
        throw std::runtime_error("find_split: rho_S is not maximally mixed");
    }

    auto block = [&](Eigen::Index i, Eigen::Index j) {
        return CMatrix(rho.block(i * d_a, j * d_a, d_a, d_a));
    };

    // rank and A2 basis from the (0,0) matrix-unit block
    const CMatrix m0 = block(0, 0);
    const auto eig = numerics::herm_eig((m0 + m0.adjoint()) / 2.0);
    const double lmax = eig.eigenvalues.maxCoeff();
    if (lmax <= 0.0) {
        throw std::runtime_error("find_split: empty support in the (0,0) block");
    }
    std::vector<Eigen::Index> kept;
    for (Eigen::Index k = d_a; k-- > 0;) {
        if (eig.eigenvalues(k) > 0.5 * lmax) kept.push_back(k);
    }
    const Eigen::Index r = static_cast<Eigen::Index>(kept.size());
    if (d_s * r > d_a) {
        throw std::runtime_error("find_split: support too small for an A1/A2 split");
    }

    // Transport the A2 basis through the cross blocks <i|rho|0>.
    constexpr double kClosureTol = 1e-6;
    CMatrix w(d_a, d_s * r);
    for (Eigen::Index k = 0; k < r; ++k) {
        w.col(0 * r + k) = eig.eigenvectors.col(kept[static_cast<std::size_t>(k)]);
    }
    const double expected = 1.0 / static_cast<double>(d_s * r);
    for (Eigen::Index i = 1; i < d_s; ++i) {
        const CMatrix bi0 = block(i, 0);
        for (Eigen::Index k = 0; k < r; ++k) {
            CVector raw = bi0 * w.col(k);
            const double norm = raw.norm();
            if (std::abs(norm - expected) > kClosureTol * std::max(1.0, expected)) {
                throw std::runtime_error(
                    "find_split: matrix-unit transport failed the closure test");
            }
            w.col(i * r + k) = raw / norm;
        }
    }
    const CMatrix gram = w.adjoint() * w;
    if ((gram - CMatrix::Identity(d_s * r, d_s * r)).norm() > kClosureTol) {
        throw std::runtime_error("find_split: transported basis is not orthonormal");
    }
    return Split{std::move(w), d_s, r};
}

MEReport me_condition_check(const DensityMatrix& rho_sa_in, double tol) {
    if (tol <= 0.0) throw std::invalid_argument("me_condition_check: tol must be > 0");
    const DensityMatrix rho_sa = merge_ancillas(rho_sa_in);
    const Eigen::Index d_s = rho_sa.layout().dim_of("S");

    MEReport report;
    const DensityMatrix rho_s = partial_trace(rho_sa, kS);
    report.rho_s_deviation =
        (rho_s.matrix() - CMatrix::Identity(d_s, d_s) / static_cast<double>(d_s))
            .norm();

    try {
        report.split = find_split(rho_sa, tol);
    } catch (const std::runtime_error&) {
        report.passed = false;
        report.factorization_deviation = std::numeric_limits<double>::infinity();
        report.projector_deviation = std::numeric_limits<double>::infinity();
        return report;
    }
    const Eigen::Index r = report.split.r;
    report.r = r;

    // Compress rho_SA into the split frame and compare against
    // Upsilon_SA1 (x) rho_A2 there; mass outside the frame counts toward the
    // deviation.
    const CMatrix t_iso = numerics::kron(CMatrix::Identity(d_s, d_s), report.split.w);
    const CMatrix rho_c = t_iso.adjoint() * rho_sa.matrix() * t_iso;

    // rho_A2 from the compressed state: trace out S and A1.
    CMatrix rho_a2 = CMatrix::Zero(r, r);
    for (Eigen::Index k = 0; k < r; ++k) {
        for (Eigen::Index k2 = 0; k2 < r; ++k2) {
            numerics::Complex acc = 0.0;
            for (Eigen::Index s = 0; s < d_s; ++s) {
                for (Eigen::Index i = 0; i < d_s; ++i) {
                    const Eigen::Index row = s * d_s * r + i * r + k;
                    const Eigen::Index col = s * d_s * r + i * r + k2;
                    acc += rho_c(row, col);
                }
            }
            rho_a2(k, k2) = acc;
        }
    }
    rho_a2 = (rho_a2 + rho_a2.adjoint()) / 2.0;
    report.projector_deviation =
        (rho_a2 - CMatrix::Identity(r, r) / static_cast<double>(r)).norm();

    CVector upsilon = CVector::Zero(d_s * d_s);
    for (Eigen::Index i = 0; i < d_s; ++i) {
        upsilon(i * d_s + i) = 1.0 / std::sqrt(static_cast<double>(d_s));
    }
    const CMatrix sigma = numerics::kron(CMatrix(upsilon * upsilon.adjoint()), rho_a2);

    const double rho_norm2 = rho_sa.matrix().squaredNorm();
    const double rho_c_norm2 = rho_c.squaredNorm();
    const double leak2 = std::max(rho_norm2 - rho_c_norm2, 0.0);
    report.factorization_deviation =
        std::sqrt((rho_c - sigma).squaredNorm() + leak2);

    report.passed = report.rho_s_deviation <= tol &&
                    report.factorization_deviation <= tol &&
                    report.projector_deviation <= tol;
    return report;
}

CMatrix mirror_map(const CMatrix& n_sa, const PureState& psi, double form_tol) {
    const auto& layout = psi.layout();
    for (const char* l : {"S", "E", "A1", "A2"}) {
        if (!layout.has(l)) {
            throw std::invalid_argument("mirror_map: layout must carry S,E,A1,A2");
        }
    }
    const Eigen::Index d_s = layout.dim_of("S");
    const Eigen::Index d_e = layout.dim_of("E");
    const Eigen::Index d_a1 = layout.dim_of("A1");
    const Eigen::Index d_a2 = layout.dim_of("A2");
    if (d_a1 != d_s) {
        throw std::invalid_argument("mirror_map: dim A1 must equal dim S");
    }
    const auto aprime = ancilla_labels(layout);
    const Eigen::Index d_ap = layout.dim_of(aprime);
    if (n_sa.rows() != d_s * d_ap || n_sa.cols() != d_s * d_ap) {
        throw std::invalid_argument("mirror_map: operator must act on S (x) A'");
    }

    // Form check part 1: the state factorizes as Upsilon_SA1 (x) rest.
    const std::vector<std::string> sa1 = {"S", "A1"};
    CVector upsilon = CVector::Zero(d_s * d_s);
    for (Eigen::Index i = 0; i < d_s; ++i) {
        upsilon(i * d_s + i) = 1.0 / std::sqrt(static_cast<double>(d_s));
    }
    const auto schmidt_sa1 = hilbert::schmidt(psi, sa1);
    if (schmidt_sa1.coefficients(0) < 1.0 - form_tol ||
        std::abs(std::abs((schmidt_sa1.left_vectors.col(0).adjoint() * upsilon)(0)) -
                 1.0) > form_tol) {
        throw std::invalid_argument("mirror_map: state is not Upsilon_SA1 (x) rest");
    }
    // rest lives on (E, A2, pads) in layout order
    CVector rest = schmidt_sa1.right_vectors.col(0);

    // Form check part 2: rest = Phi_EA2 (x) pad state, Phi maximally
    // entangled on a subspace.
    const Eigen::Index d_pad = d_ap / (d_a1 * d_a2);
    CVector phi;      // on E (x) A2
    CVector pad;      // on the remaining ancilla factors
    if (d_pad == 1) {
        phi = rest;
        pad = CVector::Ones(1);
    } else {
        Eigen::Map<const Eigen::Matrix<numerics::Complex, Eigen::Dynamic,
                                       Eigen::Dynamic, Eigen::RowMajor>>
            m(rest.data(), d_e * d_a2, d_pad);
        const auto s = numerics::svd(CMatrix(m));
        if (s.singular_values(0) < 1.0 - form_tol) {
            throw std::invalid_argument("mirror_map: pad factor is entangled");
        }
        phi = s.u.col(0);
        pad = s.v.conjugate().col(0);
    }

    // A2 support basis and Schmidt partners f_k on E.
    Eigen::Map<const Eigen::Matrix<numerics::Complex, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>
        phi_m(phi.data(), d_e, d_a2);
    // Tr_E |phi><phi| has entries sum_e phi(e,k) conj(phi(e,k')).
    CMatrix sigma_a2 = phi_m.transpose() * phi_m.conjugate();
    sigma_a2 = (sigma_a2 + sigma_a2.adjoint()) / 2.0;
    const auto eig_a2 = numerics::herm_eig(sigma_a2);
    const double lmax = eig_a2.eigenvalues.maxCoeff();
    std::vector<Eigen::Index> kept;
    for (Eigen::Index k = d_a2; k-- > 0;) {
        if (eig_a2.eigenvalues(k) > 0.5 * lmax) kept.push_back(k);
    }
    const Eigen::Index r = static_cast<Eigen::Index>(kept.size());
    const double proj_dev =
        std::abs(lmax - 1.0 / static_cast<double>(r)) * static_cast<double>(r);
    if (proj_dev > std::sqrt(form_tol)) {
        throw std::invalid_argument("mirror_map: A2 reduction is not a projector");
    }

    CMatrix b(d_a2, r);  // A2 support basis
    for (Eigen::Index k = 0; k < r; ++k) {
        b.col(k) = eig_a2.eigenvectors.col(kept[static_cast<std::size_t>(k)]);
    }
    const double root_r = std::sqrt(static_cast<double>(r));
    CMatrix f(d_e, r);  // Schmidt partners on E, f_k = sqrt(r) (I (x) <b_k|) phi
    for (Eigen::Index k = 0; k < r; ++k) {
        f.col(k) = root_r * (phi_m * b.col(k).conjugate());
    }

    // (N (x) I_E) |psi>, then contract with <i|_S <f_k|_E. Flat indices are
    // (s, e, a') with the canonical (S, E, A1, A2, pads...) factor order.
    if (layout.position("S") != 0 || layout.position("E") != 1 ||
        layout.position("A1") != 2 || layout.position("A2") != 3) {
        throw std::invalid_argument(
            "mirror_map: layout must be (S, E, A1, A2, pads...)");
    }
    std::vector<std::string> op_labels = {"S"};
    op_labels.insert(op_labels.end(), aprime.begin(), aprime.end());
    const CVector n_psi = hilbert::apply_operator(psi, n_sa, op_labels);

    const double scale = std::sqrt(static_cast<double>(d_s * r));
    CMatrix result = CMatrix::Zero(d_ap, d_ap);
    for (Eigen::Index i = 0; i < d_s; ++i) {
        for (Eigen::Index k = 0; k < r; ++k) {
            // column index: |i>_A1 (x) |b_k>_A2 (x) |pad>
            CVector dom = CVector::Zero(d_ap);
            for (Eigen::Index a2 = 0; a2 < d_a2; ++a2) {
                for (Eigen::Index p = 0; p < d_pad; ++p) {
                    dom((i * d_a2 + a2) * d_pad + p) = b(a2, k) * pad(p);
                }
            }
            CVector img = CVector::Zero(d_ap);
            for (Eigen::Index e = 0; e < d_e; ++e) {
                const numerics::Complex fe = std::conj(f(e, k));
                if (fe == numerics::Complex(0.0, 0.0)) continue;
                img += fe * n_psi.segment((i * d_e + e) * d_ap, d_ap);
            }
            result += scale * img * dom.adjoint();
        }
    }
    return result;
}

}  // namespace qprobe::steering
