#include "qprobe/scenarios.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qprobe::scenarios {

namespace {

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, const std::string& label)
    : engine_(splitmix64(seed ^ fnv1a64(label))) {}

std::uint64_t RngStream::next_u64() { return engine_(); }

double RngStream::uniform() {
    // 53-bit mantissa, uniform in [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::gaussian() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(phi);
    have_spare_ = true;
    return r * std::cos(phi);
}

numerics::Complex RngStream::complex_gaussian() {
    const double re = gaussian();
    const double im = gaussian();
    return numerics::Complex(re, im) / std::sqrt(2.0);
}

CMatrix random_gue(RngStream& rng, Eigen::Index dim, double strength) {
    CMatrix h = CMatrix::Zero(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        h(i, i) = rng.gaussian();
        for (Eigen::Index j = i + 1; j < dim; ++j) {
            const numerics::Complex z = rng.complex_gaussian();
            h(i, j) = z;
            h(j, i) = std::conj(z);
        }
    }
    return h * (strength / std::sqrt(static_cast<double>(dim)));
}

CMatrix haar_unitary(RngStream& rng, Eigen::Index dim) {
    CMatrix g(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) {
            g(i, j) = rng.complex_gaussian();
        }
    }
    Eigen::HouseholderQR<CMatrix> qr(g);
    CMatrix q = qr.householderQ();
    const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index k = 0; k < dim; ++k) {
        const numerics::Complex d = r(k, k);
        q.col(k) *= (std::abs(d) > 0.0) ? d / std::abs(d) : 1.0;
    }
    return q;
}

CVector random_pure_vector(RngStream& rng, Eigen::Index dim) {
    CVector v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v(i) = rng.complex_gaussian();
    return v / v.norm();
}

CMatrix heisenberg_chain(int n_spins, std::span<const double> couplings) {
    if (n_spins < 2) throw std::invalid_argument("heisenberg_chain: need >= 2 spins");
    if (couplings.size() != static_cast<std::size_t>(n_spins - 1)) {
        throw std::invalid_argument("heisenberg_chain: need one coupling per bond");
    }
    const Eigen::Index dim = Eigen::Index(1) << n_spins;
    if (dim > numerics::kMaxDenseDim) {
        throw std::length_error("heisenberg_chain: chain too long for dense build");
    }
    CMatrix x(2, 2), y(2, 2), z(2, 2);
    x << 0, 1, 1, 0;
    y << numerics::Complex(0, 0), numerics::Complex(0, -1), numerics::Complex(0, 1),
        numerics::Complex(0, 0);
    z << 1, 0, 0, -1;

    auto site_op = [&](const CMatrix& op, int site) {
        CMatrix out = CMatrix::Identity(1, 1);
        for (int s = 0; s < n_spins; ++s) {
            out = numerics::kron(out, s == site ? op : CMatrix::Identity(2, 2));
        }
        return out;
    };

    CMatrix h = CMatrix::Zero(dim, dim);
    for (int b = 0; b < n_spins - 1; ++b) {
        h += couplings[static_cast<std::size_t>(b)] *
             (site_op(x, b) * site_op(x, b + 1) + site_op(y, b) * site_op(y, b + 1) +
              site_op(z, b) * site_op(z, b + 1));
    }
    return h;
}

namespace {

CMatrix build_hamiltonian(const ScenarioSpec& spec, Eigen::Index d_se, RngStream& rng) {
    switch (spec.hamiltonian) {
        case HamiltonianKind::RandomGue:
            return random_gue(rng, d_se, spec.gue_strength);
        case HamiltonianKind::HeisenbergChain: {
            std::vector<double> couplings = spec.chain_couplings;
            if (couplings.empty()) {
                couplings.assign(static_cast<std::size_t>(spec.chain_spins - 1), 1.0);
            }
            return heisenberg_chain(spec.chain_spins, couplings);
        }
        case HamiltonianKind::Explicit: {
            if (!spec.explicit_h) {
                throw std::invalid_argument("generate: explicit Hamiltonian missing");
            }
            if (spec.explicit_h->rows() != d_se) {
                throw std::invalid_argument("generate: explicit Hamiltonian has wrong size");
            }
            return *spec.explicit_h;
        }
    }
    throw std::logic_error("generate: unknown Hamiltonian kind");
}

}  // namespace

Triple generate(const ScenarioSpec& spec) {
    Eigen::Index d_s = spec.d_s;
    Eigen::Index d_e = spec.d_e;
    if (spec.hamiltonian == HamiltonianKind::HeisenbergChain) {
        if (spec.chain_spins < 2) {
            throw std::invalid_argument("generate: chain_spins must be >= 2");
        }
        d_s = 2;
        d_e = Eigen::Index(1) << (spec.chain_spins - 1);
    }
    if (d_s < 1 || d_e < 1) {
        throw std::invalid_argument("generate: dimensions must be positive");
    }
    if (d_s * d_e > spec.max_se_dim) {
        throw std::length_error("generate: d_s*d_e exceeds the configured cap");
    }

    RngStream h_rng(spec.seed, "hamiltonian");
    CMatrix h = build_hamiltonian(spec, d_s * d_e, h_rng);

    RngStream s_rng(spec.seed, "initial_state");
    CVector psi_se;
    switch (spec.initial_state) {
        case InitialStateKind::RandomPure:
            psi_se = random_pure_vector(s_rng, d_s * d_e);
            break;
        case InitialStateKind::EquilibratedFixed: {
            // A fixed, seed-derived full-rank mixed state, purified into an
            // enlarged environment; d_e grows by the purifying rank.
            const Eigen::Index d = d_s * d_e;
            CMatrix g(d, d);
            for (Eigen::Index i = 0; i < d; ++i) {
                for (Eigen::Index j = 0; j < d; ++j) {
                    g(i, j) = s_rng.complex_gaussian();
                }
            }
            CMatrix rho = g * g.adjoint();
            rho /= rho.trace().real();
            const auto eig = numerics::herm_eig(rho);

            Eigen::Index rank = 0;
            for (Eigen::Index k = 0; k < d; ++k) {
                if (eig.eigenvalues(k) > 1e-12) ++rank;
            }
            const Eigen::Index d_e_new = d_e * rank;
            if (d_s * d_e_new > spec.max_se_dim) {
                throw std::length_error("generate: purified d_s*d_e exceeds the cap");
            }
            // |Psi> = sum_k sqrt(p_k) |v_k>_{SE} |k>_{E'}; E := E (x) E'.
            CVector purified = CVector::Zero(d * rank);
            Eigen::Index slot = 0;
            for (Eigen::Index k = 0; k < d; ++k) {
                if (eig.eigenvalues(k) <= 1e-12) continue;
                const double w = std::sqrt(eig.eigenvalues(k));
                for (Eigen::Index i = 0; i < d; ++i) {
                    purified(i * rank + slot) = w * eig.eigenvectors(i, k);
                }
                ++slot;
            }
            psi_se = purified;
            h = numerics::kron(h, CMatrix::Identity(rank, rank));
            // Reorder (S,E,E') indices into (S, E(x)E'): the flat index is
            // already (s,e,e') row-major, matching E := E (x) E'.
            d_e = d_e_new;
            break;
        }
        case InitialStateKind::Explicit: {
            if (!spec.explicit_psi) {
                throw std::invalid_argument("generate: explicit state missing");
            }
            psi_se = *spec.explicit_psi;
            if (psi_se.size() != d_s * d_e) {
                throw std::invalid_argument("generate: explicit state has wrong size");
            }
            psi_se /= psi_se.norm();
            break;
        }
    }

    hilbert::SubsystemLayout layout(
        {hilbert::Factor{"S", d_s}, hilbert::Factor{"E", d_e}});
    hilbert::SubsystemLayout h_layout = layout;
    return Triple(d_e, PureState(layout, std::move(psi_se)),
                  hilbert::HermitianOperator(h_layout, std::move(h)));
}

}  // namespace qprobe::scenarios
