#ifndef QPROBE_SCENARIOS_HPP
#define QPROBE_SCENARIOS_HPP

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qprobe/hilbert.hpp"

namespace qprobe::scenarios {

using hilbert::PureState;
using hilbert::Triple;
using numerics::CMatrix;
using numerics::CVector;

/// Identifier recorded in reports so consumers can reproduce the streams.
/// Substreams are split per label via SplitMix64 over (seed XOR FNV-1a(label));
/// Gaussians come from an explicit Box-Muller transform so the double stream
/// does not depend on the standard library's distribution internals.
inline constexpr const char* kRngAlgorithmId = "mt19937_64+splitmix64/box-muller";

/// Deterministic substream: same (seed, label) always yields the same draws,
/// and adding a consumer with a new label never perturbs existing streams.
class RngStream {
public:
    RngStream(std::uint64_t seed, const std::string& label);

    std::uint64_t next_u64();
    double uniform();          // [0, 1)
    double gaussian();         // standard normal
    numerics::Complex complex_gaussian();  // variance 1 (per complex entry)

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

CMatrix random_gue(RngStream& rng, Eigen::Index dim, double strength);
CMatrix haar_unitary(RngStream& rng, Eigen::Index dim);
CVector random_pure_vector(RngStream& rng, Eigen::Index dim);

enum class HamiltonianKind { RandomGue, HeisenbergChain, Explicit };
enum class InitialStateKind { RandomPure, EquilibratedFixed, Explicit };

struct ScenarioSpec {
    std::uint64_t seed = 0;
    Eigen::Index d_s = 2;
    Eigen::Index d_e = 2;

    HamiltonianKind hamiltonian = HamiltonianKind::RandomGue;
    double gue_strength = 1.0;
    int chain_spins = 0;
    std::vector<double> chain_couplings;   // one per bond
    std::optional<CMatrix> explicit_h;

    InitialStateKind initial_state = InitialStateKind::RandomPure;
    std::optional<CVector> explicit_psi;   // on S (x) E

    std::string notes;

    /// Upper bound on d_s*d_e after purification; generation fails beyond it.
    Eigen::Index max_se_dim = 64;
};

/// Σ_bonds J_b (XX + YY + ZZ) on an open chain of qubits.
CMatrix heisenberg_chain(int n_spins, std::span<const double> couplings);

/// Builds the ground-truth triple for a spec: Hamiltonian, initial pure state
/// on S (x) E (purifying a mixed request into an enlarged E), no ancillas yet.
/// Deterministic for a fixed spec.
Triple generate(const ScenarioSpec& spec);

}  // namespace qprobe::scenarios

#endif  // QPROBE_SCENARIOS_HPP
