#ifndef QPROBE_STEERING_HPP
#define QPROBE_STEERING_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "qprobe/hilbert.hpp"
#include "qprobe/scenarios.hpp"

namespace qprobe::steering {

using hilbert::DensityMatrix;
using hilbert::HermitianOperator;
using hilbert::PureState;
using hilbert::Triple;
using numerics::CMatrix;
using numerics::CVector;

struct SteeringConfig {
    double delta_t = 1.0;          // sampling window per round
    int samples_per_window = 64;   // density for the sup in epsilon_C
    double tol_zero = 1e-9;        // threshold declaring Delta E ~ 0
    int max_rounds = 32;           // safety cap
    std::uint64_t rng_seed = 0;    // used only in Monte-Carlo filtering mode
    bool mc_filtering = false;     // abort-and-restart filter semantics
    bool compress_ancilla = true;  // restrict A to its support after each filter

    void validate() const;
};

struct RoundRecord {
    int round_index = 0;  // C
    std::vector<std::pair<double, double>> delta_e_series;  // (t, Delta E_SA)
    double epsilon_c = 0.0;
    double filter_success_prob = 1.0;
    Eigen::Index rank_rho_a = 0;
    double swap_time = 0.0;
};

struct SteeringTrace {
    std::vector<RoundRecord> rounds;
    int halted_at = 0;      // K
    double halt_time = 0.0; // t_K
    int attempts = 1;       // > 1 only in Monte-Carlo filtering mode
};

/// Tensor factorization A = A1 (x) A2 inside the support of rho_A. The
/// isometry w maps C^{d_a1} (x) C^r into A; columns are indexed (i, k)
/// row-major. A1 carries the factor maximally entangled with S.
struct Split {
    CMatrix w;
    Eigen::Index d_a1 = 0;
    Eigen::Index r = 0;

    CMatrix a1_isometry() const;  // columns w_(i,0)
    CMatrix a2_isometry() const;  // columns w_(0,k)
};

struct MEReport {
    bool passed = false;
    double rho_s_deviation = 0.0;
    double factorization_deviation = 0.0;
    double projector_deviation = 0.0;
    Split split;
    Eigen::Index r = 0;  // effective environment dimension
};

// ---- Delta E in its three forms -------------------------------------------

/// S(rho_SA) - S(rho_A) + ln d_S for a state on S and ancilla factors.
double delta_e_sa(const DensityMatrix& rho_sa);

/// D(rho_SE || rho_S (x) rho_E) + D(rho_S || I/d_S).
double delta_e_relative_form(const DensityMatrix& rho_se);

/// Same functional evaluated through the complement reductions of a global
/// pure state; used as the fast in-protocol monitor.
double delta_e_of_pure(const PureState& psi);

/// Entanglement increment across the swap of a fresh MES half into S,
/// measured on the SE | ancillas partition.
double delta_e_swap_increment(const PureState& psi);

// ---- protocol primitives ---------------------------------------------------

struct FilterResult {
    PureState state;
    double success_prob = 1.0;
    Eigen::Index rank = 0;
};

/// Local filtering sqrt(lambda_min * rho_A^{-1}) on the given factors; returns
/// the renormalized success branch. Eigenvalues below rank_tol are treated as
/// outside the support.
FilterResult local_filter(const PureState& state,
                          std::span<const std::string> target,
                          double rank_tol = 1e-10);

/// Rotates the joint ancilla block onto the support of rho_A and merges it
/// into a single factor labeled "A". No-op when there are no ancillas.
PureState compress_ancilla(const PureState& state, double rank_tol = 1e-12);

struct RoundResult {
    PureState state;
    RoundRecord record;
    bool halted = false;
    bool aborted = false;  // Monte-Carlo filter failure
    double t_end = 0.0;
};

/// One protocol round: swap in a fresh MES half, filter, sample Delta E over
/// the window, halt or evolve to the first sample at or above epsilon_C.
RoundResult steering_round(const PureState& state, const HermitianOperator& h_se,
                           const SteeringConfig& cfg, int round_index,
                           double t_start, scenarios::RngStream* mc_rng = nullptr);

struct SteeringResult {
    PureState final_state;
    SteeringTrace trace;
};

SteeringResult run_steering(const Triple& triple, const SteeringConfig& cfg);

// ---- ME condition ----------------------------------------------------------

/// Constructs the A1/A2 factorization from the matrix-unit blocks
/// <i|_S rho_SA |j>_S. Throws when rho_S is far from maximally mixed or the
/// transported blocks fail the closure test.
Split find_split(const DensityMatrix& rho_sa, double tol);

/// Checks Tr_E P(Psi) = |Upsilon_SA1><Upsilon_SA1| (x) P/r. Failure is a
/// report, not an error.
MEReport me_condition_check(const DensityMatrix& rho_sa, double tol);

/// The linear map taking an operator N on S (x) A' to an operator on A' with
/// identical action on a state of the form Upsilon_SA1 (x) Phi_EA2 (x) pads.
/// Layout must carry S, E, A1, A2 (extra ancilla factors allowed).
CMatrix mirror_map(const CMatrix& n_sa, const PureState& psi,
                   double form_tol = 1e-8);

}  // namespace qprobe::steering

#endif  // QPROBE_STEERING_HPP
