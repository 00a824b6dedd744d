// Two-level reference system coupled to a large irregular environment.
//
// Inside scheduled windows the interaction is exactly block form,
//   H_I = |1><1| (x) B_1 + |2><2| (x) B_2,
// so both RS values satisfy the validity condition; between windows an extra
// sigma_x coupling mixes the two subspaces and no nontrivial frame survives.
// For the first two windows the branch components have closed forms built
// from the effective environment propagators and one gap operator; those
// closed forms are the oracle the generic tree engine is checked against.

#pragma once

#include "refsim/branching.hpp"
#include "refsim/rng.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace refsim {

// Seeded Hermitian environment generators.
//  - "gue": entries scaled so the spectrum half-width is ~strength
//    (entry variance sigma^2 = strength^2 / (4 dim_e)).
//  - "spin-chain": tilted-field Ising chain (J=1, hx=1.05, hz=0.5 plus
//    seeded per-site jitter), rescaled to spectral half-width = strength;
//    dim_e must be a power of two.
Matrix build_env(const std::string& kind, Index dim_e, double strength, std::uint64_t seed);

struct TwoLevelParams {
    double e1 = 0.0, e2 = 0.5;  // RS energies
    Index dim_e = 64;
    std::string env_kind = "gue";
    double env_strength = 1.0;
    std::uint64_t env_seed = 11;
    double block_strength = 0.2;  // strength of B_1, B_2
    std::uint64_t block_seed_1 = 12, block_seed_2 = 13;
    double gap_coupling = 0.5;  // sigma_x (x) I term outside windows
    std::vector<std::pair<double, double>> windows = {{0.0, 10.0}};
    Tolerances tol;
};

class TwoLevelScenario {
  public:
    explicit TwoLevelScenario(TwoLevelParams p);

    const TwoLevelParams& params() const { return p_; }
    Index dim_e() const { return p_.dim_e; }
    Index dim() const { return 2 * p_.dim_e; }
    double rs_energy(int k) const { return k == 0 ? p_.e1 : p_.e2; }

    Matrix h_r() const;
    const Matrix& h_env() const { return h_env_; }
    const Matrix& h_block(int k) const;  // B_k, k = 0 or 1
    Matrix h_interaction_window() const;  // block-form H_I
    Matrix h_interaction_gap() const;     // block form + gap sigma_x coupling
    Matrix h_total_window() const;
    Matrix h_total_gap() const;

    const SpectralForm& env_effective(int k) const;  // H_E + B_k

    EvolutionPtr evolution() const { return evolution_; }
    Division rs_division() const;  // {|1><1|, |2><2|}, values "1" and "2"
    Division rs_division_lifted() const;
    DivisionSet division_set_lifted() const;  // just the RS division

    // Product initial state |k=0 amplitude, k=1 amplitude> (x) |phi0>.
    Vector product_state(const Eigen::Vector2cd& rs_amplitudes, const Vector& phi_env) const;

    // <m_to| U_gap(t_to, t_from) |m_from>, an operator on the env factor.
    Matrix gap_block(int m_to, int m_from, double t_from, double t_to) const;

    // Closed-form branch component for the path (m0 at window-0 start,
    // m1 at window-1 start), evaluated at t inside window 1.
    Vector analytic_branch(const Vector& psi0, int m0, int m1, double t) const;

    // Environment overlap <phi_{m0a, m}(t) | phi_{m0b, m}(t)>.
    Complex env_overlap(const Vector& psi0, int m0_a, int m0_b, int m, double t) const;

    // Full decoherence-matrix entry <Psi_{m0a m1a}| P_m |Psi_{m0b m1b}>, the
    // delta factors, RS phase and env overlap combined.
    Complex analytic_decoherence_entry(const Vector& psi0, int m0_a, int m1_a, int m0_b, int m1_b, int m,
                                       double t) const;

  private:
    void require_two_windows(const char* what) const;

    TwoLevelParams p_;
    Matrix h_env_;
    Matrix h_blocks_[2];
    std::shared_ptr<const SpectralForm> env_eff_[2];  // dim_e
    std::shared_ptr<const SpectralForm> window_form_;  // composite, assembled from env forms
    std::shared_ptr<const SpectralForm> gap_form_;     // composite
    EvolutionPtr evolution_;
    mutable std::map<std::pair<double, double>, Matrix> gap_unitaries_;
};

// Overlap decay of one state evolved under two Hamiltonians:
// M(t) = |<psi0| e^{+iHt} e^{-iH0t} |psi0>|^2, with an exponential fit of the
// pre-saturation stretch.
struct FidelityFit {
    std::vector<double> times;
    std::vector<double> m_values;
    double plateau = 0.0;   // mean of the trailing 10% of the grid
    bool has_decay = false;
    double tau_d = 0.0;     // decay time from the ln M fit
    double r_squared = 0.0;
    int fit_points = 0;
    double fit_lo = 0.0, fit_hi = 0.0;  // M-range of the fitted stretch
};

FidelityFit peres_fidelity(const Matrix& h0, const Matrix& h, const Vector& psi0, const std::vector<double>& grid);

// Recommended stability window from a fitted decay time: factor * tau_d.
double tau_policy(const FidelityFit& fit, double factor = 10.0);

}  // namespace refsim
