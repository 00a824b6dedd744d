// Composite system assembly and the subspace-stability condition.
//
// A division value mu is a valid record for a state when the normalized
// component P_mu|psi>/||P_mu psi|| stays inside its subspace over a look-ahead
// window [t, t+tau_s], up to the leakage tolerance eps_r. The window is
// checked on n_samples interior points plus both endpoints.

#pragma once

#include "refsim/division.hpp"
#include "refsim/evolution.hpp"

#include <memory>
#include <vector>

namespace refsim {

struct Tolerances {
    double eps_r = 1e-3;  // leakage tolerance of the validity condition
    double eps_d = 1e-3;  // consistency tolerance (probability scale, see consistency.hpp)
    double tau_s = 1.0;   // stability window length
    int n_samples = 16;   // interior window samples (endpoints always included)

    // probability-assignment error is tied to the leakage tolerance
    double eps_p() const { return eps_r; }

    void validate() const;
};

struct TotalSystem {
    Index dim_r = 0, dim_e = 0;
    Matrix h_r, h_e, h_i;
    Matrix h_total;

    TotalSystem(Index dim_r_, Index dim_e_, Matrix h_r_, Matrix h_e_, Matrix h_i_);

    Index dim() const { return dim_r * dim_e; }
    EvolutionPtr evolution() const { return evolution_; }

  private:
    EvolutionPtr evolution_;
};

// Sample points of [t, t+tau_s]: n_samples interior + endpoints.
std::vector<double> window_samples(double t, double tau_s, int n_samples);

// Worst leakage <psi_mu(t')|(I-P)|psi_mu(t')> over the window, for a component
// psi_mu that is normalized and inside the P-subspace. Result in [0, 1].
double max_leakage(const Evolution& evo, const Matrix& p_mu, const Vector& psi_mu, double t, const Tolerances& tol);

// Convenience: project an arbitrary (unnormalized) state onto P, normalize,
// and evaluate the condition. Throws std::domain_error on a zero component.
double component_leakage(const Evolution& evo, const Matrix& p_mu, const Vector& state, double t,
                         const Tolerances& tol);
bool condition_holds(const Evolution& evo, const Matrix& p_mu, const Vector& state, double t, const Tolerances& tol,
                     double* leakage_out = nullptr);

// Largest grid time T <= t_max such that <Psi(t')|P|Psi(t')> >= 1 - eps_r for
// every sampled t' in [t0, T + tau_s], with Psi evolving from psi0 at t0.
// Returns t0 when even the first window fails.
double frame_valid_until(const Evolution& evo, const Matrix& p_mu0, const Vector& psi0, double t0, double t_max,
                         double step, const Tolerances& tol);

}  // namespace refsim
