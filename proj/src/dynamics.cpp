#include "refsim/dynamics.hpp"

#include "refsim/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace refsim {

void Tolerances::validate() const {
    if (eps_r < 0) throw std::invalid_argument("Tolerances: eps_r must be >= 0");
    if (eps_d < 0) throw std::invalid_argument("Tolerances: eps_d must be >= 0");
    if (tau_s <= 0) throw std::invalid_argument("Tolerances: tau_s must be > 0");
    if (n_samples < 2) throw std::invalid_argument("Tolerances: n_samples must be >= 2");
}

TotalSystem::TotalSystem(Index dim_r_, Index dim_e_, Matrix h_r_, Matrix h_e_, Matrix h_i_)
    : dim_r(dim_r_), dim_e(dim_e_), h_r(std::move(h_r_)), h_e(std::move(h_e_)), h_i(std::move(h_i_)) {
    if (dim_r < 1 || dim_e < 1) throw std::invalid_argument("TotalSystem: dims must be >= 1");
    if (dim_r > kMaxDim / dim_e) throw std::invalid_argument("TotalSystem: composite dimension exceeds capacity");
    require_square(h_r, dim_r, "TotalSystem: H_R");
    require_square(h_e, dim_e, "TotalSystem: H_E");
    require_square(h_i, dim(), "TotalSystem: H_I");
    require_hermitian(h_r, "TotalSystem: H_R");
    require_hermitian(h_e, "TotalSystem: H_E");
    require_hermitian(h_i, "TotalSystem: H_I");
    h_total = tensor(h_r, Matrix::Identity(dim_e, dim_e)) + tensor(Matrix::Identity(dim_r, dim_r), h_e) + h_i;
    evolution_ = std::make_shared<HamiltonianEvolution>(h_total);
}

std::vector<double> window_samples(double t, double tau_s, int n_samples) {
    const int total = n_samples + 2;
    std::vector<double> out(static_cast<std::size_t>(total));
    for (int k = 0; k < total; ++k) {
        out[static_cast<std::size_t>(k)] = t + tau_s * static_cast<double>(k) / static_cast<double>(total - 1);
    }
    return out;
}

double max_leakage(const Evolution& evo, const Matrix& p_mu, const Vector& psi_mu, double t, const Tolerances& tol) {
    tol.validate();
    if (psi_mu.size() != evo.dim() || p_mu.rows() != evo.dim()) {
        throw std::invalid_argument("max_leakage: dimension mismatch");
    }
    double worst = 0.0;
    for (double tp : window_samples(t, tol.tau_s, tol.n_samples)) {
        const Vector psi_t = evo.propagate(psi_mu, t, tp);
        const double leak = std::real(psi_t.dot(psi_t - p_mu * psi_t));  // <psi|(I-P)|psi>
        worst = std::max(worst, std::clamp(leak, 0.0, 1.0));
    }
    return worst;
}

double component_leakage(const Evolution& evo, const Matrix& p_mu, const Vector& state, double t,
                         const Tolerances& tol) {
    const Vector comp = p_mu * state;
    const double n = comp.norm();
    if (n <= 0.0) throw std::domain_error("component_leakage: zero-norm component, condition undefined");
    return max_leakage(evo, p_mu, comp / n, t, tol);
}

bool condition_holds(const Evolution& evo, const Matrix& p_mu, const Vector& state, double t, const Tolerances& tol,
                     double* leakage_out) {
    const double leak = component_leakage(evo, p_mu, state, t, tol);
    if (leakage_out) *leakage_out = leak;
    return leak <= tol.eps_r;
}

double frame_valid_until(const Evolution& evo, const Matrix& p_mu0, const Vector& psi0, double t0, double t_max,
                         double step, const Tolerances& tol) {
    tol.validate();
    if (step <= 0) throw std::invalid_argument("frame_valid_until: step must be > 0");
    const double n0 = psi0.norm();
    if (n0 <= 0) throw std::invalid_argument("frame_valid_until: zero initial state");
    const Vector psi = psi0 / n0;

    auto window_ok = [&](double t) {
        for (double tp : window_samples(t, tol.tau_s, tol.n_samples)) {
            const Vector psi_t = evo.propagate(psi, t0, tp);
            if (std::real(psi_t.dot(p_mu0 * psi_t)) < 1.0 - tol.eps_r) return false;
        }
        return true;
    };

    double last_good = t0;
    for (double t = t0; t <= t_max + 0.5 * step; t += step) {
        const double tc = std::min(t, t_max);
        if (!window_ok(tc)) break;
        last_good = tc;
        if (tc >= t_max) break;
    }
    return last_good;
}

}  // namespace refsim
