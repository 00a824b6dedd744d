#include "refsim/two_level.hpp"

#include "refsim/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace refsim {

namespace {

Matrix gue_matrix(Index n, double strength, std::uint64_t seed) {
    SeededRng rng(seed);
    const double sigma = strength / (2.0 * std::sqrt(static_cast<double>(n)));
    Matrix a(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) a(i, j) = sigma / std::sqrt(2.0) * rng.complex_normal();
    return (a + a.adjoint()) / std::sqrt(2.0);
}

Matrix spin_chain_matrix(Index n, double strength, std::uint64_t seed) {
    int sites = 0;
    for (Index d = n; d > 1; d >>= 1) {
        if (d % 2 != 0) throw std::invalid_argument("build_env: spin-chain needs a power-of-two dimension");
        ++sites;
    }
    if (sites < 2) throw std::invalid_argument("build_env: spin-chain needs dim_e >= 4");

    SeededRng rng(seed);
    const double j_zz = 1.0, hx = 1.05;
    std::vector<double> hz(static_cast<std::size_t>(sites));
    for (double& h : hz) h = 0.5 + 0.1 * (2.0 * rng.uniform() - 1.0);

    Matrix sx(2, 2), sz(2, 2);
    sx << 0, 1, 1, 0;
    sz << 1, 0, 0, -1;
    auto site_op = [&](const Matrix& op, int site) {
        Matrix out = Matrix::Identity(1, 1);
        for (int s = 0; s < sites; ++s) out = tensor(out, s == site ? op : Matrix(Matrix::Identity(2, 2)));
        return out;
    };

    Matrix h = Matrix::Zero(n, n);
    for (int s = 0; s + 1 < sites; ++s) h += j_zz * site_op(sz, s) * site_op(sz, s + 1);
    for (int s = 0; s < sites; ++s) h += hx * site_op(sx, s) + hz[static_cast<std::size_t>(s)] * site_op(sz, s);

    Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
    const double half_width = std::max(std::abs(es.eigenvalues().minCoeff()), es.eigenvalues().maxCoeff());
    if (half_width <= 0) throw std::runtime_error("build_env: degenerate spin-chain spectrum");
    return h * (strength / half_width);
}

}  // namespace

Matrix build_env(const std::string& kind, Index dim_e, double strength, std::uint64_t seed) {
    if (dim_e < 2) throw std::invalid_argument("build_env: dim_e must be >= 2");
    if (dim_e > kMaxDim) throw std::invalid_argument("build_env: dim_e exceeds capacity");
    if (kind == "gue") return gue_matrix(dim_e, strength, seed);
    if (kind == "spin-chain") return spin_chain_matrix(dim_e, strength, seed);
    throw std::invalid_argument("build_env: unknown kind '" + kind + "'");
}

TwoLevelScenario::TwoLevelScenario(TwoLevelParams p) : p_(std::move(p)) {
    if (p_.dim_e < 2) throw std::invalid_argument("TwoLevelScenario: dim_e must be >= 2");
    if (p_.windows.empty()) throw std::invalid_argument("TwoLevelScenario: needs at least one window");
    p_.tol.validate();
    double prev_end = -std::numeric_limits<double>::infinity();
    for (const auto& [t_begin, t_end] : p_.windows) {
        if (t_end <= t_begin) throw std::invalid_argument("TwoLevelScenario: empty window");
        if (t_begin < prev_end) throw std::invalid_argument("TwoLevelScenario: windows overlap or are unsorted");
        if (p_.tol.tau_s > (t_end - t_begin) + 1e-12) {
            throw std::invalid_argument("TwoLevelScenario: tau_s exceeds a window length; no value could qualify");
        }
        prev_end = t_end;
    }

    h_env_ = build_env(p_.env_kind, p_.dim_e, p_.env_strength, p_.env_seed);
    h_blocks_[0] = build_env(p_.env_kind, p_.dim_e, p_.block_strength, p_.block_seed_1);
    h_blocks_[1] = build_env(p_.env_kind, p_.dim_e, p_.block_strength, p_.block_seed_2);

    env_eff_[0] = std::make_shared<SpectralForm>(SpectralForm::decompose(h_env_ + h_blocks_[0]));
    env_eff_[1] = std::make_shared<SpectralForm>(SpectralForm::decompose(h_env_ + h_blocks_[1]));

    // window Hamiltonian is block diagonal: assemble its spectral form from
    // the two environment forms instead of decomposing the composite matrix
    const Index ne = p_.dim_e;
    Eigen::VectorXd evals(2 * ne);
    Matrix evecs = Matrix::Zero(2 * ne, 2 * ne);
    for (int k = 0; k < 2; ++k) {
        evals.segment(k * ne, ne) =
            env_eff_[k]->eigenvalues.array() + (k == 0 ? p_.e1 : p_.e2);
        evecs.block(k * ne, k * ne, ne, ne) = env_eff_[k]->eigenvectors;
    }
    window_form_ = std::make_shared<SpectralForm>(SpectralForm{std::move(evals), std::move(evecs)});

    gap_form_ = std::make_shared<SpectralForm>(SpectralForm::decompose(h_total_gap()));

    std::vector<double> boundaries;
    std::vector<std::shared_ptr<const SpectralForm>> forms;
    forms.push_back(window_form_);  // window 0 extends backward in time
    for (std::size_t w = 0; w < p_.windows.size(); ++w) {
        boundaries.push_back(p_.windows[w].second);
        forms.push_back(gap_form_);
        if (w + 1 < p_.windows.size()) {
            boundaries.push_back(p_.windows[w + 1].first);
            forms.push_back(window_form_);
        }
    }
    evolution_ = std::make_shared<PiecewiseEvolution>(std::move(boundaries), std::move(forms));
}

Matrix TwoLevelScenario::h_r() const {
    Matrix h = Matrix::Zero(2, 2);
    h(0, 0) = p_.e1;
    h(1, 1) = p_.e2;
    return h;
}

const Matrix& TwoLevelScenario::h_block(int k) const {
    if (k != 0 && k != 1) throw std::out_of_range("TwoLevelScenario: block index must be 0 or 1");
    return h_blocks_[k];
}

Matrix TwoLevelScenario::h_interaction_window() const {
    Matrix h = Matrix::Zero(dim(), dim());
    h.topLeftCorner(p_.dim_e, p_.dim_e) = h_blocks_[0];
    h.bottomRightCorner(p_.dim_e, p_.dim_e) = h_blocks_[1];
    return h;
}

Matrix TwoLevelScenario::h_interaction_gap() const {
    Matrix h = h_interaction_window();
    h.topRightCorner(p_.dim_e, p_.dim_e) += p_.gap_coupling * Matrix::Identity(p_.dim_e, p_.dim_e);
    h.bottomLeftCorner(p_.dim_e, p_.dim_e) += p_.gap_coupling * Matrix::Identity(p_.dim_e, p_.dim_e);
    return h;
}

Matrix TwoLevelScenario::h_total_window() const {
    return tensor(h_r(), Matrix::Identity(p_.dim_e, p_.dim_e)) +
           tensor(Matrix::Identity(2, 2), h_env_) + h_interaction_window();
}

Matrix TwoLevelScenario::h_total_gap() const {
    return tensor(h_r(), Matrix::Identity(p_.dim_e, p_.dim_e)) +
           tensor(Matrix::Identity(2, 2), h_env_) + h_interaction_gap();
}

const SpectralForm& TwoLevelScenario::env_effective(int k) const {
    if (k != 0 && k != 1) throw std::out_of_range("TwoLevelScenario: block index must be 0 or 1");
    return *env_eff_[k];
}

Division TwoLevelScenario::rs_division() const {
    return basis_group_division("k", 2, {{0}, {1}}, {"1", "2"});
}

Division TwoLevelScenario::rs_division_lifted() const { return lift(rs_division(), p_.dim_e); }

DivisionSet TwoLevelScenario::division_set_lifted() const {
    DivisionSet wd;
    wd.divisions.push_back(rs_division_lifted());
    return wd;
}

Vector TwoLevelScenario::product_state(const Eigen::Vector2cd& rs_amplitudes, const Vector& phi_env) const {
    if (phi_env.size() != p_.dim_e) throw std::invalid_argument("product_state: env dimension mismatch");
    Vector rs(2);
    rs << rs_amplitudes(0), rs_amplitudes(1);
    return tensor(rs, phi_env);
}

void TwoLevelScenario::require_two_windows(const char* what) const {
    if (p_.windows.size() < 2) {
        throw std::logic_error(std::string(what) + ": scenario needs two windows");
    }
}

Matrix TwoLevelScenario::gap_block(int m_to, int m_from, double t_from, double t_to) const {
    if (m_to < 0 || m_to > 1 || m_from < 0 || m_from > 1) {
        throw std::out_of_range("gap_block: RS indices must be 0 or 1");
    }
    auto it = gap_unitaries_.find({t_from, t_to});
    if (it == gap_unitaries_.end()) {
        it = gap_unitaries_.emplace(std::make_pair(t_from, t_to), gap_form_->exp_matrix(Complex(0, -(t_to - t_from))))
                 .first;
    }
    const Index ne = p_.dim_e;
    return it->second.block(m_to * ne, m_from * ne, ne, ne);
}

Vector TwoLevelScenario::analytic_branch(const Vector& psi0, int m0, int m1, double t) const {
    require_two_windows("analytic_branch");
    if (psi0.size() != dim()) throw std::invalid_argument("analytic_branch: state dimension mismatch");
    const auto [t0, t0e] = p_.windows[0];
    const auto [t1, t1e] = p_.windows[1];
    if (t < t1 - 1e-12 || t > t1e + 1e-12) {
        throw std::invalid_argument("analytic_branch: t must lie inside the second window");
    }
    const Index ne = p_.dim_e;
    const Vector phi0 = psi0.segment(m0 * ne, ne);
    const Vector u = env_eff_[m0]->apply_exp(Complex(0, -(t0e - t0)), phi0);
    const Vector w = gap_block(m1, m0, t0e, t1) * u;
    const Vector v = env_eff_[m1]->apply_exp(Complex(0, -(t - t1)), w);
    const double theta = rs_energy(m1) * (t - t1) + rs_energy(m0) * (t0e - t0);
    Vector out = Vector::Zero(dim());
    out.segment(m1 * ne, ne) = std::exp(Complex(0, -theta)) * v;
    return out;
}

Complex TwoLevelScenario::env_overlap(const Vector& psi0, int m0_a, int m0_b, int m, double t) const {
    require_two_windows("env_overlap");
    const auto [t0, t0e] = p_.windows[0];
    const auto [t1, t1e] = p_.windows[1];
    if (t < t1 - 1e-12 || t > t1e + 1e-12) {
        throw std::invalid_argument("env_overlap: t must lie inside the second window");
    }
    const Index ne = p_.dim_e;
    auto env_branch = [&](int m0) {
        const Vector phi0 = psi0.segment(m0 * ne, ne);
        const Vector u = env_eff_[m0]->apply_exp(Complex(0, -(t0e - t0)), phi0);
        const Vector w = gap_block(m, m0, t0e, t1) * u;
        return Vector(env_eff_[m]->apply_exp(Complex(0, -(t - t1)), w));
    };
    return env_branch(m0_a).dot(env_branch(m0_b));
}

Complex TwoLevelScenario::analytic_decoherence_entry(const Vector& psi0, int m0_a, int m1_a, int m0_b, int m1_b,
                                                     int m, double t) const {
    if (m1_a != m || m1_b != m) return Complex(0, 0);
    const auto [t0, t0e] = p_.windows[0];
    const double dtheta = (rs_energy(m0_a) - rs_energy(m0_b)) * (t0e - t0);
    return std::exp(Complex(0, dtheta)) * env_overlap(psi0, m0_a, m0_b, m, t);
}

FidelityFit peres_fidelity(const Matrix& h0, const Matrix& h, const Vector& psi0, const std::vector<double>& grid) {
    if (h0.rows() != h.rows()) throw std::invalid_argument("peres_fidelity: Hamiltonian dimensions differ");
    if (psi0.size() != h0.rows()) throw std::invalid_argument("peres_fidelity: state dimension mismatch");
    if (grid.size() < 8) throw std::invalid_argument("peres_fidelity: grid too short");
    const double n0 = psi0.norm();
    if (n0 <= 0) throw std::invalid_argument("peres_fidelity: zero state");
    const Vector psi = psi0 / n0;

    const SpectralForm sf0 = SpectralForm::decompose(h0);
    const SpectralForm sf1 = SpectralForm::decompose(h);

    FidelityFit fit;
    fit.times = grid;
    fit.m_values.reserve(grid.size());
    for (double t : grid) {
        const Vector u = sf1.apply_exp(Complex(0, -t), psi);
        const Vector v = sf0.apply_exp(Complex(0, -t), psi);
        const Complex ov = u.dot(v);
        fit.m_values.push_back(std::norm(ov));
    }

    const std::size_t tail = std::max<std::size_t>(3, grid.size() / 10);
    double acc = 0.0;
    for (std::size_t i = grid.size() - tail; i < grid.size(); ++i) acc += fit.m_values[i];
    fit.plateau = acc / static_cast<double>(tail);

    const double lo = std::max(0.1, 3.0 * fit.plateau);
    const double hi = 0.95;
    fit.fit_lo = lo;
    fit.fit_hi = hi;

    std::vector<double> ts, ys;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double m = fit.m_values[i];
        if (m < hi && m > lo) {
            ts.push_back(grid[i]);
            ys.push_back(std::log(m));
        }
    }
    fit.fit_points = static_cast<int>(ts.size());
    if (ts.size() < 5) return fit;  // never decayed far enough to fit

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const auto n = static_cast<double>(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
        sx += ts[i];
        sy += ys[i];
        sxx += ts[i] * ts[i];
        sxy += ts[i] * ys[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom <= 0) return fit;
    const double slope = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / n;
    if (slope >= 0) return fit;

    double ss_res = 0, ss_tot = 0;
    const double mean_y = sy / n;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double pred = intercept + slope * ts[i];
        ss_res += (ys[i] - pred) * (ys[i] - pred);
        ss_tot += (ys[i] - mean_y) * (ys[i] - mean_y);
    }
    fit.has_decay = true;
    fit.tau_d = -1.0 / slope;
    fit.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 0.0;
    return fit;
}

double tau_policy(const FidelityFit& fit, double factor) {
    if (factor <= 1.0) throw std::invalid_argument("tau_policy: factor must be > 1");
    if (!fit.has_decay) throw std::domain_error("tau_policy: fit has no decay time");
    return factor * fit.tau_d;
}

}  // namespace refsim
