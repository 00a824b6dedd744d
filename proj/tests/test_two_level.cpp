#include "refsim/two_level.hpp"
#include "refsim/consistency.hpp"
#include "refsim/linalg.hpp"
#include "refsim/rng.hpp"

#include "doctest.h"
#include "oracles.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace refsim;

namespace {

TwoLevelParams small_params(Index dim_e = 32) {
    TwoLevelParams p;
    p.e1 = 0.0;
    p.e2 = 0.5;
    p.dim_e = dim_e;
    p.env_strength = 1.0;
    p.env_seed = 21;
    p.block_strength = 0.25;
    p.block_seed_1 = 22;
    p.block_seed_2 = 23;
    p.gap_coupling = 0.7;
    p.windows = {{0.0, 2.0}, {3.0, 5.0}};
    p.tol.eps_r = 1e-9;
    p.tol.tau_s = 1.0;
    p.tol.n_samples = 6;
    return p;
}

}  // namespace

TEST_CASE("build_env is deterministic per seed and Hermitian") {
    const Matrix a = build_env("gue", 64, 1.0, 99);
    const Matrix b = build_env("gue", 64, 1.0, 99);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);  // bitwise identical
    CHECK((a - a.adjoint()).cwiseAbs().maxCoeff() <= 1e-14);
    const Matrix c = build_env("gue", 64, 1.0, 100);
    CHECK((a - c).cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("GUE spectrum: half-width tracks strength, spacing ratio is Wigner-like") {
    const Matrix h = build_env("gue", 512, 1.0, 7);
    Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
    std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    CHECK(std::abs(ev.front()) < 1.15);
    CHECK(std::abs(ev.back()) < 1.15);
    CHECK(std::abs(ev.back()) > 0.85);
    const double r = oracle::spacing_ratio_mean(ev);
    CHECK(r > 0.57);
    CHECK(r < 0.63);
}

TEST_CASE("spin-chain env: power-of-two check and chaotic spacing") {
    CHECK_THROWS_AS(build_env("spin-chain", 48, 1.0, 1), std::invalid_argument);
    const Matrix h = build_env("spin-chain", 256, 1.0, 5);
    CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() <= 1e-12);
    Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
    CHECK(std::abs(es.eigenvalues().maxCoeff()) <= 1.0 + 1e-9);
}

TEST_CASE("scenario validation") {
    TwoLevelParams p = small_params();
    p.tol.tau_s = 5.0;  // exceeds window length
    CHECK_THROWS_AS(TwoLevelScenario{p}, std::invalid_argument);
    TwoLevelParams q = small_params();
    q.windows = {{0.0, 2.0}, {1.0, 3.0}};
    CHECK_THROWS_AS(TwoLevelScenario{q}, std::invalid_argument);
}

TEST_CASE("window evolution equals the dense block propagator") {
    TwoLevelScenario sc(small_params(16));
    SeededRng rng(31);
    const Vector psi = random_state(sc.dim(), rng);
    const Vector via_engine = sc.evolution()->propagate(psi, 0.0, 1.3);
    const Vector via_dense = propagator(sc.h_total_window(), 1.3) * psi;
    CHECK((via_engine - via_dense).norm() < 1e-10);
}

TEST_CASE("gap blocks with zero coupling: diagonal blocks only") {
    TwoLevelParams p = small_params(16);
    p.gap_coupling = 0.0;
    TwoLevelScenario sc(p);
    CHECK(sc.gap_block(1, 0, 2.0, 3.0).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(sc.gap_block(0, 1, 2.0, 3.0).cwiseAbs().maxCoeff() < 1e-12);
    // diagonal block is the effective env propagator (phases aside)
    const Matrix g00 = sc.gap_block(0, 0, 2.0, 3.0);
    const Matrix expect = std::exp(Complex(0, -sc.rs_energy(0) * 1.0)) * sc.env_effective(0).exp_matrix(Complex(0, -1.0));
    CHECK((g00 - expect).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("analytic branch with zero coupling and matching labels is pure effective evolution") {
    TwoLevelParams p = small_params(16);
    p.gap_coupling = 0.0;
    TwoLevelScenario sc(p);
    SeededRng rng(33);
    Eigen::Vector2cd rs;
    rs << std::sqrt(0.4), std::sqrt(0.6);
    const Vector phi0 = random_state(16, rng);
    const Vector psi0 = sc.product_state(rs, phi0);

    const Vector b00 = sc.analytic_branch(psi0, 0, 0, 4.0);
    // phases: e2 only enters through RS energy; build the expected vector
    const double t0e = 2.0, t1 = 3.0, t = 4.0;
    Vector env = sc.env_effective(0).apply_exp(Complex(0, -(t0e - 0.0)), Vector(rs(0) * phi0));
    env = std::exp(Complex(0, -sc.rs_energy(0) * (t1 - t0e))) * sc.env_effective(0).apply_exp(Complex(0, -(t1 - t0e)), env);
    env = sc.env_effective(0).apply_exp(Complex(0, -(t - t1)), env);
    Vector expect = Vector::Zero(sc.dim());
    expect.segment(0, 16) = std::exp(Complex(0, -(sc.rs_energy(0) * (t - t1) + sc.rs_energy(0) * t0e))) * env;
    CHECK((b00 - expect).norm() < 1e-10);

    // cross-label branch vanishes when nothing couples the subspaces
    CHECK(sc.analytic_branch(psi0, 0, 1, 4.0).norm() < 1e-12);
}

TEST_CASE("analytic branches match the generic tree engine on all four paths") {
    TwoLevelScenario sc(small_params(32));
    SeededRng rng(34);
    Eigen::Vector2cd rs;
    rs << Complex(0.6, 0.1), Complex(0.2, -0.76);
    rs /= std::sqrt(std::norm(rs(0)) + std::norm(rs(1)));
    const Vector psi0 = sc.product_state(rs, random_state(32, rng));

    BranchTree tree(sc.evolution(), psi0, 0.0, sc.params().tol);
    REQUIRE(tree.split_all(sc.rs_division_lifted()) == 1);
    tree.advance_to(3.0);
    REQUIRE(tree.split_all(sc.rs_division_lifted()) == 2);
    const double t = 4.2;
    tree.advance_to(t);
    REQUIRE(tree.size() == 4);

    for (std::size_t i = 0; i < tree.size(); ++i) {
        const Path& path = tree.leaf(i).path;
        REQUIRE(path.steps.size() == 2);
        const int m0 = path.steps[0].op_label == "1" ? 0 : 1;
        const int m1 = path.steps[1].op_label == "1" ? 0 : 1;
        const Vector closed_form = sc.analytic_branch(psi0, m0, m1, t);
        CHECK((closed_form - tree.leaf(i).component).norm() < 1e-8);
    }

    // decoherence-matrix entries against the closed form
    const DecoherenceMatrix dm = decoherence_matrix(tree, sc.rs_division_lifted());
    for (int m = 0; m < 2; ++m) {
        for (std::size_t a = 0; a < 4; ++a) {
            for (std::size_t b = 0; b < 4; ++b) {
                const auto label_to_m = [&](const std::string& s) { return s == "1" ? 0 : 1; };
                const Path& pa = tree.leaf(a).path;
                const Path& pb = tree.leaf(b).path;
                const Complex expect = sc.analytic_decoherence_entry(
                    psi0, label_to_m(pa.steps[0].op_label), label_to_m(pa.steps[1].op_label),
                    label_to_m(pb.steps[0].op_label), label_to_m(pb.steps[1].op_label), m, t);
                CHECK(std::abs(dm.blocks[static_cast<std::size_t>(m)](static_cast<Index>(a), static_cast<Index>(b)) -
                               expect) < 1e-8);
            }
        }
    }
}

TEST_CASE("env overlap: identical first labels give the branch weight") {
    TwoLevelScenario sc(small_params(24));
    SeededRng rng(35);
    Eigen::Vector2cd rs;
    rs << std::sqrt(0.5), std::sqrt(0.5);
    const Vector psi0 = sc.product_state(rs, random_state(24, rng));
    const Complex d = sc.env_overlap(psi0, 0, 0, 1, 4.0);
    CHECK(std::abs(d.imag()) < 1e-12);
    CHECK(d.real() > 0.0);
    const Vector branch = sc.analytic_branch(psi0, 0, 1, 4.0);
    CHECK(d.real() == doctest::Approx(branch.squaredNorm()).epsilon(1e-10));
}

TEST_CASE("greedy run splits exactly at the window openings") {
    TwoLevelScenario sc(small_params(16));
    SeededRng rng(36);
    Eigen::Vector2cd rs;
    rs << std::sqrt(0.3), std::sqrt(0.7);
    const Vector psi0 = sc.product_state(rs, random_state(16, rng));
    auto res = run_tree(sc.evolution(), psi0, 0.0, make_grid(0.0, 5.0, 0.5), sc.division_set_lifted(),
                        sc.params().tol, SplitPolicy::greedy());
    REQUIRE(res.tree.events().size() == 3);  // one at t=0, two at t=3
    CHECK(res.tree.events()[0].time == doctest::Approx(0.0));
    CHECK(res.tree.events()[1].time == doctest::Approx(3.0));
    CHECK(res.tree.events()[2].time == doctest::Approx(3.0));
    CHECK(res.tree.size() == 4);
}

TEST_CASE("peres fidelity: identical Hamiltonians give M = 1 and no decay") {
    const Matrix h = build_env("gue", 32, 1.0, 41);
    SeededRng rng(42);
    const Vector psi0 = random_state(32, rng);
    const FidelityFit fit = peres_fidelity(h, h, psi0, make_grid(0.0, 10.0, 0.5));
    CHECK_FALSE(fit.has_decay);
    for (double m : fit.m_values) CHECK(m == doctest::Approx(1.0).epsilon(1e-10));
    CHECK_THROWS_AS(tau_policy(fit, 10.0), std::domain_error);
}

TEST_CASE("peres fidelity starts at exactly 1") {
    const Matrix h0 = build_env("gue", 24, 1.0, 43);
    const Matrix h1 = h0 + build_env("gue", 24, 0.2, 44);
    SeededRng rng(45);
    const FidelityFit fit = peres_fidelity(h0, h1, random_state(24, rng), make_grid(0.0, 5.0, 0.25));
    CHECK(fit.m_values.front() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("peres fidelity decays exponentially for a chaotic environment") {
    const Matrix h_e = build_env("gue", 128, 1.0, 46);
    const Matrix b1 = build_env("gue", 128, 0.25, 47);
    const Matrix b2 = build_env("gue", 128, 0.25, 48);
    SeededRng rng(49);
    const Vector psi0 = random_state(128, rng);
    const FidelityFit fit = peres_fidelity(h_e + b1, h_e + b2, psi0, make_grid(0.0, 120.0, 0.5));
    REQUIRE(fit.has_decay);
    CHECK(fit.tau_d > 0.5);
    CHECK(fit.tau_d < 60.0);
    CHECK(fit.r_squared > 0.85);
}

TEST_CASE("tau policy") {
    FidelityFit fit;
    fit.has_decay = true;
    fit.tau_d = 0.5;
    CHECK(tau_policy(fit, 10.0) == doctest::Approx(5.0));
    CHECK_THROWS_AS(tau_policy(fit, 1.0), std::invalid_argument);
}
