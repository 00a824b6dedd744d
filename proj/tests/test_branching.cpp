#include "refsim/branching.hpp"
#include "refsim/linalg.hpp"
#include "refsim/rng.hpp"

#include "doctest.h"

#include <cmath>

using namespace refsim;

namespace {

// random system with a permissive condition tolerance so any split is allowed
struct RandomScenario {
    TotalSystem sys;
    DivisionSet lifted_wd;
    Vector psi0;
    Tolerances tol;
};

RandomScenario make_random_scenario(std::uint64_t seed, Index dim_r, Index dim_e) {
    SeededRng rng(seed);
    TotalSystem sys(dim_r, dim_e, random_hermitian(dim_r, rng), random_hermitian(dim_e, rng),
                    0.5 * random_hermitian(dim_r * dim_e, rng));
    // random rank-structured division on the reference factor
    const Matrix u = random_unitary(dim_r, rng);
    Division d;
    d.label = "r";
    d.space_dim = dim_r;
    Index half = dim_r / 2;
    d.value_labels = {"lo", "hi"};
    d.projectors = {u.leftCols(half) * u.leftCols(half).adjoint(),
                    u.rightCols(dim_r - half) * u.rightCols(dim_r - half).adjoint()};
    d.validate();
    DivisionSet wd;
    wd.divisions.push_back(lift(d, dim_e));
    Tolerances tol;
    tol.eps_r = 1.0;  // every nonzero component qualifies
    tol.tau_s = 0.3;
    tol.n_samples = 2;
    return RandomScenario{std::move(sys), std::move(wd), random_state(dim_r * dim_e, rng), tol};
}

Matrix sigma_x() {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

}  // namespace

TEST_CASE("no splits: tree component is plain evolution") {
    auto sc = make_random_scenario(21, 2, 3);
    BranchTree tree(sc.sys.evolution(), sc.psi0, 0.0, sc.tol);
    tree.advance_to(1.3);
    const Vector direct = sc.sys.evolution()->propagate(sc.psi0, 0.0, 1.3);
    CHECK((tree.total_vector() - direct).norm() < 1e-12);
    CHECK(tree.size() == 1);
    CHECK(tree.leaf(0).probability() == doctest::Approx(1.0));
}

TEST_CASE("trivial-division split leaves the tree unchanged") {
    auto sc = make_random_scenario(22, 2, 3);
    BranchTree tree(sc.sys.evolution(), sc.psi0, 0.0, sc.tol);
    const Division triv = lift(trivial_division(2), 3);
    CHECK_FALSE(tree.try_split(0, triv));
    CHECK(tree.size() == 1);
    CHECK(tree.events().empty());
}

TEST_CASE("branch-sum identity and probability completeness through splits") {
    for (std::uint64_t seed : {31u, 32u, 33u}) {
        auto sc = make_random_scenario(seed, 4, 4);
        BranchTree tree(sc.sys.evolution(), sc.psi0, 0.0, sc.tol);
        for (double t : {0.0, 0.4, 0.8, 1.2}) {
            tree.advance_to(t);
            tree.split_all(sc.lifted_wd.divisions[0]);
            const Vector direct = sc.sys.evolution()->propagate(sc.psi0, 0.0, t);
            CHECK((tree.total_vector() - direct).norm() < 1e-9);
            CHECK(tree.total_probability() == doctest::Approx(1.0).epsilon(1e-10));
        }
        CHECK(tree.size() > 1);
    }
}

TEST_CASE("split contract violation throws") {
    // strict tolerance: generic coupling means the condition fails
    auto sc = make_random_scenario(41, 2, 4);
    sc.tol.eps_r = 1e-9;
    BranchTree tree(sc.sys.evolution(), sc.psi0, 0.0, sc.tol);
    CHECK_THROWS_AS(tree.split_leaf(0, sc.lifted_wd.divisions[0], {0}), std::logic_error);
}

TEST_CASE("splitting on one qualifying value produces the P / (I-P) pair") {
    auto sc = make_random_scenario(42, 2, 3);
    BranchTree tree(sc.sys.evolution(), sc.psi0, 0.0, sc.tol);
    REQUIRE(tree.split_leaf(0, sc.lifted_wd.divisions[0], {0}));
    REQUIRE(tree.size() == 2);
    const Matrix& p = sc.lifted_wd.divisions[0].projectors[0];
    CHECK((tree.leaf(0).component - p * sc.psi0).norm() < 1e-12);
    CHECK((tree.leaf(1).component - (sc.psi0 - p * sc.psi0)).norm() < 1e-12);
    CHECK(tree.leaf(1).path.steps.back().op_label == "rest");
}

TEST_CASE("replay_component reproduces stored leaves") {
    auto sc = make_random_scenario(43, 4, 4);
    BranchTree tree(sc.sys.evolution(), sc.psi0, 0.0, sc.tol);
    tree.advance_to(0.5);
    tree.split_all(sc.lifted_wd.divisions[0]);
    tree.advance_to(1.1);
    tree.split_all(sc.lifted_wd.divisions[0]);
    tree.advance_to(1.6);
    for (std::size_t i = 0; i < tree.size(); ++i) {
        const Vector replayed = tree.replay_component(tree.leaf(i).path, 1.6, sc.lifted_wd);
        CHECK((replayed - tree.leaf(i).component).norm() < 1e-10);
    }
}

TEST_CASE("pre-measurement amplitudes become path probabilities") {
    // state sqrt(0.3)|0> + sqrt(0.7)|1> on the reference factor, pointer division
    Vector rs(2);
    rs << std::sqrt(0.3), std::sqrt(0.7);
    SeededRng rng(5);
    const Vector env = random_state(3, rng);
    TotalSystem sys(2, 3, Matrix::Zero(2, 2), Matrix::Zero(3, 3), Matrix::Zero(6, 6));
    Tolerances tol;
    tol.eps_r = 1e-6;  // H = 0: condition holds exactly
    BranchTree tree(sys.evolution(), tensor(rs, env), 0.0, tol);
    const Division l = lift(basis_group_division("ptr", 2, {{0}, {1}}), 3);
    CHECK(tree.split_all(l) == 1);
    REQUIRE(tree.size() == 2);
    CHECK(tree.leaf(0).probability() == doctest::Approx(0.3).epsilon(1e-9));
    CHECK(tree.leaf(1).probability() == doctest::Approx(0.7).epsilon(1e-9));
}

TEST_CASE("splitting orthogonal branches leaves the density unchanged") {
    Vector rs(2);
    rs << std::sqrt(0.4), std::sqrt(0.6);
    TotalSystem sys(2, 2, Matrix::Zero(2, 2), Matrix::Zero(2, 2), Matrix::Zero(4, 4));
    Tolerances tol;
    BranchTree tree(sys.evolution(), tensor(rs, basis_state(2, 0)), 0.0, tol);
    const Division l = lift(basis_group_division("ptr", 2, {{0}, {1}}), 2);
    tree.split_all(l);
    const Matrix rho_before = tree.density();
    // branches already lie in orthogonal subspaces: splitting again is a no-op
    CHECK(tree.split_all(l) == 0);
    CHECK((tree.density() - rho_before).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("tree density: rank-1 without splits, trace = total probability") {
    auto sc = make_random_scenario(44, 2, 4);
    BranchTree tree(sc.sys.evolution(), sc.psi0, 0.0, sc.tol);
    tree.advance_to(0.7);
    const Matrix rho = tree.density();
    CHECK(std::abs(rho.trace().real() - 1.0) < 1e-12);
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
    int nonzero = 0;
    for (Index i = 0; i < es.eigenvalues().size(); ++i) {
        if (es.eigenvalues()(i) > 1e-12) ++nonzero;
    }
    CHECK(nonzero == 1);

    tree.split_all(sc.lifted_wd.divisions[0]);
    CHECK(std::abs(tree.density().trace().real() - 1.0) < 1e-10);
}

TEST_CASE("phase recombination: identity and global-phase cases") {
    SeededRng rng(6);
    const Vector psi = random_state(6, rng);
    const Division l = lift(basis_group_division("k", 2, {{0}, {1}}), 3);
    CHECK((phase_recombination(psi, l.projectors[0], 0.0, 0.0) - psi).norm() < 1e-14);
    const Vector global = phase_recombination(psi, l.projectors[0], 0.9, 0.9);
    CHECK((global - std::exp(Complex(0, 0.9)) * psi).norm() < 1e-14);
}

TEST_CASE("phase recombination changes no component norm and no leakage") {
    SeededRng rng(7);
    auto sc = make_random_scenario(45, 2, 4);
    const Matrix& p = sc.lifted_wd.divisions[0].projectors[0];
    const Vector psi = sc.psi0;
    const double th1 = 2.0 * rng.uniform(), th2 = 2.0 * rng.uniform();
    const Vector rec = phase_recombination(psi, p, th1, th2);
    CHECK(std::abs((p * rec).norm() - (p * psi).norm()) < 1e-12);
    CHECK(std::abs((rec - p * rec).norm() - (psi - p * psi).norm()) < 1e-12);
    Tolerances tol;
    tol.eps_r = 1.0;
    tol.tau_s = 0.4;
    const double leak_a = component_leakage(*sc.sys.evolution(), p, psi, 0.0, tol);
    const double leak_b = component_leakage(*sc.sys.evolution(), p, rec, 0.0, tol);
    CHECK(leak_a == doctest::Approx(leak_b).epsilon(1e-12));
}

TEST_CASE("greedy run on a two-level crossing: splits exactly at qualification") {
    // block-form H_I: the pointer division qualifies everywhere; starting in a
    // superposition the first greedy sweep splits once and then stays put
    SeededRng rng(8);
    Matrix h_i = Matrix::Zero(8, 8);
    h_i.topLeftCorner(4, 4) = random_hermitian(4, rng);
    h_i.bottomRightCorner(4, 4) = random_hermitian(4, rng);
    TotalSystem sys(2, 4, Matrix::Zero(2, 2), random_hermitian(4, rng), h_i);
    Vector rs(2);
    rs << std::sqrt(0.5), std::sqrt(0.5);
    const Vector psi0 = tensor(rs, random_state(4, rng));
    DivisionSet wd;
    wd.divisions.push_back(lift(basis_group_division("k", 2, {{0}, {1}}), 4));
    Tolerances tol;
    tol.tau_s = 0.5;
    auto res = run_tree(sys.evolution(), psi0, 0.0, make_grid(0.0, 2.0, 0.25), wd, tol, SplitPolicy::greedy());
    CHECK(res.tree.size() == 2);
    CHECK(res.tree.events().size() == 1);
    CHECK(res.trace.front().split_event);
}
