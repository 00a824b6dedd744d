#include "refsim/division.hpp"
#include "refsim/linalg.hpp"
#include "refsim/rng.hpp"

#include "doctest.h"
#include "oracles.hpp"

using namespace refsim;

namespace {
Matrix sigma_x() {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}
}  // namespace

TEST_CASE("trivial division is a single identity projector") {
    const Division d = trivial_division(2);
    REQUIRE(d.size() == 1);
    CHECK(d.is_trivial());
    d.validate();
    CHECK((d.projectors[0] - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(d.complement(0).cwiseAbs().maxCoeff() == 0.0);  // no leakage target at all
}

TEST_CASE("lifting the trivial division gives the full identity") {
    const Division d = lift(trivial_division(2), 4);
    REQUIRE(d.size() == 1);
    CHECK((d.projectors[0] - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff() == 0.0);
    SeededRng rng(1);
    const Vector psi = random_state(8, rng);
    CHECK(std::real(psi.dot(d.complement(0) * psi)) == doctest::Approx(0.0));
}

TEST_CASE("lift preserves rank and invariants") {
    const Division d = basis_group_division("z", 2, {{0}, {1}});
    const Division l = lift(d, 2);
    l.validate();
    for (std::size_t i = 0; i < l.size(); ++i) {
        CHECK(std::real(l.projectors[i].trace()) == doctest::Approx(std::real(d.projectors[i].trace()) * 2));
    }
    // the mu = 0 projector annihilates |1> (x) anything
    SeededRng rng(2);
    const Vector chi = random_state(2, rng);
    const Vector v = tensor(basis_state(2, 1), chi);
    CHECK((l.projectors[0] * v).norm() < 1e-14);
}

TEST_CASE("lift of a random rank-1 division matches the Kronecker oracle") {
    SeededRng rng(3);
    const Matrix u = random_unitary(3, rng);
    Division d;
    d.label = "r";
    d.space_dim = 3;
    for (int i = 0; i < 3; ++i) {
        d.value_labels.push_back(std::to_string(i));
        d.projectors.push_back(u.col(i) * u.col(i).adjoint());
    }
    d.validate();
    const Division l = lift(d, 8);
    l.validate();
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK((l.projectors[i] - oracle::kron_direct(d.projectors[i], Matrix::Identity(8, 8)))
                  .cwiseAbs()
                  .maxCoeff() < 1e-14);
    }
}

TEST_CASE("eigenspace division clusters degenerate eigenvalues") {
    Matrix op = Matrix::Zero(4, 4);
    op(0, 0) = 1.0;
    op(1, 1) = 1.0;
    op(2, 2) = 2.0;
    op(3, 3) = 3.0;
    const Division d = eigenspace_division("spec", op);
    REQUIRE(d.size() == 3);
    d.validate();
    CHECK(std::real(d.projectors[0].trace()) == doctest::Approx(2.0));
}

TEST_CASE("division validation rejects bad families") {
    Division d;
    d.label = "bad";
    d.space_dim = 2;
    d.value_labels = {"a", "b"};
    d.projectors = {Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
    CHECK_THROWS_AS(d.validate(), std::invalid_argument);

    Division half;
    half.label = "half";
    half.space_dim = 2;
    half.value_labels = {"a"};
    half.projectors = {0.5 * Matrix::Identity(2, 2)};
    CHECK_THROWS_AS(half.validate(), std::invalid_argument);
}

TEST_CASE("stability check: energy eigenbasis division passes") {
    Matrix h = Matrix::Zero(2, 2);
    h(0, 0) = 0.3;
    h(1, 1) = 1.1;
    const Division d = basis_group_division("k", 2, {{0}, {1}});
    const StabilityReport rep = stability_check(d, h);
    CHECK(rep.pass);
    CHECK(rep.max_commutator < 1e-14);
    CHECK(rep.max_offblock < 1e-14);
}

TEST_CASE("stability check: sigma_x fails with unit commutator norm") {
    const Division d = basis_group_division("k", 2, {{0}, {1}});
    const StabilityReport rep = stability_check(d, sigma_x());
    CHECK_FALSE(rep.pass);
    CHECK(rep.max_commutator == doctest::Approx(1.0));  // hand-computed 2x2 value
    CHECK(rep.max_offblock == doctest::Approx(1.0));
}

TEST_CASE("stability check: trivial division passes for any Hamiltonian") {
    SeededRng rng(4);
    const Matrix h = random_hermitian(5, rng);
    const StabilityReport rep = stability_check(trivial_division(5), h);
    CHECK(rep.pass);
    CHECK(rep.max_commutator == doctest::Approx(0.0));
}

TEST_CASE("stability pass iff commutators vanish") {
    SeededRng rng(5);
    // build a Hamiltonian block-diagonal in a random 2+2 split: commutes
    const Matrix u = random_unitary(4, rng);
    Matrix hd = Matrix::Zero(4, 4);
    hd(0, 0) = 0.1;
    hd(1, 1) = 0.2;
    hd(2, 2) = 0.7;
    hd(3, 3) = 0.9;
    const Matrix h = u * hd * u.adjoint();
    Division d;
    d.label = "blocks";
    d.space_dim = 4;
    d.value_labels = {"lo", "hi"};
    d.projectors = {u.leftCols(2) * u.leftCols(2).adjoint(), u.rightCols(2) * u.rightCols(2).adjoint()};
    d.validate();
    CHECK(stability_check(d, h).pass);
}

TEST_CASE("division set validation catches duplicate labels") {
    DivisionSet wd;
    wd.divisions.push_back(basis_group_division("k", 2, {{0}, {1}}));
    wd.divisions.push_back(basis_group_division("k", 2, {{0, 1}}));
    CHECK_THROWS_AS(wd.validate(), std::invalid_argument);
}
