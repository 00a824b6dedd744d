#include "refsim/linalg.hpp"
#include "refsim/rng.hpp"

#include "doctest.h"
#include "oracles.hpp"

#include <cmath>

using namespace refsim;

namespace {
Matrix sigma_z() {
    Matrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}
Matrix sigma_x() {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}
}  // namespace

TEST_CASE("tensor of identities") {
    const Matrix i6 = tensor(identity(2), identity(3));
    CHECK((i6 - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("tensor basis bookkeeping") {
    Vector a(2), b(2);
    a << 1, 0;
    b << 0, 1;
    const Vector t = tensor(a, b);
    REQUIRE(t.size() == 4);
    CHECK(t(0) == Complex(0, 0));
    CHECK(t(1) == Complex(1, 0));
    CHECK(t(2) == Complex(0, 0));
    CHECK(t(3) == Complex(0, 0));
}

TEST_CASE("tensor spectrum of sigma_z x I") {
    const Matrix m = tensor(sigma_z(), identity(2));
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues()(0) == doctest::Approx(-1));
    CHECK(es.eigenvalues()(1) == doctest::Approx(-1));
    CHECK(es.eigenvalues()(2) == doctest::Approx(1));
    CHECK(es.eigenvalues()(3) == doctest::Approx(1));
}

TEST_CASE("tensor associativity up to index relabeling") {
    SeededRng rng(5);
    const Matrix a = random_hermitian(2, rng);
    const Matrix b = random_hermitian(3, rng);
    const Matrix c = random_hermitian(2, rng);
    CHECK((tensor(tensor(a, b), c) - tensor(a, tensor(b, c))).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("tensor capacity error") {
    CHECK_THROWS_AS(tensor(identity(kMaxDim / 2 + 1), identity(4)), std::invalid_argument);
}

TEST_CASE("tensor matches the direct Kronecker oracle") {
    SeededRng rng(7);
    const Matrix a = random_hermitian(3, rng);
    const Matrix b = random_hermitian(4, rng);
    CHECK((tensor(a, b) - oracle::kron_direct(a, b)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("propagator of H = 0 is the identity") {
    const Matrix u = propagator(Matrix::Zero(3, 3), 1.7);
    CHECK((u - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("propagator of sigma_z over pi is -I") {
    const Matrix u = propagator(sigma_z(), std::numbers::pi);
    CHECK((u + Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("propagator matches the scaling-and-squaring oracle") {
    SeededRng rng(42);
    const Matrix h = random_hermitian(8, rng);
    const Matrix u = propagator(h, 0.37);
    const Matrix u_ref = oracle::propagator_taylor(h, 0.37);
    CHECK((u - u_ref).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((u.adjoint() * u - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("propagator rejects non-Hermitian input") {
    Matrix bad(2, 2);
    bad << 0, 1, 0, 0;
    CHECK_THROWS_AS(propagator(bad, 0.1), std::invalid_argument);
}

TEST_CASE("propagator group law") {
    SeededRng rng(3);
    const Matrix h = random_hermitian(6, rng);
    const Matrix u1 = propagator(h, 0.4);
    const Matrix u2 = propagator(h, 0.9);
    const Matrix u12 = propagator(h, 1.3);
    CHECK((u1 * u2 - u12).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("propagator preserves norms") {
    SeededRng rng(9);
    const Matrix h = random_hermitian(5, rng);
    const Matrix u = propagator(h, 2.3);
    for (int i = 0; i < 5; ++i) {
        const Vector psi = random_state(5, rng);
        CHECK(std::abs((u * psi).norm() - 1.0) < 1e-10);
    }
}

TEST_CASE("spectral form reconstruction") {
    SeededRng rng(11);
    const Matrix h = random_hermitian(7, rng);
    const SpectralForm sf = SpectralForm::decompose(h);
    CHECK((sf.reconstruct() - h).norm() < 1e-10 * std::max(1.0, h.norm()));
}

TEST_CASE("partial trace of a product state") {
    SeededRng rng(13);
    const Vector a = random_state(2, rng);
    const Vector b = random_state(3, rng);
    const Matrix rho_a = a * a.adjoint();
    const Matrix rho_b = b * b.adjoint();
    const Matrix rho = tensor(rho_a, rho_b);
    CHECK((partial_trace_env(rho, 2, 3) - rho_a).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((partial_trace_sys(rho, 2, 3) - rho_b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("partial trace of a maximally entangled pair") {
    Vector bell = Vector::Zero(4);
    bell(0) = 1 / std::sqrt(2.0);
    bell(3) = 1 / std::sqrt(2.0);
    const Matrix red = partial_trace_env(bell * bell.adjoint(), 2, 2);
    CHECK((red - 0.5 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("partial trace matches the index-summation oracle") {
    SeededRng rng(17);
    const Vector psi = random_state(8, rng);
    const Matrix rho = psi * psi.adjoint();
    CHECK((partial_trace_env(rho, 2, 4) - oracle::ptrace_env_direct(rho, 2, 4)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(std::abs(partial_trace_env(rho, 2, 4).trace().real() - 1.0) < 1e-10);
}

TEST_CASE("partial trace dimension mismatch") {
    CHECK_THROWS_AS(partial_trace_env(Matrix::Identity(6, 6), 2, 4), std::invalid_argument);
}

TEST_CASE("spectral norm of a known matrix") {
    CHECK(spectral_norm(sigma_x()) == doctest::Approx(1.0));
    Matrix m(2, 2);
    m << 0, 1, -1, 0;  // commutator [P_1, sigma_x]
    CHECK(spectral_norm(m) == doctest::Approx(1.0));
}
