#include "refsim/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>
#include <string>

namespace refsim {

namespace {

void check_tensor_dims(Index rows_a, Index rows_b, const char* what) {
    if (rows_a < 1 || rows_b < 1) throw std::invalid_argument(std::string(what) + ": dims must be >= 1");
    if (rows_a > kMaxDim / rows_b) {
        throw std::invalid_argument(std::string(what) + ": product dimension " + std::to_string(rows_a) + "*" +
                                    std::to_string(rows_b) + " exceeds capacity " + std::to_string(kMaxDim));
    }
}

}  // namespace

Matrix tensor(const Matrix& a, const Matrix& b) {
    check_tensor_dims(a.rows(), b.rows(), "tensor");
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Vector tensor(const Vector& a, const Vector& b) {
    check_tensor_dims(a.size(), b.size(), "tensor");
    Vector out(a.size() * b.size());
    for (Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
    return out;
}

Matrix identity(Index dim) { return Matrix::Identity(dim, dim); }

Vector basis_state(Index dim, Index i) {
    if (i < 0 || i >= dim) throw std::out_of_range("basis_state: index out of range");
    Vector v = Vector::Zero(dim);
    v(i) = 1.0;
    return v;
}

Matrix outer(const Vector& ket, const Vector& bra) { return ket * bra.adjoint(); }

double spectral_norm(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    // largest eigenvalue of A^dag A, robust for the small matrices used here
    Eigen::SelfAdjointEigenSolver<Matrix> es(a.adjoint() * a, Eigen::EigenvaluesOnly);
    const double top = es.eigenvalues().maxCoeff();
    return top > 0 ? std::sqrt(top) : 0.0;
}

SpectralForm SpectralForm::decompose(const Matrix& h, double hermit_tol) {
    require_finite(h, "SpectralForm");
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    require_hermitian(h, "SpectralForm", hermit_tol * scale);
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    if (es.info() != Eigen::Success) throw std::runtime_error("SpectralForm: eigendecomposition failed");
    SpectralForm out{es.eigenvalues(), es.eigenvectors()};
    const double err = (out.reconstruct() - h).norm();
    const double ref = std::max(h.norm(), 1e-300);
    if (err > 1e-10 * std::max(ref, 1.0)) {
        throw std::runtime_error("SpectralForm: reconstruction error " + std::to_string(err / ref));
    }
    return out;
}

Matrix SpectralForm::reconstruct() const {
    return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.adjoint();
}

Vector SpectralForm::apply_exp(Complex scale, const Vector& psi) const {
    if (psi.size() != dim()) throw std::invalid_argument("SpectralForm::apply_exp: dimension mismatch");
    Vector coeffs = eigenvectors.adjoint() * psi;
    for (Index i = 0; i < coeffs.size(); ++i) coeffs(i) *= std::exp(scale * eigenvalues(i));
    return eigenvectors * coeffs;
}

Matrix SpectralForm::exp_matrix(Complex scale) const {
    Vector phases(eigenvalues.size());
    for (Index i = 0; i < eigenvalues.size(); ++i) phases(i) = std::exp(scale * eigenvalues(i));
    return eigenvectors * phases.asDiagonal() * eigenvectors.adjoint();
}

Matrix propagator(const Matrix& h, double dt) {
    const SpectralForm sf = SpectralForm::decompose(h);
    return sf.exp_matrix(Complex(0.0, -dt));
}

namespace {

Matrix partial_trace_impl(const Matrix& rho, Index dim_sys, Index dim_env, bool over_env) {
    if (dim_sys < 1 || dim_env < 1) throw std::invalid_argument("partial_trace: dims must be >= 1");
    const Index dim = dim_sys * dim_env;
    require_square(rho, dim, "partial_trace");
    const Index keep = over_env ? dim_sys : dim_env;
    const Index drop = over_env ? dim_env : dim_sys;
    Matrix out = Matrix::Zero(keep, keep);
    for (Index i = 0; i < keep; ++i) {
        for (Index j = 0; j < keep; ++j) {
            Complex sum = 0.0;
            for (Index k = 0; k < drop; ++k) {
                const Index row = over_env ? i * dim_env + k : k * dim_env + i;
                const Index col = over_env ? j * dim_env + k : k * dim_env + j;
                sum += rho(row, col);
            }
            out(i, j) = sum;
        }
    }
    return out;
}

}  // namespace

Matrix partial_trace_env(const Matrix& rho, Index dim_sys, Index dim_env) {
    return partial_trace_impl(rho, dim_sys, dim_env, true);
}

Matrix partial_trace_sys(const Matrix& rho, Index dim_sys, Index dim_env) {
    return partial_trace_impl(rho, dim_sys, dim_env, false);
}

}  // namespace refsim
