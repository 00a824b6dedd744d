// Dense complex linear algebra: tensor products, Hermitian spectral forms,
// eigendecomposition-based propagators, partial traces.
//
// Index convention for composite spaces: i_total = i_sys * dim_env + i_env
// (system-major, row-major Kronecker).

#pragma once

#include "refsim/types.hpp"

#include <memory>

namespace refsim {

// Kronecker products. Throws on dimension overflow past kMaxDim.
Matrix tensor(const Matrix& a, const Matrix& b);
Vector tensor(const Vector& a, const Vector& b);

Matrix identity(Index dim);
Vector basis_state(Index dim, Index i);
Matrix outer(const Vector& ket, const Vector& bra);

// Largest singular value.
double spectral_norm(const Matrix& a);

// Eigendecomposition of a Hermitian operator, V diag(lambda) V^dag.
// Built once per operator; exponentials of the operator are then cheap.
struct SpectralForm {
    Eigen::VectorXd eigenvalues;
    Matrix eigenvectors;  // unitary, columns

    static SpectralForm decompose(const Matrix& h, double hermit_tol = 1e-10);

    Index dim() const { return eigenvectors.rows(); }
    Matrix reconstruct() const;

    // exp(scale * H) applied to a vector / materialized as a matrix
    Vector apply_exp(Complex scale, const Vector& psi) const;
    Matrix exp_matrix(Complex scale) const;
};

// e^{-i H dt} (hbar = 1). Validates hermiticity; result unitary to ~1e-10.
Matrix propagator(const Matrix& h, double dt);

// Reduced operators of a composite-space operator. dim must equal dim_sys * dim_env.
Matrix partial_trace_env(const Matrix& rho, Index dim_sys, Index dim_env);
Matrix partial_trace_sys(const Matrix& rho, Index dim_sys, Index dim_env);

}  // namespace refsim
