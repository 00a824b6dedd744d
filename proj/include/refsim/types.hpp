// Shared scalar/matrix aliases and small numeric predicates.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace refsim {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;

// Dense desk-scale simulator: composite dimensions beyond this are refused.
inline constexpr Index kMaxDim = 4096;

inline bool is_hermitian(const Matrix& a, double tol = 1e-10) {
    if (a.rows() != a.cols()) return false;
    return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

inline void require_hermitian(const Matrix& a, const std::string& what, double tol = 1e-10) {
    if (a.rows() != a.cols()) {
        throw std::invalid_argument(what + ": matrix must be square");
    }
    const double dev = (a - a.adjoint()).cwiseAbs().maxCoeff();
    if (dev > tol) {
        throw std::invalid_argument(what + ": matrix not Hermitian (deviation " + std::to_string(dev) + ")");
    }
}

inline void require_square(const Matrix& a, Index dim, const std::string& what) {
    if (a.rows() != dim || a.cols() != dim) {
        throw std::invalid_argument(what + ": expected " + std::to_string(dim) + "x" + std::to_string(dim) +
                                    " matrix, got " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
    }
}

inline void require_finite(const Matrix& a, const std::string& what) {
    if (!a.allFinite()) throw std::invalid_argument(what + ": non-finite entries");
}

inline void require_finite(const Vector& v, const std::string& what) {
    if (!v.allFinite()) throw std::invalid_argument(what + ": non-finite entries");
}

}  // namespace refsim
