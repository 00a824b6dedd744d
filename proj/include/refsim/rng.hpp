// Seeded random source used by every stochastic piece of the simulator.
//
// The generator is a named, fully specified pipeline: mt19937_64 -> 53-bit
// uniforms -> Box-Muller normals. Outputs depend only on the seed and the
// call sequence, so runs are reproducible bit-for-bit.

#pragma once

#include "refsim/types.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace refsim {

class SeededRng {
  public:
    explicit SeededRng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t raw() { return gen_(); }

    // uniform double in [0, 1)
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // standard normal via Box-Muller, one spare cached
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(th);
        has_spare_ = true;
        return r * std::cos(th);
    }

    Complex complex_normal() {
        const double re = normal();
        const double im = normal();
        return {re, im};
    }

  private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

inline Vector random_state(Index dim, SeededRng& rng) {
    Vector v(dim);
    for (Index i = 0; i < dim; ++i) v(i) = rng.complex_normal();
    v.normalize();
    return v;
}

inline Vector random_amplitudes(Index n, SeededRng& rng) { return random_state(n, rng); }

inline Matrix random_hermitian(Index dim, SeededRng& rng) {
    Matrix a(dim, dim);
    for (Index i = 0; i < dim; ++i)
        for (Index j = 0; j < dim; ++j) a(i, j) = rng.complex_normal();
    return (a + a.adjoint()) / 2.0;
}

// Haar-ish random unitary from the QR of a complex Gaussian matrix.
inline Matrix random_unitary(Index dim, SeededRng& rng) {
    Matrix a(dim, dim);
    for (Index i = 0; i < dim; ++i)
        for (Index j = 0; j < dim; ++j) a(i, j) = rng.complex_normal();
    Eigen::HouseholderQR<Matrix> qr(a);
    Matrix q = qr.householderQ();
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index i = 0; i < dim; ++i) {
        const Complex d = r(i, i);
        const double m = std::abs(d);
        q.col(i) *= (m > 0) ? d / m : Complex(1, 0);
    }
    return q;
}

}  // namespace refsim
