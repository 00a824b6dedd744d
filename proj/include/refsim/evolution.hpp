// Unitary time evolution providers.
//
// Everything downstream (validity conditions, branching trees, trajectories)
// talks to the Evolution interface, so a scenario can be driven by one
// time-independent Hamiltonian or by a piecewise schedule of them.
// propagate(psi, a, b) with b < a applies the inverse (adjoint) propagator.

#pragma once

#include "refsim/linalg.hpp"

#include <memory>
#include <vector>

namespace refsim {

class Evolution {
  public:
    virtual ~Evolution() = default;
    virtual Index dim() const = 0;
    virtual Vector propagate(const Vector& psi, double t_from, double t_to) const = 0;
    virtual Matrix unitary(double t_from, double t_to) const = 0;
};

using EvolutionPtr = std::shared_ptr<const Evolution>;

// Single time-independent Hamiltonian: U(t2,t1) = e^{-iH(t2-t1)}.
class HamiltonianEvolution final : public Evolution {
  public:
    explicit HamiltonianEvolution(const Matrix& h);
    explicit HamiltonianEvolution(SpectralForm sf);

    Index dim() const override { return form_->dim(); }
    Vector propagate(const Vector& psi, double t_from, double t_to) const override;
    Matrix unitary(double t_from, double t_to) const override;
    const SpectralForm& spectral() const { return *form_; }

  private:
    std::shared_ptr<const SpectralForm> form_;
};

// Piecewise-constant Hamiltonian schedule. boundaries[k] is the right edge of
// segment k; segment k covers (boundaries[k-1], boundaries[k]] and the last
// segment extends to +inf. forms.size() == boundaries.size() + 1.
class PiecewiseEvolution final : public Evolution {
  public:
    PiecewiseEvolution(std::vector<double> boundaries, std::vector<std::shared_ptr<const SpectralForm>> forms);

    Index dim() const override;
    Vector propagate(const Vector& psi, double t_from, double t_to) const override;
    Matrix unitary(double t_from, double t_to) const override;

    const std::vector<double>& boundaries() const { return boundaries_; }
    const SpectralForm& segment_form(std::size_t k) const { return *forms_.at(k); }

  private:
    std::size_t segment_up(double t) const;    // segment used when moving to larger t
    std::size_t segment_down(double t) const;  // segment used when moving to smaller t

    std::vector<double> boundaries_;
    std::vector<std::shared_ptr<const SpectralForm>> forms_;
};

// View of a base evolution run backwards from a pivot time: the state at
// reversed clock s is the base state at (pivot - s). For a single Hamiltonian
// this is exactly evolution under -H.
class ReversedEvolution final : public Evolution {
  public:
    ReversedEvolution(EvolutionPtr base, double pivot) : base_(std::move(base)), pivot_(pivot) {}

    Index dim() const override { return base_->dim(); }
    Vector propagate(const Vector& psi, double t_from, double t_to) const override {
        return base_->propagate(psi, pivot_ - t_from, pivot_ - t_to);
    }
    Matrix unitary(double t_from, double t_to) const override {
        return base_->unitary(pivot_ - t_from, pivot_ - t_to);
    }

  private:
    EvolutionPtr base_;
    double pivot_;
};

}  // namespace refsim
