// Divisions of a Hilbert space: complete families of mutually orthogonal
// projectors, labeled by the value they represent. The trivial division {I}
// is the single-projector family that is always valid.

#pragma once

#include "refsim/types.hpp"

#include <string>
#include <vector>

namespace refsim {

struct Division {
    std::string label;
    Index space_dim = 0;
    std::vector<std::string> value_labels;
    std::vector<Matrix> projectors;

    std::size_t size() const { return projectors.size(); }
    bool is_trivial() const;

    int index_of(const std::string& value) const;  // -1 when absent
    const Matrix& projector(std::size_t i) const { return projectors.at(i); }
    const Matrix& projector(const std::string& value) const;
    Matrix complement(std::size_t i) const;  // I - P_i

    // Hermitian + idempotent + mutually orthogonal + complete, all within tol.
    void validate(double tol = 1e-10) const;
};

Division trivial_division(Index dim);

// Tensor every projector with the identity of an attached environment space.
Division lift(const Division& d, Index dim_env);

// Division from eigenspaces of a Hermitian operator; eigenvalues closer than
// cluster_tol share a projector. Values labeled by cluster index.
Division eigenspace_division(const std::string& label, const Matrix& op, double cluster_tol = 1e-8);

// Division from groups of computational-basis indices. Groups must cover
// 0..dim-1 exactly once.
Division basis_group_division(const std::string& label, Index dim, const std::vector<std::vector<Index>>& groups,
                              const std::vector<std::string>& value_labels = {});

// How stable a division is under a Hamiltonian on the same space: the maximal
// inter-subspace block norm and the equivalent commutator norm.
struct StabilityReport {
    double max_offblock = 0.0;    // max over mu != mu' of ||P_mu H P_mu'||
    double max_commutator = 0.0;  // max over mu of ||[P_mu, H]||
    double tolerance = 0.0;
    bool pass = false;
    std::string worst_pair_a, worst_pair_b;
};

StabilityReport stability_check(const Division& d, const Matrix& h, double tol = 1e-8);

// The collection of divisions a scenario treats as candidate reference
// properties. The trivial division is implied and need not be listed.
struct DivisionSet {
    std::vector<Division> divisions;

    void validate(double tol = 1e-10) const;  // member validity + unique labels
    const Division* find(const std::string& label) const;
};

DivisionSet lift(const DivisionSet& wd, Index dim_env);

}  // namespace refsim
