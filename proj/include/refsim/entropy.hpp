// Von Neumann entropy of density descriptions and of branching trees, and
// the greedy maximum-entropy series over a division set.

#pragma once

#include "refsim/branching.hpp"

#include <vector>

namespace refsim {

// -Tr(rho ln rho), natural log. rho must be Hermitian, PSD and unit trace
// within 1e-8; eigenvalues below 1e-14 count as exact zeros.
double von_neumann_entropy(const Matrix& rho);

// -sum_a P_a ln P_a over path probabilities.
double tree_entropy(const std::vector<double>& path_probabilities);
double tree_entropy(const BranchTree& tree);

struct EntropySeries {
    std::vector<double> times;
    std::vector<double> s_tree;      // entropy of the configured-policy tree
    std::vector<double> s_max;       // greedy (split-whenever-possible) entropy
    std::vector<bool> split_events;  // greedy split markers

    void validate_monotone(double tol = 1e-9) const;  // s_max never decreases
};

// Greedy lower bound of the supremum entropy over trees: split whenever any
// division value qualifies, record the entropy on the grid.
EntropySeries max_entropy_series(EvolutionPtr evo, const Vector& psi0, double t0, const std::vector<double>& grid,
                                 const DivisionSet& lifted_wd, const Tolerances& tol);

EntropySeries entropy_series_from_trace(const std::vector<TreeRunPoint>& trace);

}  // namespace refsim
