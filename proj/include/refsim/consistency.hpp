// Cross-branch coherence bookkeeping: the decoherence matrix of a tree, the
// consistency verdict between a tree's density description and the total
// vector, the allowed-region scan, time-reversal construction, nested
// prediction identities, and the history-functional cross-check.

#pragma once

#include "refsim/branching.hpp"

#include <string>
#include <utility>
#include <vector>

namespace refsim {

// D[mu](a, a') = <component_a| P_mu |component_a'> over all path pairs.
struct DecoherenceMatrix {
    double time = 0.0;
    std::string division_label;
    std::vector<std::string> value_labels;
    std::vector<std::string> path_keys;
    std::vector<Matrix> blocks;  // one path x path matrix per division value
    std::vector<double> path_probabilities;

    const Matrix& block(std::size_t mu) const { return blocks.at(mu); }
    // sum over values of the diagonal, equal to the path probabilities
    std::vector<double> diagonal_probability_sum() const;
};

DecoherenceMatrix decoherence_matrix(const BranchTree& tree, const Division& lifted);

// Verdict of the consistency requirement on one division.
//
// Off-diagonal size is measured on the probability scale,
//     |D_{aa'}|^2 / (D_aa * D_a'a'),
// the fraction of coherence surviving between two branches; pass means every
// pair of branches is below eps_d for every applicable value. Pairs where a
// diagonal is below the weight floor are skipped. Values whose validity
// condition fails on the total vector are not tested; when no value is
// testable the verdict is not applicable (distinct from fail).
struct ConsistencyVerdict {
    bool applicable = false;
    bool pass = false;
    double eps_d = 0.0;
    double max_offdiag = 0.0;      // worst normalized off-diagonal (probability scale)
    double max_offdiag_abs = 0.0;  // worst raw |D_{aa'}|, diagnostic
    std::vector<std::string> tested_values;
    std::string witness_value, witness_path_a, witness_path_b;
    double witness_ratio = 0.0;
};

inline constexpr double kPathWeightFloor = 1e-12;

ConsistencyVerdict check_principle(const BranchTree& tree, const Division& lifted, double eps_d);

// Forward state U(t, t0)|psi0>, handed back so the caller can restart it
// under the reversed evolution (make_reversed) where it deterministically
// refocuses into the initial subspace after t - t0.
Vector time_reversed_state(const Evolution& evo, const Vector& psi0, double t0, double t);
EvolutionPtr make_reversed(EvolutionPtr base, double pivot);

struct RegionViolation {
    double time = 0.0;
    std::string division;
    ConsistencyVerdict verdict;
};

struct RegionCheck {
    double time = 0.0;
    std::string division;
    bool applicable = false;
    bool pass = false;
    double max_offdiag = 0.0;
    std::size_t paths = 0;
};

struct AllowedRegionResult {
    bool pass = true;
    std::vector<RegionViolation> violations;  // first violation only, when present
    std::vector<RegionCheck> log;
    int checks_run = 0;
    BranchTree tree;
};

// Greedy tree over every division of the set; at each grid point every
// division's verdict must pass whenever it is applicable.
AllowedRegionResult allowed_region_test(EvolutionPtr evo, const Vector& psi0, double t0,
                                        const std::vector<double>& grid, const DivisionSet& lifted_wd,
                                        const Tolerances& tol);

// p_nu = p_{mu nu} p_mu for nested projectors (P_nu P_mu = P_nu). The
// residual is an operator identity and stays at rounding level.
struct NestedPrediction {
    double p_mu = 0.0;
    double p_mu_nu = 0.0;  // conditional
    double p_nu = 0.0;
    double residual = 0.0;
};

NestedPrediction nested_prediction_check(const Vector& psi, const Matrix& p_mu, const Matrix& p_nu,
                                         double nesting_tol = 1e-10);

// Chain of projection events at nondecreasing times.
using ProjectorChain = std::vector<std::pair<Matrix, double>>;

// Tr[ P^(n) U ... P^(1) U rho0 U^dag P'^(1) ... U^dag P'^(n) ] for two chains
// sharing the same event times. With chains built from two tree paths plus a
// final division projector this reproduces the decoherence-matrix entry.
Complex decoherence_functional(const Evolution& evo, const Matrix& rho0, double t0, const ProjectorChain& chain_ket,
                               const ProjectorChain& chain_bra);

// Chain representation of a tree path (resolving operators through the
// division set), for feeding decoherence_functional.
ProjectorChain path_chain(const BranchTree& tree, const Path& path, const DivisionSet& lifted_wd);

}  // namespace refsim
