// Branching trees of state-vector components.
//
// A tree starts from one initial vector. Whenever a leaf component satisfies
// the validity condition for some values of a division, the leaf splits into
// the selected projections plus the remainder projection; leaves stay
// unnormalized so that the components of any tree always sum back to the
// plain unitary evolution of the initial vector, and squared norms are the
// path probabilities.

#pragma once

#include "refsim/dynamics.hpp"

#include <string>
#include <vector>

namespace refsim {

// The projector family used at one split: the selected division values
// (those satisfying the condition) plus the remainder I - sum(selected).
struct SplitOperators {
    std::string division_label;
    std::vector<std::string> selected;   // value labels satisfying the condition
    std::vector<std::string> op_labels;  // selected labels, then "rest" if a remainder exists
    std::vector<Matrix> ops;
    bool has_remainder = false;

    static SplitOperators build(const Division& lifted, const std::vector<std::size_t>& selected_idx);
    void validate(double tol = 1e-10) const;  // completeness + mutual orthogonality
};

struct SplitStep {
    double time = 0.0;
    std::string division;
    std::string op_label;  // which projector this path took
};

struct Path {
    std::vector<SplitStep> steps;
    std::string key() const;  // "t=..:div=op|..." stable identifier
};

struct Branch {
    Path path;
    Vector component;  // unnormalized, at the tree's current time
    double probability() const { return component.squaredNorm(); }
};

struct SplitEvent {
    double time = 0.0;
    std::string division;
    std::string parent_key;
    std::vector<std::string> selected;
    std::vector<std::string> child_ops;
    std::vector<double> child_probabilities;
};

class BranchTree {
  public:
    BranchTree(EvolutionPtr evo, Vector initial, double t0, Tolerances tol);

    double start_time() const { return t0_; }
    double time() const { return t_; }
    const Vector& initial_state() const { return initial_; }
    const Tolerances& tolerances() const { return tol_; }
    const Evolution& evolution() const { return *evo_; }
    EvolutionPtr evolution_ptr() const { return evo_; }

    std::size_t size() const { return leaves_.size(); }
    const Branch& leaf(std::size_t i) const { return leaves_.at(i); }
    const std::vector<Branch>& leaves() const { return leaves_; }
    const std::vector<SplitEvent>& events() const { return events_; }

    // Evolve every leaf to time t (forward or backward).
    void advance_to(double t);

    // Values of the division whose condition holds on this leaf right now
    // (zero-norm components never qualify).
    std::vector<std::size_t> qualifying_values(std::size_t leaf, const Division& lifted) const;

    // Split a leaf on the given selection. Every selected value must satisfy
    // the condition (contract violation otherwise). Children with exactly
    // zero weight are dropped; a split that would reproduce the parent alone
    // is a no-op and returns false.
    bool split_leaf(std::size_t leaf, const Division& lifted, const std::vector<std::size_t>& selected_idx);

    // qualifying_values + split for one leaf / every leaf. split_all returns
    // the number of leaves that actually split.
    bool try_split(std::size_t leaf, const Division& lifted);
    int split_all(const Division& lifted);

    std::vector<double> probabilities() const;
    double total_probability() const;
    Vector total_vector() const;  // sum of components at the current time

    // Component rebuilt from scratch as the alternating propagator/projector
    // product along the path. Operators are resolved by label through the
    // same divisions the tree was split with.
    Vector replay_component(const Path& path, double t, const DivisionSet& lifted_wd) const;

    Matrix density() const;  // sum of |component><component|

  private:
    bool apply_split(std::size_t leaf, const Division& lifted, const std::vector<std::size_t>& selected_idx);

    EvolutionPtr evo_;
    double t0_, t_;
    Vector initial_;
    Tolerances tol_;
    std::vector<Branch> leaves_;
    std::vector<SplitEvent> events_;
};

// e^{i theta1} P |psi> + e^{i theta2} (I-P) |psi>. Component norms and the
// leakage of the P-condition are unchanged.
Vector phase_recombination(const Vector& psi, const Matrix& p_mu, double theta1, double theta2);

// How splits are scheduled along a grid run.
struct SplitPolicy {
    enum class Kind { None, Greedy, Scheduled };
    Kind kind = Kind::Greedy;
    std::vector<double> times;  // for Scheduled, matched to grid points within half a step

    static SplitPolicy none() { return {Kind::None, {}}; }
    static SplitPolicy greedy() { return {Kind::Greedy, {}}; }
    static SplitPolicy scheduled(std::vector<double> ts) { return {Kind::Scheduled, std::move(ts)}; }
};

struct TreeRunPoint {
    double time = 0.0;
    std::vector<double> path_probabilities;
    bool split_event = false;
};

struct TreeRunResult {
    BranchTree tree;
    std::vector<TreeRunPoint> trace;
};

// Drive a tree along a time grid, applying the split policy against every
// division of the (lifted) set at each grid point.
TreeRunResult run_tree(EvolutionPtr evo, const Vector& psi0, double t0, const std::vector<double>& grid,
                       const DivisionSet& lifted_wd, const Tolerances& tol, const SplitPolicy& policy);

std::vector<double> make_grid(double t0, double t_max, double step);

}  // namespace refsim
