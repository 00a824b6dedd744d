// Pointer-style measurement schemes, Born-rule outcome tables, transition
// operators between validity intervals, and stochastic single-history
// trajectories driven by those transitions.
//
// Composite layout: H = H_pointer (x) H_system, pointer factor first.

#pragma once

#include "refsim/branching.hpp"
#include "refsim/rng.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace refsim {

// A premeasurement unitary correlating system eigenstates |a> with orthogonal
// pointer states |R_{mu(a)}>, plus the pointer division it writes to.
struct MeasurementScheme {
    Index dim_pointer = 0;
    Index dim_system = 0;
    Matrix observable_basis;      // columns |a> in the system factor (unitary)
    std::vector<Index> pointer_of;  // mu(a): pointer basis index per outcome, injective
    Index ready_index = 0;          // pointer "ready" basis index R_0
    Division pointer_division;      // on the pointer factor, one value per basis index
    Matrix premeasurement;          // V on the composite space

    Index dim() const { return dim_pointer * dim_system; }
    Vector initial_state(const Vector& amplitudes) const;  // |R_0> (x) sum_a c_a |a>
    Vector pointer_state(Index a) const;                   // |R_{mu(a)}> (x) |a>
    void validate(double tol = 1e-9) const;

    // V = sum_a shift^{mu(a) - ready} (x) |a><a|, a conditional cyclic
    // pointer shift. Needs dim_pointer > max(mu(a)).
    static MeasurementScheme pointer_shift(Index n_outcomes, Index dim_pointer);
};

// P_next U P_prev, the jump map between two validity intervals.
Matrix transition_operator(const Matrix& p_next, const Matrix& u_step, const Matrix& p_prev);

// <psi|L^dag L|psi> / <psi|psi>.
double jump_probability(const Vector& psi_prev, const Matrix& l);

struct OutcomeRow {
    Index a = 0;
    Index pointer_value = 0;
    double probability = 0.0;       // squared norm of the projected branch
    double expected_probability = 0.0;  // |c_a|^2
    double post_state_residual = 0.0;   // distance to |R_{mu(a)}>|a> up to phase
    Vector post_state;                  // normalized branch
    Matrix reduced_system;              // system factor density of the branch
};

struct OutcomeTable {
    std::vector<OutcomeRow> rows;
    double probability_sum = 0.0;
    Matrix post_density;  // sum_a |branch><branch| (pre-split description equivalent)
};

// Apply the premeasurement to |R_0>(sum c_a|a>) and split on the pointer
// division. amplitudes must be normalized within 1e-10.
OutcomeTable run_measurement(const MeasurementScheme& scheme, const Vector& amplitudes);

// One validity interval of a trajectory schedule: the division whose frame is
// valid and the interval it spans. Gaps between intervals carry the jumps.
struct FrameInterval {
    double t_begin = 0.0;
    double t_end = 0.0;
    Division division;  // lifted to the full space
};

struct TrajectoryJump {
    double t_from = 0.0, t_to = 0.0;
    std::string to_value;
    double probability = 0.0;  // conditional jump probability, Born weight of the sampled value
    bool trivial_frame = false;  // no value qualified; segment recorded in the trivial frame
};

struct TrajectoryResult {
    std::uint64_t seed = 0;
    std::vector<TrajectoryJump> jumps;
    double path_probability = 1.0;  // product of conditional jump probabilities
    Vector final_state;             // normalized
};

// Samples single histories through a fixed interval schedule. The branching
// structure reachable from one initial state is finite and deterministic, so
// candidate posts are computed once and memoized; run() only consumes
// randomness to pick a branch at each jump.
class TrajectorySampler {
  public:
    TrajectorySampler(EvolutionPtr evo, std::vector<FrameInterval> intervals, Tolerances tol);

    // psi0: normalized state at intervals.front().t_begin, inside one value
    // subspace of the first interval's division.
    TrajectoryResult run(const Vector& psi0, std::uint64_t seed) const;

  private:
    struct Node {
        Vector state;                // normalized state at interval start
        std::vector<double> probs;   // per division value of the next interval
        std::vector<int> values;
        std::vector<Vector> posts;   // normalized post-jump states
        bool trivial = false;        // condition failed for some value: no jump
        Vector carried;              // state carried through a trivial-frame gap
        bool expanded = false;
    };

    const Node& expand(const std::string& key, const Vector& state_at_interval_start, std::size_t interval) const;

    EvolutionPtr evo_;
    std::vector<FrameInterval> intervals_;
    Tolerances tol_;
    mutable std::map<std::string, Node> memo_;
};

TrajectoryResult run_fr_trajectory(EvolutionPtr evo, const std::vector<FrameInterval>& intervals,
                                   const Vector& psi0, const Tolerances& tol, std::uint64_t seed);

// Hamiltonian-generated premeasurement as a trajectory schedule: free
// evolution diagonal in the pointer and observable bases, then a coupling
// window whose duration drives a pi/2 rotation |R_0> -> |R_{a+1}> conditioned
// on the system state, then a second free window where the pointer division
// is valid again. A further partial (pi/4) rotation window and a third
// interval are included for multi-jump schedules.
struct PremeasurementTrajectory {
    EvolutionPtr evolution;
    std::vector<FrameInterval> intervals;  // the two standard intervals
    FrameInterval third_interval;          // after the partial second rotation
    Vector psi0;                           // |R_0> (x) sum_a c_a |a>
    Division pointer_division;             // lifted
};

PremeasurementTrajectory make_premeasurement_trajectory(const Vector& amplitudes, Index dim_pointer,
                                                        double coupling = 1.0);

}  // namespace refsim
