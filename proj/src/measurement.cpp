#include "refsim/measurement.hpp"

#include "refsim/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace refsim {

namespace {
constexpr double kZeroWeight = 1e-24;
}

Vector MeasurementScheme::initial_state(const Vector& amplitudes) const {
    if (amplitudes.size() != dim_system) throw std::invalid_argument("MeasurementScheme: amplitude count mismatch");
    Vector sys = observable_basis * amplitudes;  // sum_a c_a |a>
    return tensor(basis_state(dim_pointer, ready_index), sys);
}

Vector MeasurementScheme::pointer_state(Index a) const {
    if (a < 0 || a >= dim_system) throw std::out_of_range("MeasurementScheme: outcome index out of range");
    return tensor(basis_state(dim_pointer, pointer_of.at(static_cast<std::size_t>(a))),
                  Vector(observable_basis.col(a)));
}

void MeasurementScheme::validate(double tol) const {
    if (dim_pointer < 1 || dim_system < 1) throw std::invalid_argument("MeasurementScheme: dims must be >= 1");
    if (static_cast<Index>(pointer_of.size()) != dim_system) {
        throw std::invalid_argument("MeasurementScheme: pointer map size mismatch");
    }
    for (std::size_t a = 0; a < pointer_of.size(); ++a) {
        if (pointer_of[a] < 0 || pointer_of[a] >= dim_pointer) {
            throw std::invalid_argument("MeasurementScheme: pointer index out of range");
        }
        for (std::size_t b = 0; b < a; ++b) {
            if (pointer_of[a] == pointer_of[b]) {
                throw std::invalid_argument("MeasurementScheme: pointer map must be injective");
            }
        }
    }
    require_square(observable_basis, dim_system, "MeasurementScheme: observable basis");
    if ((observable_basis.adjoint() * observable_basis - Matrix::Identity(dim_system, dim_system))
            .cwiseAbs()
            .maxCoeff() > tol) {
        throw std::invalid_argument("MeasurementScheme: observable basis not unitary");
    }
    require_square(premeasurement, dim(), "MeasurementScheme: premeasurement");
    if ((premeasurement.adjoint() * premeasurement - Matrix::Identity(dim(), dim())).cwiseAbs().maxCoeff() > tol) {
        throw std::invalid_argument("MeasurementScheme: premeasurement not unitary");
    }
    pointer_division.validate();

    // V(|R_0>|a>) must land in the mu(a) pointer subspace, system part |a>
    for (Index a = 0; a < dim_system; ++a) {
        Vector amps = Vector::Zero(dim_system);
        amps(a) = 1.0;
        const Vector w = premeasurement * initial_state(amps);
        const Vector expect = pointer_state(a);
        const double overlap = std::abs(expect.dot(w));
        if (std::abs(overlap - 1.0) > tol) {
            throw std::invalid_argument("MeasurementScheme: premeasurement does not map outcome " +
                                        std::to_string(a) + " onto its pointer state");
        }
    }
}

MeasurementScheme MeasurementScheme::pointer_shift(Index n_outcomes, Index dim_pointer) {
    if (n_outcomes < 1) throw std::invalid_argument("pointer_shift: need at least one outcome");
    if (dim_pointer < n_outcomes + 1) {
        throw std::invalid_argument("pointer_shift: dim_pointer must exceed the outcome count");
    }
    MeasurementScheme s;
    s.dim_pointer = dim_pointer;
    s.dim_system = n_outcomes;
    s.observable_basis = Matrix::Identity(n_outcomes, n_outcomes);
    s.ready_index = 0;
    for (Index a = 0; a < n_outcomes; ++a) s.pointer_of.push_back(a + 1);

    std::vector<std::vector<Index>> groups;
    for (Index i = 0; i < dim_pointer; ++i) groups.push_back({i});
    s.pointer_division = basis_group_division("pointer", dim_pointer, groups);

    Matrix shift = Matrix::Zero(dim_pointer, dim_pointer);
    for (Index i = 0; i < dim_pointer; ++i) shift((i + 1) % dim_pointer, i) = 1.0;

    s.premeasurement = Matrix::Zero(s.dim(), s.dim());
    Matrix power = Matrix::Identity(dim_pointer, dim_pointer);
    for (Index a = 0; a < n_outcomes; ++a) {
        power = shift * power;  // shift^{mu(a)} with mu(a) = a+1
        Matrix sys_proj = Matrix::Zero(n_outcomes, n_outcomes);
        sys_proj(a, a) = 1.0;
        s.premeasurement += tensor(power, sys_proj);
    }
    return s;
}

Matrix transition_operator(const Matrix& p_next, const Matrix& u_step, const Matrix& p_prev) {
    if (p_next.rows() != u_step.rows() || u_step.cols() != p_prev.rows()) {
        throw std::invalid_argument("transition_operator: dimension mismatch");
    }
    return p_next * u_step * p_prev;
}

double jump_probability(const Vector& psi_prev, const Matrix& l) {
    const double n2 = psi_prev.squaredNorm();
    if (n2 <= 0) throw std::invalid_argument("jump_probability: zero-norm state");
    return (l * psi_prev).squaredNorm() / n2;
}

OutcomeTable run_measurement(const MeasurementScheme& scheme, const Vector& amplitudes) {
    if (std::abs(amplitudes.squaredNorm() - 1.0) > 1e-10) {
        throw std::invalid_argument("run_measurement: amplitudes not normalized");
    }
    const Vector psi1 = scheme.premeasurement * scheme.initial_state(amplitudes);
    const Division lifted_pointer = lift(scheme.pointer_division, scheme.dim_system);

    OutcomeTable table;
    table.post_density = Matrix::Zero(scheme.dim(), scheme.dim());
    for (Index a = 0; a < scheme.dim_system; ++a) {
        OutcomeRow row;
        row.a = a;
        row.pointer_value = scheme.pointer_of[static_cast<std::size_t>(a)];
        const Matrix& proj = lifted_pointer.projectors.at(static_cast<std::size_t>(row.pointer_value));
        const Vector branch = proj * psi1;
        row.probability = branch.squaredNorm();
        row.expected_probability = std::norm(amplitudes(a));
        if (row.probability > kZeroWeight) {
            row.post_state = branch / branch.norm();
            const double fid = std::abs(scheme.pointer_state(a).dot(row.post_state));
            row.post_state_residual = std::sqrt(std::max(0.0, 2.0 - 2.0 * fid));
            const Matrix rho = row.post_state * row.post_state.adjoint();
            row.reduced_system = partial_trace_sys(rho, scheme.dim_pointer, scheme.dim_system);
        } else {
            row.post_state = Vector::Zero(scheme.dim());
            row.reduced_system = Matrix::Zero(scheme.dim_system, scheme.dim_system);
        }
        table.post_density += branch * branch.adjoint();
        table.probability_sum += row.probability;
        table.rows.push_back(std::move(row));
    }
    return table;
}

TrajectorySampler::TrajectorySampler(EvolutionPtr evo, std::vector<FrameInterval> intervals, Tolerances tol)
    : evo_(std::move(evo)), intervals_(std::move(intervals)), tol_(tol) {
    if (!evo_) throw std::invalid_argument("TrajectorySampler: null evolution");
    if (intervals_.empty()) throw std::invalid_argument("TrajectorySampler: empty schedule");
    tol_.validate();
    double prev_end = -std::numeric_limits<double>::infinity();
    for (const FrameInterval& iv : intervals_) {
        if (iv.t_end < iv.t_begin) throw std::invalid_argument("TrajectorySampler: interval with t_end < t_begin");
        if (iv.t_begin < prev_end) throw std::invalid_argument("TrajectorySampler: intervals overlap");
        if (iv.division.space_dim != evo_->dim()) {
            throw std::invalid_argument("TrajectorySampler: division not lifted to full space");
        }
        prev_end = iv.t_end;
    }
}

const TrajectorySampler::Node& TrajectorySampler::expand(const std::string& key, const Vector& state,
                                                         std::size_t interval) const {
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;

    Node node;
    node.state = state;
    // unitary stretch through interval `interval`, then the gap to the next
    const FrameInterval& cur = intervals_[interval];
    const FrameInterval& next = intervals_[interval + 1];
    Vector at_end = evo_->propagate(state, cur.t_begin, cur.t_end);
    Vector at_next = evo_->propagate(at_end, cur.t_end, next.t_begin);

    // qualification: every nonzero-component value of the next division must
    // satisfy the condition, otherwise the segment is recorded trivially
    bool all_ok = true;
    std::vector<int> values;
    std::vector<double> probs;
    std::vector<Vector> posts;
    for (std::size_t mu = 0; mu < next.division.size(); ++mu) {
        Vector comp = next.division.projectors[mu] * at_next;
        const double w = comp.squaredNorm();
        if (w <= kZeroWeight) continue;
        comp /= comp.norm();
        if (max_leakage(*evo_, next.division.projectors[mu], comp, next.t_begin, tol_) > tol_.eps_r) {
            all_ok = false;
            break;
        }
        values.push_back(static_cast<int>(mu));
        probs.push_back(w);
        posts.push_back(std::move(comp));
    }
    if (!all_ok || values.empty()) {
        node.trivial = true;
        node.carried = at_next;
    } else {
        node.values = std::move(values);
        node.probs = std::move(probs);
        node.posts = std::move(posts);
    }
    node.expanded = true;
    return memo_.emplace(key, std::move(node)).first->second;
}

TrajectoryResult TrajectorySampler::run(const Vector& psi0, std::uint64_t seed) const {
    if (psi0.size() != evo_->dim()) throw std::invalid_argument("TrajectorySampler: state dimension mismatch");
    SeededRng rng(seed);
    TrajectoryResult out;
    out.seed = seed;

    Vector state = psi0.normalized();
    std::string key = "0";
    for (std::size_t i = 0; i + 1 < intervals_.size(); ++i) {
        const Node& node = expand(key, state, i);
        const FrameInterval& cur = intervals_[i];
        const FrameInterval& next = intervals_[i + 1];
        TrajectoryJump jump;
        jump.t_from = cur.t_end;
        jump.t_to = next.t_begin;
        if (node.trivial) {
            jump.trivial_frame = true;
            jump.to_value = "I";
            jump.probability = 1.0;
            state = node.carried;
            key += "/I";
        } else {
            const double total = std::accumulate(node.probs.begin(), node.probs.end(), 0.0);
            const double u = rng.uniform() * total;
            double cum = 0.0;
            std::size_t pick = node.probs.size() - 1;
            for (std::size_t k = 0; k < node.probs.size(); ++k) {
                cum += node.probs[k];
                if (u < cum) {
                    pick = k;
                    break;
                }
            }
            const int mu = node.values[pick];
            jump.to_value = next.division.value_labels[static_cast<std::size_t>(mu)];
            jump.probability = node.probs[pick];
            out.path_probability *= jump.probability;
            state = node.posts[pick];
            key += "/" + jump.to_value;
        }
        out.jumps.push_back(jump);
    }
    const FrameInterval& last = intervals_.back();
    out.final_state = evo_->propagate(state, last.t_begin, last.t_end).normalized();
    return out;
}

TrajectoryResult run_fr_trajectory(EvolutionPtr evo, const std::vector<FrameInterval>& intervals, const Vector& psi0,
                                   const Tolerances& tol, std::uint64_t seed) {
    TrajectorySampler sampler(std::move(evo), intervals, tol);
    return sampler.run(psi0, seed);
}

PremeasurementTrajectory make_premeasurement_trajectory(const Vector& amplitudes, Index dim_pointer,
                                                        double coupling) {
    const Index n = amplitudes.size();
    if (n < 1) throw std::invalid_argument("make_premeasurement_trajectory: need at least one outcome");
    if (dim_pointer < n + 1) {
        throw std::invalid_argument("make_premeasurement_trajectory: dim_pointer must exceed the outcome count");
    }
    if (coupling <= 0) throw std::invalid_argument("make_premeasurement_trajectory: coupling must be > 0");
    if (std::abs(amplitudes.squaredNorm() - 1.0) > 1e-10) {
        throw std::invalid_argument("make_premeasurement_trajectory: amplitudes not normalized");
    }
    const Index dim = dim_pointer * n;

    Matrix h_meas = Matrix::Zero(dim, dim);
    for (Index a = 0; a < n; ++a) {
        Matrix x = Matrix::Zero(dim_pointer, dim_pointer);
        x(0, a + 1) = 1.0;
        x(a + 1, 0) = 1.0;
        Matrix sys_proj = Matrix::Zero(n, n);
        sys_proj(a, a) = 1.0;
        h_meas += tensor(x, sys_proj);
    }
    Matrix h_free = Matrix::Zero(dim, dim);
    for (Index i = 0; i < dim_pointer; ++i) {
        for (Index a = 0; a < n; ++a) {
            h_free(i * n + a, i * n + a) = 0.2 * static_cast<double>(i) + 0.05 * static_cast<double>(a);
        }
    }

    const double t_window0_end = 1.0;
    const double full_rotation = std::numbers::pi / 2.0 / coupling;
    const double t_window1_begin = t_window0_end + full_rotation;
    const double t_window1_end = t_window1_begin + 1.0;
    const double t_window2_begin = t_window1_end + 0.5 * full_rotation;
    const double t_window2_end = t_window2_begin + 1.0;

    auto free_form = std::make_shared<SpectralForm>(SpectralForm::decompose(h_free));
    auto meas_form = std::make_shared<SpectralForm>(SpectralForm::decompose(coupling * h_meas));
    auto evo = std::make_shared<PiecewiseEvolution>(
        std::vector<double>{t_window0_end, t_window1_begin, t_window1_end, t_window2_begin},
        std::vector<std::shared_ptr<const SpectralForm>>{free_form, meas_form, free_form, meas_form, free_form});

    std::vector<std::vector<Index>> groups;
    for (Index i = 0; i < dim_pointer; ++i) groups.push_back({i});
    const Division pointer = lift(basis_group_division("pointer", dim_pointer, groups), n);

    PremeasurementTrajectory out;
    out.evolution = std::move(evo);
    out.intervals = {FrameInterval{0.0, t_window0_end, pointer},
                     FrameInterval{t_window1_begin, t_window1_end, pointer}};
    out.third_interval = FrameInterval{t_window2_begin, t_window2_end, pointer};
    Vector ready = Vector::Zero(dim_pointer);
    ready(0) = 1.0;
    out.psi0 = tensor(ready, amplitudes);
    out.pointer_division = pointer;
    return out;
}

}  // namespace refsim
