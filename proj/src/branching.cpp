#include "refsim/branching.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace refsim {

namespace {

std::string format_time(double t) {
    std::ostringstream os;
    os.precision(12);
    os << t;
    return os.str();
}

// Children with squared norm at or below this fraction of the parent weight
// are algebraic zeros up to roundoff and are dropped.
constexpr double kZeroWeight = 1e-24;

}  // namespace

SplitOperators SplitOperators::build(const Division& lifted, const std::vector<std::size_t>& selected_idx) {
    if (selected_idx.empty()) throw std::invalid_argument("SplitOperators: empty selection");
    SplitOperators out;
    out.division_label = lifted.label;
    Matrix sum = Matrix::Zero(lifted.space_dim, lifted.space_dim);
    for (std::size_t idx : selected_idx) {
        out.selected.push_back(lifted.value_labels.at(idx));
        out.op_labels.push_back(lifted.value_labels.at(idx));
        out.ops.push_back(lifted.projectors.at(idx));
        sum += lifted.projectors.at(idx);
    }
    Matrix rest = Matrix::Identity(lifted.space_dim, lifted.space_dim) - sum;
    if (rest.cwiseAbs().maxCoeff() > 1e-12) {
        out.has_remainder = true;
        out.op_labels.push_back("rest");
        out.ops.push_back(std::move(rest));
    }
    return out;
}

void SplitOperators::validate(double tol) const {
    if (ops.empty()) throw std::invalid_argument("SplitOperators: no operators");
    Matrix sum = Matrix::Zero(ops[0].rows(), ops[0].cols());
    for (std::size_t i = 0; i < ops.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if ((ops[i] * ops[j]).cwiseAbs().maxCoeff() > tol) {
                throw std::invalid_argument("SplitOperators: operators not mutually orthogonal");
            }
        }
        sum += ops[i];
    }
    if ((sum - Matrix::Identity(sum.rows(), sum.cols())).cwiseAbs().maxCoeff() > tol) {
        throw std::invalid_argument("SplitOperators: operators do not sum to identity");
    }
}

std::string Path::key() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (i) os << '|';
        os << "t=" << format_time(steps[i].time) << ":" << steps[i].division << "=" << steps[i].op_label;
    }
    return os.str();
}

BranchTree::BranchTree(EvolutionPtr evo, Vector initial, double t0, Tolerances tol)
    : evo_(std::move(evo)), t0_(t0), t_(t0), initial_(std::move(initial)), tol_(tol) {
    if (!evo_) throw std::invalid_argument("BranchTree: null evolution");
    if (initial_.size() != evo_->dim()) throw std::invalid_argument("BranchTree: state dimension mismatch");
    require_finite(initial_, "BranchTree");
    if (initial_.norm() <= 0) throw std::invalid_argument("BranchTree: zero initial state");
    tol_.validate();
    leaves_.push_back(Branch{Path{}, initial_});
}

void BranchTree::advance_to(double t) {
    if (t == t_) return;
    for (Branch& b : leaves_) b.component = evo_->propagate(b.component, t_, t);
    t_ = t;
}

std::vector<std::size_t> BranchTree::qualifying_values(std::size_t leaf, const Division& lifted) const {
    const Branch& b = leaves_.at(leaf);
    const double parent_weight = b.component.squaredNorm();
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < lifted.size(); ++i) {
        const Vector comp = lifted.projectors[i] * b.component;
        const double w = comp.squaredNorm();
        if (w <= kZeroWeight * parent_weight) continue;
        if (max_leakage(*evo_, lifted.projectors[i], comp / comp.norm(), t_, tol_) <= tol_.eps_r) {
            out.push_back(i);
        }
    }
    return out;
}

bool BranchTree::apply_split(std::size_t leaf, const Division& lifted,
                             const std::vector<std::size_t>& selected_idx) {
    const Branch parent = leaves_.at(leaf);
    const SplitOperators ops = SplitOperators::build(lifted, selected_idx);
    const double parent_weight = parent.component.squaredNorm();

    std::vector<Branch> children;
    for (std::size_t m = 0; m < ops.ops.size(); ++m) {
        Vector comp = ops.ops[m] * parent.component;
        if (comp.squaredNorm() <= kZeroWeight * parent_weight) continue;  // exact zero child
        Branch child;
        child.path = parent.path;
        child.path.steps.push_back(SplitStep{t_, lifted.label, ops.op_labels[m]});
        child.component = std::move(comp);
        children.push_back(std::move(child));
    }
    if (children.size() <= 1) return false;  // degenerate, leave the tree unchanged

    SplitEvent ev;
    ev.time = t_;
    ev.division = lifted.label;
    ev.parent_key = parent.path.key();
    ev.selected = ops.selected;
    for (const Branch& c : children) {
        ev.child_ops.push_back(c.path.steps.back().op_label);
        ev.child_probabilities.push_back(c.probability());
    }
    events_.push_back(std::move(ev));

    leaves_.erase(leaves_.begin() + static_cast<std::ptrdiff_t>(leaf));
    leaves_.insert(leaves_.begin() + static_cast<std::ptrdiff_t>(leaf), std::make_move_iterator(children.begin()),
                   std::make_move_iterator(children.end()));
    return true;
}

bool BranchTree::split_leaf(std::size_t leaf, const Division& lifted,
                            const std::vector<std::size_t>& selected_idx) {
    if (lifted.space_dim != evo_->dim()) throw std::invalid_argument("split_leaf: division not lifted to full space");
    const Branch& parent = leaves_.at(leaf);
    for (std::size_t idx : selected_idx) {
        const Vector comp = lifted.projectors.at(idx) * parent.component;
        const double n = comp.norm();
        if (n <= 0.0) {
            throw std::logic_error("split_leaf: selected value '" + lifted.value_labels.at(idx) +
                                   "' has zero component");
        }
        if (max_leakage(*evo_, lifted.projectors[idx], comp / n, t_, tol_) > tol_.eps_r) {
            throw std::logic_error("split_leaf: condition unsatisfied for selected value '" +
                                   lifted.value_labels.at(idx) + "'");
        }
    }
    return apply_split(leaf, lifted, selected_idx);
}

bool BranchTree::try_split(std::size_t leaf, const Division& lifted) {
    if (lifted.space_dim != evo_->dim()) throw std::invalid_argument("try_split: division not lifted to full space");
    const auto selected = qualifying_values(leaf, lifted);
    if (selected.empty()) return false;
    return apply_split(leaf, lifted, selected);
}

int BranchTree::split_all(const Division& lifted) {
    int splits = 0;
    // walk by index; a split substitutes children in place, skip past them
    for (std::size_t i = 0; i < leaves_.size();) {
        const std::size_t before = leaves_.size();
        if (try_split(i, lifted)) {
            ++splits;
            i += leaves_.size() - before + 1;
        } else {
            ++i;
        }
    }
    return splits;
}

std::vector<double> BranchTree::probabilities() const {
    std::vector<double> out;
    out.reserve(leaves_.size());
    for (const Branch& b : leaves_) out.push_back(b.probability());
    return out;
}

double BranchTree::total_probability() const {
    double s = 0.0;
    for (const Branch& b : leaves_) s += b.probability();
    return s;
}

Vector BranchTree::total_vector() const {
    Vector sum = Vector::Zero(evo_->dim());
    for (const Branch& b : leaves_) sum += b.component;
    return sum;
}

Vector BranchTree::replay_component(const Path& path, double t, const DivisionSet& lifted_wd) const {
    if (!path.steps.empty() && t < path.steps.back().time) {
        throw std::invalid_argument("replay_component: t precedes the last split of the path");
    }
    Vector psi = initial_;
    double t_prev = t0_;
    Path prefix;
    for (const SplitStep& s : path.steps) {
        psi = evo_->propagate(psi, t_prev, s.time);
        const Division* div = lifted_wd.find(s.division);
        if (!div) throw std::invalid_argument("replay_component: unknown division '" + s.division + "'");
        if (s.op_label == "rest") {
            // remainder operator depends on the selection recorded at the event
            const std::string pk = prefix.key();
            const SplitEvent* ev = nullptr;
            for (const SplitEvent& e : events_) {
                if (e.time == s.time && e.division == s.division && e.parent_key == pk) {
                    ev = &e;
                    break;
                }
            }
            if (!ev) throw std::invalid_argument("replay_component: no split event matches a 'rest' step");
            Matrix rest = Matrix::Identity(div->space_dim, div->space_dim);
            for (const std::string& v : ev->selected) rest -= div->projector(v);
            psi = rest * psi;
        } else {
            psi = div->projector(s.op_label) * psi;
        }
        prefix.steps.push_back(s);
        t_prev = s.time;
    }
    return evo_->propagate(psi, t_prev, t);
}

Matrix BranchTree::density() const {
    Matrix rho = Matrix::Zero(evo_->dim(), evo_->dim());
    for (const Branch& b : leaves_) rho += b.component * b.component.adjoint();
    return rho;
}

Vector phase_recombination(const Vector& psi, const Matrix& p_mu, double theta1, double theta2) {
    const Vector inside = p_mu * psi;
    const Vector outside = psi - inside;
    return std::exp(Complex(0, theta1)) * inside + std::exp(Complex(0, theta2)) * outside;
}

std::vector<double> make_grid(double t0, double t_max, double step) {
    if (step <= 0) throw std::invalid_argument("make_grid: step must be > 0");
    if (t_max < t0) throw std::invalid_argument("make_grid: t_max < t0");
    std::vector<double> out;
    const auto n = static_cast<long>(std::floor((t_max - t0) / step + 1e-9));
    for (long k = 0; k <= n; ++k) out.push_back(t0 + static_cast<double>(k) * step);
    if (out.back() < t_max - 1e-9 * step) out.push_back(t_max);
    return out;
}

TreeRunResult run_tree(EvolutionPtr evo, const Vector& psi0, double t0, const std::vector<double>& grid,
                       const DivisionSet& lifted_wd, const Tolerances& tol, const SplitPolicy& policy) {
    if (grid.empty()) throw std::invalid_argument("run_tree: empty grid");
    if (std::abs(grid.front() - t0) > 1e-12) throw std::invalid_argument("run_tree: grid must start at t0");
    const double step = grid.size() > 1 ? grid[1] - grid[0] : 1.0;

    BranchTree tree(std::move(evo), psi0, t0, tol);
    std::vector<TreeRunPoint> trace;
    trace.reserve(grid.size());

    auto scheduled_here = [&](double t) {
        for (double ts : policy.times) {
            if (std::abs(ts - t) <= 0.5 * step) return true;
        }
        return false;
    };

    for (double t : grid) {
        tree.advance_to(t);
        bool split_happened = false;
        const bool want_split = policy.kind == SplitPolicy::Kind::Greedy ||
                                (policy.kind == SplitPolicy::Kind::Scheduled && scheduled_here(t));
        if (want_split) {
            for (const Division& d : lifted_wd.divisions) {
                if (tree.split_all(d) > 0) split_happened = true;
            }
        }
        trace.push_back(TreeRunPoint{t, tree.probabilities(), split_happened});
    }
    return TreeRunResult{std::move(tree), std::move(trace)};
}

}  // namespace refsim
