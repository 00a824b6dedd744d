#include "refsim/consistency.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace refsim {

std::vector<double> DecoherenceMatrix::diagonal_probability_sum() const {
    std::vector<double> out(path_keys.size(), 0.0);
    for (const Matrix& b : blocks) {
        for (std::size_t a = 0; a < path_keys.size(); ++a) {
            out[a] += std::real(b(static_cast<Index>(a), static_cast<Index>(a)));
        }
    }
    return out;
}

DecoherenceMatrix decoherence_matrix(const BranchTree& tree, const Division& lifted) {
    if (lifted.space_dim != tree.evolution().dim()) {
        throw std::invalid_argument("decoherence_matrix: division not lifted to full space");
    }
    const auto& leaves = tree.leaves();
    const auto n = static_cast<Index>(leaves.size());

    DecoherenceMatrix out;
    out.time = tree.time();
    out.division_label = lifted.label;
    out.value_labels = lifted.value_labels;
    for (const Branch& b : leaves) {
        out.path_keys.push_back(b.path.key());
        out.path_probabilities.push_back(b.probability());
    }
    out.blocks.reserve(lifted.size());
    for (std::size_t mu = 0; mu < lifted.size(); ++mu) {
        Matrix d(n, n);
        std::vector<Vector> projected(leaves.size());
        for (std::size_t a = 0; a < leaves.size(); ++a) projected[a] = lifted.projectors[mu] * leaves[a].component;
        for (Index a = 0; a < n; ++a) {
            for (Index b = 0; b < n; ++b) {
                d(a, b) = leaves[static_cast<std::size_t>(a)].component.dot(projected[static_cast<std::size_t>(b)]);
            }
        }
        out.blocks.push_back(std::move(d));
    }
    return out;
}

ConsistencyVerdict check_principle(const BranchTree& tree, const Division& lifted, double eps_d) {
    ConsistencyVerdict v;
    v.eps_d = eps_d;

    const Vector total = tree.total_vector();
    const double total_norm = total.norm();
    if (total_norm <= 0) throw std::invalid_argument("check_principle: zero total vector");

    // which division values are testable: condition on the total vector
    std::vector<std::size_t> testable;
    for (std::size_t mu = 0; mu < lifted.size(); ++mu) {
        const Vector comp = lifted.projectors[mu] * total;
        const double n = comp.norm();
        if (n <= 0) continue;
        if (max_leakage(tree.evolution(), lifted.projectors[mu], comp / n, tree.time(), tree.tolerances()) <=
            tree.tolerances().eps_r) {
            testable.push_back(mu);
            v.tested_values.push_back(lifted.value_labels[mu]);
        }
    }
    if (testable.empty()) {
        v.applicable = false;
        v.pass = false;
        return v;
    }
    v.applicable = true;

    const DecoherenceMatrix dm = decoherence_matrix(tree, lifted);
    const auto n_paths = static_cast<Index>(dm.path_keys.size());
    bool ok = true;
    for (std::size_t mu : testable) {
        const Matrix& d = dm.blocks[mu];
        for (Index a = 0; a < n_paths; ++a) {
            const double daa = std::real(d(a, a));
            if (daa < kPathWeightFloor) continue;
            for (Index b = a + 1; b < n_paths; ++b) {
                const double dbb = std::real(d(b, b));
                if (dbb < kPathWeightFloor) continue;
                const double mag = std::abs(d(a, b));
                const double ratio = (mag * mag) / (daa * dbb);
                v.max_offdiag_abs = std::max(v.max_offdiag_abs, mag);
                if (ratio > v.max_offdiag) {
                    v.max_offdiag = ratio;
                    v.witness_value = lifted.value_labels[mu];
                    v.witness_path_a = dm.path_keys[static_cast<std::size_t>(a)];
                    v.witness_path_b = dm.path_keys[static_cast<std::size_t>(b)];
                    v.witness_ratio = ratio;
                }
                if (ratio > eps_d) ok = false;
            }
        }
    }
    v.pass = ok;
    return v;
}

Vector time_reversed_state(const Evolution& evo, const Vector& psi0, double t0, double t) {
    const double n = psi0.norm();
    if (n <= 0) throw std::invalid_argument("time_reversed_state: zero state");
    return evo.propagate(psi0 / n, t0, t);
}

EvolutionPtr make_reversed(EvolutionPtr base, double pivot) {
    if (!base) throw std::invalid_argument("make_reversed: null evolution");
    return std::make_shared<ReversedEvolution>(std::move(base), pivot);
}

AllowedRegionResult allowed_region_test(EvolutionPtr evo, const Vector& psi0, double t0,
                                        const std::vector<double>& grid, const DivisionSet& lifted_wd,
                                        const Tolerances& tol) {
    const double n0 = psi0.norm();
    if (n0 <= 0) throw std::invalid_argument("allowed_region_test: zero initial state");
    if (grid.empty()) throw std::invalid_argument("allowed_region_test: empty grid");

    BranchTree tree(evo, psi0 / n0, t0, tol);
    AllowedRegionResult res{true, {}, {}, 0, std::move(tree)};

    for (double t : grid) {
        res.tree.advance_to(t);
        for (const Division& d : lifted_wd.divisions) {
            ConsistencyVerdict v = check_principle(res.tree, d, tol.eps_d);
            ++res.checks_run;
            res.log.push_back(RegionCheck{t, d.label, v.applicable, v.pass, v.max_offdiag, res.tree.size()});
            if (v.applicable && !v.pass) {
                res.pass = false;
                res.violations.push_back(RegionViolation{t, d.label, std::move(v)});
                return res;
            }
        }
        for (const Division& d : lifted_wd.divisions) res.tree.split_all(d);
    }
    return res;
}

NestedPrediction nested_prediction_check(const Vector& psi, const Matrix& p_mu, const Matrix& p_nu,
                                         double nesting_tol) {
    if (psi.size() != p_mu.rows() || psi.size() != p_nu.rows()) {
        throw std::invalid_argument("nested_prediction_check: dimension mismatch");
    }
    if ((p_nu * p_mu - p_nu).cwiseAbs().maxCoeff() > nesting_tol) {
        throw std::invalid_argument("nested_prediction_check: projectors not nested (P_nu P_mu != P_nu)");
    }
    const double n2 = psi.squaredNorm();
    if (n2 <= 0) throw std::invalid_argument("nested_prediction_check: zero state");

    NestedPrediction out;
    const Vector mu_comp = p_mu * psi;
    out.p_mu = mu_comp.squaredNorm() / n2;
    if (out.p_mu <= 0) throw std::domain_error("nested_prediction_check: zero mu-component");
    out.p_nu = std::real(psi.dot(p_nu * psi)) / n2;
    out.p_mu_nu = std::real(mu_comp.dot(p_nu * mu_comp)) / mu_comp.squaredNorm();
    out.residual = std::abs(out.p_nu - out.p_mu_nu * out.p_mu);
    return out;
}

Complex decoherence_functional(const Evolution& evo, const Matrix& rho0, double t0, const ProjectorChain& chain_ket,
                               const ProjectorChain& chain_bra) {
    if (chain_ket.size() != chain_bra.size()) {
        throw std::invalid_argument("decoherence_functional: chain lengths differ");
    }
    require_square(rho0, evo.dim(), "decoherence_functional: rho0");
    double prev = t0;
    for (std::size_t i = 0; i < chain_ket.size(); ++i) {
        if (chain_ket[i].second != chain_bra[i].second) {
            throw std::invalid_argument("decoherence_functional: chains must share event times");
        }
        if (chain_ket[i].second < prev) {
            throw std::invalid_argument("decoherence_functional: event times must be nondecreasing");
        }
        prev = chain_ket[i].second;
    }

    Matrix acc = rho0;
    double t_prev = t0;
    for (std::size_t i = 0; i < chain_ket.size(); ++i) {
        const double t = chain_ket[i].second;
        if (t != t_prev) {
            const Matrix u = evo.unitary(t_prev, t);
            acc = u * acc * u.adjoint();
        }
        acc = chain_ket[i].first * acc * chain_bra[i].first.adjoint();
        t_prev = t;
    }
    return acc.trace();
}

ProjectorChain path_chain(const BranchTree& tree, const Path& path, const DivisionSet& lifted_wd) {
    ProjectorChain chain;
    Path prefix;
    for (const SplitStep& s : path.steps) {
        const Division* div = lifted_wd.find(s.division);
        if (!div) throw std::invalid_argument("path_chain: unknown division '" + s.division + "'");
        if (s.op_label == "rest") {
            const std::string pk = prefix.key();
            const SplitEvent* ev = nullptr;
            for (const SplitEvent& e : tree.events()) {
                if (e.time == s.time && e.division == s.division && e.parent_key == pk) {
                    ev = &e;
                    break;
                }
            }
            if (!ev) throw std::invalid_argument("path_chain: no split event matches a 'rest' step");
            Matrix rest = Matrix::Identity(div->space_dim, div->space_dim);
            for (const std::string& vlab : ev->selected) rest -= div->projector(vlab);
            chain.emplace_back(std::move(rest), s.time);
        } else {
            chain.emplace_back(div->projector(s.op_label), s.time);
        }
        prefix.steps.push_back(s);
    }
    return chain;
}

}  // namespace refsim
