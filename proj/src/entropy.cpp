#include "refsim/entropy.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace refsim {

double von_neumann_entropy(const Matrix& rho) {
    require_hermitian(rho, "von_neumann_entropy", 1e-8);
    const double tr = std::real(rho.trace());
    if (std::abs(tr - 1.0) > 1e-8) {
        throw std::invalid_argument("von_neumann_entropy: trace must be 1 (got " + std::to_string(tr) + ")");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
    double s = 0.0;
    for (Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double lam = es.eigenvalues()(i);
        if (lam < -1e-8) {
            throw std::invalid_argument("von_neumann_entropy: negative eigenvalue " + std::to_string(lam));
        }
        if (lam > 1e-14) s -= lam * std::log(lam);
    }
    return s;
}

double tree_entropy(const std::vector<double>& path_probabilities) {
    double s = 0.0;
    for (double p : path_probabilities) {
        if (p > 1e-14) s -= p * std::log(p);
    }
    return s;
}

double tree_entropy(const BranchTree& tree) { return tree_entropy(tree.probabilities()); }

void EntropySeries::validate_monotone(double tol) const {
    for (std::size_t i = 1; i < s_max.size(); ++i) {
        if (s_max[i] < s_max[i - 1] - tol) {
            throw std::runtime_error("EntropySeries: s_max decreased at index " + std::to_string(i));
        }
    }
}

EntropySeries max_entropy_series(EvolutionPtr evo, const Vector& psi0, double t0, const std::vector<double>& grid,
                                 const DivisionSet& lifted_wd, const Tolerances& tol) {
    const double n0 = psi0.norm();
    if (n0 <= 0) throw std::invalid_argument("max_entropy_series: zero initial state");
    TreeRunResult run = run_tree(std::move(evo), psi0 / n0, t0, grid, lifted_wd, tol, SplitPolicy::greedy());
    EntropySeries out = entropy_series_from_trace(run.trace);
    out.s_tree.clear();
    out.validate_monotone();
    return out;
}

EntropySeries entropy_series_from_trace(const std::vector<TreeRunPoint>& trace) {
    EntropySeries out;
    out.times.reserve(trace.size());
    for (const TreeRunPoint& p : trace) {
        out.times.push_back(p.time);
        const double s = tree_entropy(p.path_probabilities);
        out.s_tree.push_back(s);
        out.s_max.push_back(s);
        out.split_events.push_back(p.split_event);
    }
    return out;
}

}  // namespace refsim
