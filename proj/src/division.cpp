#include "refsim/division.hpp"

#include "refsim/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <set>
#include <stdexcept>

namespace refsim {

bool Division::is_trivial() const {
    if (projectors.size() != 1) return false;
    return (projectors[0] - Matrix::Identity(space_dim, space_dim)).cwiseAbs().maxCoeff() <= 1e-12;
}

int Division::index_of(const std::string& value) const {
    for (std::size_t i = 0; i < value_labels.size(); ++i)
        if (value_labels[i] == value) return static_cast<int>(i);
    return -1;
}

const Matrix& Division::projector(const std::string& value) const {
    const int i = index_of(value);
    if (i < 0) throw std::invalid_argument("Division '" + label + "': unknown value '" + value + "'");
    return projectors[static_cast<std::size_t>(i)];
}

Matrix Division::complement(std::size_t i) const {
    return Matrix::Identity(space_dim, space_dim) - projectors.at(i);
}

void Division::validate(double tol) const {
    if (space_dim < 1) throw std::invalid_argument("Division '" + label + "': dimension must be >= 1");
    if (projectors.empty()) throw std::invalid_argument("Division '" + label + "': no projectors");
    if (projectors.size() != value_labels.size()) {
        throw std::invalid_argument("Division '" + label + "': label/projector count mismatch");
    }
    std::set<std::string> seen(value_labels.begin(), value_labels.end());
    if (seen.size() != value_labels.size()) {
        throw std::invalid_argument("Division '" + label + "': duplicate value labels");
    }
    Matrix sum = Matrix::Zero(space_dim, space_dim);
    for (std::size_t i = 0; i < projectors.size(); ++i) {
        const Matrix& p = projectors[i];
        require_square(p, space_dim, "Division '" + label + "' value '" + value_labels[i] + "'");
        require_hermitian(p, "Division '" + label + "' value '" + value_labels[i] + "'", tol);
        if ((p * p - p).cwiseAbs().maxCoeff() > tol) {
            throw std::invalid_argument("Division '" + label + "' value '" + value_labels[i] + "': not idempotent");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if ((projectors[j] * p).cwiseAbs().maxCoeff() > tol) {
                throw std::invalid_argument("Division '" + label + "': values '" + value_labels[j] + "' and '" +
                                            value_labels[i] + "' not orthogonal");
            }
        }
        sum += p;
    }
    if ((sum - Matrix::Identity(space_dim, space_dim)).cwiseAbs().maxCoeff() > tol) {
        throw std::invalid_argument("Division '" + label + "': projectors do not sum to identity");
    }
}

Division trivial_division(Index dim) {
    if (dim < 1) throw std::invalid_argument("trivial_division: dim must be >= 1");
    Division d;
    d.label = "I";
    d.space_dim = dim;
    d.value_labels = {"I"};
    d.projectors = {Matrix::Identity(dim, dim)};
    return d;
}

Division lift(const Division& d, Index dim_env) {
    if (dim_env < 1) throw std::invalid_argument("lift: dim_env must be >= 1");
    Division out;
    out.label = d.label;
    out.space_dim = d.space_dim * dim_env;
    out.value_labels = d.value_labels;
    const Matrix id_env = Matrix::Identity(dim_env, dim_env);
    out.projectors.reserve(d.projectors.size());
    for (const Matrix& p : d.projectors) out.projectors.push_back(tensor(p, id_env));
    return out;
}

Division eigenspace_division(const std::string& label, const Matrix& op, double cluster_tol) {
    require_hermitian(op, "eigenspace_division");
    Eigen::SelfAdjointEigenSolver<Matrix> es(op);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigenspace_division: decomposition failed");
    const auto& vals = es.eigenvalues();
    const Matrix& vecs = es.eigenvectors();

    Division d;
    d.label = label;
    d.space_dim = op.rows();
    Index i = 0;
    int cluster = 0;
    while (i < vals.size()) {
        Index j = i;
        while (j + 1 < vals.size() && vals(j + 1) - vals(j) <= cluster_tol) ++j;
        Matrix p = Matrix::Zero(d.space_dim, d.space_dim);
        for (Index k = i; k <= j; ++k) p += vecs.col(k) * vecs.col(k).adjoint();
        d.projectors.push_back(std::move(p));
        d.value_labels.push_back("e" + std::to_string(cluster++));
        i = j + 1;
    }
    return d;
}

Division basis_group_division(const std::string& label, Index dim, const std::vector<std::vector<Index>>& groups,
                              const std::vector<std::string>& value_labels) {
    if (!value_labels.empty() && value_labels.size() != groups.size()) {
        throw std::invalid_argument("basis_group_division: label count mismatch");
    }
    std::vector<bool> used(static_cast<std::size_t>(dim), false);
    Division d;
    d.label = label;
    d.space_dim = dim;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        Matrix p = Matrix::Zero(dim, dim);
        for (Index idx : groups[g]) {
            if (idx < 0 || idx >= dim) throw std::invalid_argument("basis_group_division: index out of range");
            if (used[static_cast<std::size_t>(idx)]) {
                throw std::invalid_argument("basis_group_division: index listed twice");
            }
            used[static_cast<std::size_t>(idx)] = true;
            p(idx, idx) = 1.0;
        }
        d.projectors.push_back(std::move(p));
        d.value_labels.push_back(value_labels.empty() ? std::to_string(g) : value_labels[g]);
    }
    if (std::find(used.begin(), used.end(), false) != used.end()) {
        throw std::invalid_argument("basis_group_division: groups must cover every basis index");
    }
    return d;
}

StabilityReport stability_check(const Division& d, const Matrix& h, double tol) {
    require_square(h, d.space_dim, "stability_check");
    require_hermitian(h, "stability_check");
    d.validate();
    StabilityReport rep;
    rep.tolerance = tol;
    for (std::size_t a = 0; a < d.size(); ++a) {
        for (std::size_t b = 0; b < d.size(); ++b) {
            if (a == b) continue;
            const double n = spectral_norm(d.projectors[a] * h * d.projectors[b]);
            if (n > rep.max_offblock) {
                rep.max_offblock = n;
                rep.worst_pair_a = d.value_labels[a];
                rep.worst_pair_b = d.value_labels[b];
            }
        }
        const Matrix comm = d.projectors[a] * h - h * d.projectors[a];
        rep.max_commutator = std::max(rep.max_commutator, spectral_norm(comm));
    }
    rep.pass = rep.max_commutator <= tol;
    return rep;
}

void DivisionSet::validate(double tol) const {
    std::set<std::string> labels;
    for (const Division& d : divisions) {
        d.validate(tol);
        if (!labels.insert(d.label).second) {
            throw std::invalid_argument("DivisionSet: duplicate division label '" + d.label + "'");
        }
    }
}

const Division* DivisionSet::find(const std::string& label) const {
    for (const Division& d : divisions)
        if (d.label == label) return &d;
    return nullptr;
}

DivisionSet lift(const DivisionSet& wd, Index dim_env) {
    DivisionSet out;
    out.divisions.reserve(wd.divisions.size());
    for (const Division& d : wd.divisions) out.divisions.push_back(lift(d, dim_env));
    return out;
}

}  // namespace refsim
