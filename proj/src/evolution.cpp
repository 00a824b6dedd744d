#include "refsim/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace refsim {

HamiltonianEvolution::HamiltonianEvolution(const Matrix& h)
    : form_(std::make_shared<SpectralForm>(SpectralForm::decompose(h))) {}

HamiltonianEvolution::HamiltonianEvolution(SpectralForm sf)
    : form_(std::make_shared<SpectralForm>(std::move(sf))) {}

Vector HamiltonianEvolution::propagate(const Vector& psi, double t_from, double t_to) const {
    if (t_from == t_to) return psi;
    return form_->apply_exp(Complex(0.0, -(t_to - t_from)), psi);
}

Matrix HamiltonianEvolution::unitary(double t_from, double t_to) const {
    return form_->exp_matrix(Complex(0.0, -(t_to - t_from)));
}

PiecewiseEvolution::PiecewiseEvolution(std::vector<double> boundaries,
                                       std::vector<std::shared_ptr<const SpectralForm>> forms)
    : boundaries_(std::move(boundaries)), forms_(std::move(forms)) {
    if (forms_.empty()) throw std::invalid_argument("PiecewiseEvolution: needs at least one segment");
    if (forms_.size() != boundaries_.size() + 1) {
        throw std::invalid_argument("PiecewiseEvolution: forms.size() must be boundaries.size() + 1");
    }
    if (!std::is_sorted(boundaries_.begin(), boundaries_.end())) {
        throw std::invalid_argument("PiecewiseEvolution: boundaries must be sorted");
    }
    const Index d = forms_.front()->dim();
    for (const auto& f : forms_) {
        if (!f || f->dim() != d) throw std::invalid_argument("PiecewiseEvolution: segment dimension mismatch");
    }
}

Index PiecewiseEvolution::dim() const { return forms_.front()->dim(); }

std::size_t PiecewiseEvolution::segment_up(double t) const {
    // first boundary strictly greater than t
    return static_cast<std::size_t>(std::upper_bound(boundaries_.begin(), boundaries_.end(), t) -
                                    boundaries_.begin());
}

std::size_t PiecewiseEvolution::segment_down(double t) const {
    // segment whose half-open interval (lo, hi] contains t
    return static_cast<std::size_t>(std::lower_bound(boundaries_.begin(), boundaries_.end(), t) -
                                    boundaries_.begin());
}

Vector PiecewiseEvolution::propagate(const Vector& psi, double t_from, double t_to) const {
    Vector v = psi;
    double t = t_from;
    if (t_to > t_from) {
        while (t < t_to) {
            const std::size_t k = segment_up(t);
            const double stop = (k < boundaries_.size()) ? std::min(boundaries_[k], t_to) : t_to;
            v = forms_[k]->apply_exp(Complex(0.0, -(stop - t)), v);
            t = stop;
        }
    } else if (t_to < t_from) {
        while (t > t_to) {
            const std::size_t k = segment_down(t);
            const double lo = (k == 0) ? t_to : std::max(boundaries_[k - 1], t_to);
            v = forms_[k]->apply_exp(Complex(0.0, -(lo - t)), v);
            t = lo;
        }
    }
    return v;
}

Matrix PiecewiseEvolution::unitary(double t_from, double t_to) const {
    Matrix u = Matrix::Identity(dim(), dim());
    double t = t_from;
    if (t_to > t_from) {
        while (t < t_to) {
            const std::size_t k = segment_up(t);
            const double stop = (k < boundaries_.size()) ? std::min(boundaries_[k], t_to) : t_to;
            u = forms_[k]->exp_matrix(Complex(0.0, -(stop - t))) * u;
            t = stop;
        }
    } else if (t_to < t_from) {
        while (t > t_to) {
            const std::size_t k = segment_down(t);
            const double lo = (k == 0) ? t_to : std::max(boundaries_[k - 1], t_to);
            u = forms_[k]->exp_matrix(Complex(0.0, -(lo - t))) * u;
            t = lo;
        }
    }
    return u;
}

}  // namespace refsim
