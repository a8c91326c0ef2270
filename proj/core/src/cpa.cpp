#include "entrobound/cpa.hpp"

#include <cmath>
#include <stdexcept>

#include "entrobound/symlin.hpp"

namespace entrobound::cpa {

Eigen::VectorXd gradient_from_vertex_values(const geometry::Simplex& s,
                                            const Eigen::VectorXd& values) {
    const int n = static_cast<int>(s.shape_matrix.rows());
    if (values.size() != n + 1) {
        throw std::invalid_argument("gradient_from_vertex_values: need n+1 values");
    }
    Eigen::VectorXd diff(n);
    for (int k = 1; k <= n; ++k) diff(k - 1) = values(k) - values(0);
    return s.shape_inv * diff;
}

CpaScalarField::CpaScalarField(const geometry::Triangulation& tri,
                               Eigen::VectorXd values)
    : tri_(&tri), values_(std::move(values)) {
    if (values_.size() != tri.vertex_count()) {
        throw std::invalid_argument("CpaScalarField: one value per vertex required");
    }
    gradients_.reserve(tri.simplex_count());
    Eigen::VectorXd local(tri.dim() + 1);
    for (const auto& s : tri.simplices()) {
        for (int k = 0; k <= tri.dim(); ++k) local(k) = values_(s.vertex_ids[k]);
        gradients_.push_back(gradient_from_vertex_values(s, local));
    }
}

double CpaScalarField::eval(const Eigen::VectorXd& x) const {
    const int nu = tri_->locate(x);
    if (nu < 0) throw std::domain_error("CpaScalarField::eval: point outside domain");
    const Eigen::VectorXd lam = tri_->barycentric(nu, x);
    const auto& ids = tri_->simplex(nu).vertex_ids;
    double v = 0.0;
    for (int k = 0; k < lam.size(); ++k) v += lam(k) * values_(ids[k]);
    return v;
}

double CpaScalarField::orbital_derivative(const Eigen::VectorXd& x,
                                          const sysmodel::SystemModel& model) const {
    const int nu = tri_->locate_for_orbit(x, model.f(x));
    return gradients_[nu].dot(model.f(x));
}

int CpaMatrixField::entry_index(int i, int j) const {
    if (i > j) std::swap(i, j);
    // row-major upper triangle: (0,0),(0,1),...,(0,n-1),(1,1),...
    return i * n_ - i * (i - 1) / 2 + (j - i);
}

void CpaMatrixField::set_bounds(Eigen::VectorXd c, Eigen::VectorXd d) {
    if (c.size() != tri_->simplex_count() || d.size() != tri_->simplex_count()) {
        throw std::invalid_argument("CpaMatrixField::set_bounds: one bound per simplex");
    }
    c_ = std::move(c);
    d_ = std::move(d);
}

CpaMatrixField::CpaMatrixField(const geometry::Triangulation& tri,
                               std::vector<Eigen::MatrixXd> vertex_values)
    : tri_(&tri), n_(tri.dim()), values_(std::move(vertex_values)) {
    zero_grad_ = Eigen::VectorXd::Zero(n_);
    if (static_cast<int>(values_.size()) != tri.vertex_count()) {
        throw std::invalid_argument("CpaMatrixField: one matrix per vertex required");
    }
    for (auto& m : values_) {
        if (m.rows() != n_ || m.cols() != n_) {
            throw std::invalid_argument("CpaMatrixField: matrix dimension mismatch");
        }
        m = 0.5 * (m + m.transpose().eval());
    }
    const int nentries = n_ * (n_ + 1) / 2;
    gradients_.resize(tri.simplex_count());
    c_.resize(tri.simplex_count());
    d_.resize(tri.simplex_count());
    Eigen::VectorXd local(n_ + 1);
    for (int nu = 0; nu < tri.simplex_count(); ++nu) {
        const auto& s = tri.simplex(nu);
        auto& grads = gradients_[nu];
        grads.reserve(nentries);
        double dmax = 0.0;
        for (int i = 0; i < n_; ++i) {
            for (int j = i; j < n_; ++j) {
                for (int k = 0; k <= n_; ++k) local(k) = values_[s.vertex_ids[k]](i, j);
                grads.push_back(gradient_from_vertex_values(s, local));
                dmax = std::max(dmax, grads.back().lpNorm<1>());
            }
        }
        double cmax = 0.0;
        for (int vid : s.vertex_ids) {
            cmax = std::max(cmax, symlin::psd_slack(symlin::SymMatrix(values_[vid])));
        }
        c_(nu) = cmax;
        d_(nu) = dmax;
    }
}

CpaMatrixField CpaMatrixField::constant(const geometry::Triangulation& tri,
                                        const Eigen::MatrixXd& p) {
    CpaMatrixField f;
    f.tri_ = &tri;
    f.n_ = tri.dim();
    f.constant_ = true;
    f.zero_grad_ = Eigen::VectorXd::Zero(f.n_);
    f.values_.assign(1, 0.5 * (p + p.transpose().eval()));
    const double c = symlin::psd_slack(symlin::SymMatrix(p));
    f.c_ = Eigen::VectorXd::Constant(tri.simplex_count(), c);
    f.d_ = Eigen::VectorXd::Zero(tri.simplex_count());
    return f;
}

const Eigen::VectorXd& CpaMatrixField::entry_gradient(int nu, int i, int j) const {
    if (constant_) return zero_grad_;
    return gradients_[nu][entry_index(i, j)];
}

Eigen::MatrixXd CpaMatrixField::eval(const Eigen::VectorXd& x) const {
    if (constant_) {
        if (!tri_->box().contains(x, 1e-9)) {
            throw std::domain_error("CpaMatrixField::eval: point outside domain");
        }
        return values_[0];
    }
    const int nu = tri_->locate(x);
    if (nu < 0) throw std::domain_error("CpaMatrixField::eval: point outside domain");
    const Eigen::VectorXd lam = tri_->barycentric(nu, x);
    const auto& ids = tri_->simplex(nu).vertex_ids;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_, n_);
    for (int k = 0; k < lam.size(); ++k) m += lam(k) * values_[ids[k]];
    return 0.5 * (m + m.transpose().eval());
}

Eigen::MatrixXd CpaMatrixField::gradient_form(int nu, const Eigen::VectorXd& v) const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_, n_);
    if (constant_) return m;
    for (int i = 0; i < n_; ++i) {
        for (int j = i; j < n_; ++j) {
            const double val = gradients_[nu][entry_index(i, j)].dot(v);
            m(i, j) = val;
            m(j, i) = val;
        }
    }
    return m;
}

Eigen::MatrixXd CpaMatrixField::orbital_derivative(
    const Eigen::VectorXd& x, const sysmodel::SystemModel& model) const {
    if (constant_) return Eigen::MatrixXd::Zero(n_, n_);
    const int nu = tri_->locate_for_orbit(x, model.f(x));
    return gradient_form(nu, model.f(x));
}

Eigen::MatrixXd metric_derivative(const CpaMatrixField& p, const Eigen::VectorXd& x,
                                  const sysmodel::SystemModel& model) {
    const Eigen::MatrixXd df = model.jacobian(x);
    const Eigen::MatrixXd px = p.eval(x);
    Eigen::MatrixXd a = px * df + df.transpose() * px;
    if (!p.is_constant()) a += p.orbital_derivative(x, model);
    return 0.5 * (a + a.transpose().eval());
}

Eigen::MatrixXd metric_derivative(const Eigen::MatrixXd& p, const Eigen::VectorXd& x,
                                  const sysmodel::SystemModel& model) {
    const Eigen::MatrixXd df = model.jacobian(x);
    Eigen::MatrixXd a = p * df + df.transpose() * p;
    return 0.5 * (a + a.transpose().eval());
}

}  // namespace entrobound::cpa
