#pragma once

#include <Eigen/Dense>
#include <vector>

#include "entrobound/geometry.hpp"
#include "entrobound/sysmodel.hpp"

namespace entrobound::cpa {

/// Gradient of the affine interpolant on one simplex from its vertex values:
/// X^{-1} (v_1 - v_0, ..., v_n - v_0). Independent of which vertex is taken
/// as base.
Eigen::VectorXd gradient_from_vertex_values(const geometry::Simplex& s,
                                            const Eigen::VectorXd& values);

/// Continuous piecewise affine scalar field: per-vertex values, per-simplex
/// gradients (precomputed at construction). Immutable; evaluation is pure.
class CpaScalarField {
public:
    CpaScalarField(const geometry::Triangulation& tri, Eigen::VectorXd values);

    const geometry::Triangulation& triangulation() const { return *tri_; }
    const Eigen::VectorXd& values() const { return values_; }
    double value(int vertex) const { return values_(vertex); }
    const Eigen::VectorXd& gradient(int nu) const { return gradients_[nu]; }

    /// Barycentric interpolation; faces evaluate via the lowest-index
    /// containing simplex (value-irrelevant, the field is continuous).
    double eval(const Eigen::VectorXd& x) const;

    /// Gradient on the simplex entered by the forward orbit, dotted with
    /// f(x). Direction-aware simplex selection.
    double orbital_derivative(const Eigen::VectorXd& x,
                              const sysmodel::SystemModel& model) const;

private:
    const geometry::Triangulation* tri_;
    Eigen::VectorXd values_;
    std::vector<Eigen::VectorXd> gradients_;
};

/// CPA field of symmetric matrices: per-vertex matrices P(x_k), per-simplex
/// entry gradients w_ij, and per-simplex bounds C_nu (P(x_k) <= C_nu I) and
/// D_nu (|w_ij|_1 <= D_nu).
class CpaMatrixField {
public:
    CpaMatrixField(const geometry::Triangulation& tri,
                   std::vector<Eigen::MatrixXd> vertex_values);

    /// Constant field: same matrix everywhere, zero gradients, D_nu = 0.
    static CpaMatrixField constant(const geometry::Triangulation& tri,
                                   const Eigen::MatrixXd& p);

    const geometry::Triangulation& triangulation() const { return *tri_; }
    bool is_constant() const { return constant_; }
    const Eigen::MatrixXd& value(int vertex) const {
        return values_[constant_ ? 0 : vertex];
    }
    /// Gradient of entry (i, j) on simplex nu (i, j in any order).
    const Eigen::VectorXd& entry_gradient(int nu, int i, int j) const;
    double c_bound(int nu) const { return c_(nu); }
    double d_bound(int nu) const { return d_(nu); }
    void set_bounds(Eigen::VectorXd c, Eigen::VectorXd d);

    Eigen::MatrixXd eval(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd orbital_derivative(const Eigen::VectorXd& x,
                                       const sysmodel::SystemModel& model) const;

    /// Entry gradients dotted with v, as a symmetric matrix, on simplex nu.
    Eigen::MatrixXd gradient_form(int nu, const Eigen::VectorXd& v) const;

private:
    CpaMatrixField() = default;
    int entry_index(int i, int j) const;

    const geometry::Triangulation* tri_ = nullptr;
    int n_ = 0;
    bool constant_ = false;
    std::vector<Eigen::MatrixXd> values_;
    // per simplex, per upper-triangle entry (row-major i<=j)
    std::vector<std::vector<Eigen::VectorXd>> gradients_;
    Eigen::VectorXd c_, d_;
    Eigen::VectorXd zero_grad_;
};

/// The matrix P(x) Df(x) + Df(x)^T P(x) + (w_ij . f(x)), with the gradient
/// term taken on the simplex entered by the forward orbit through x. Its
/// largest eigenvalue relative to P(x) is the local expansion rate of the
/// metric along the flow.
Eigen::MatrixXd metric_derivative(const CpaMatrixField& p, const Eigen::VectorXd& x,
                                  const sysmodel::SystemModel& model);

/// Constant-metric version: P Df(x) + Df(x)^T P.
Eigen::MatrixXd metric_derivative(const Eigen::MatrixXd& p, const Eigen::VectorXd& x,
                                  const sysmodel::SystemModel& model);

}  // namespace entrobound::cpa
