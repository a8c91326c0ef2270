#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "entrobound/geometry.hpp"

namespace entrobound::sysmodel {

/// An ODE x' = f(x) together with its Jacobian and per-simplex majorants on
/// the second- and third-order derivatives of the components of f. The
/// bounds are supplied analytically per model; the certification is only
/// rigorous with true majorants.
struct SystemModel {
    int n = 0;
    std::string name;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> f;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
    std::function<double(const geometry::Simplex&)> hessian_bound;  // B_nu
    std::function<double(const geometry::Simplex&)> third_bound;    // B_{3,nu}
};

struct LorenzParams {
    double sigma = 10.0;
    double r = 28.0;
    double b = 8.0 / 3.0;
    Eigen::Vector3d scale{24.5, 100.0, 100.0};

    void validate() const;  // sigma >= 1, b >= 2, scale > 0
};

/// The coordinate-scaled Lorenz system f(x) = S^{-1} g(Sx), S = diag(scale).
/// Second-derivative bound sx * max(sy/sz, sz/sy) on every simplex; the
/// components are quadratic, so the third-derivative bound is zero.
SystemModel lorenz_scaled(const LorenzParams& p);

/// Scaled box [-X,X] x [-Y,Y] x [0,Z] containing the dissipation region of
/// the scaled system (all attractors lie inside). Each bound is rounded
/// upward at the second decimal.
geometry::Box lorenz_dissipation_box(const LorenzParams& p);

/// f(x) = A x with constant Jacobian and zero derivative bounds.
SystemModel linear_model(const Eigen::MatrixXd& a);

struct IntegrationResult {
    std::vector<Eigen::VectorXd> states;  // x_0 .. x_steps
    Eigen::MatrixXd fundamental;          // X(t), X(0) = I
};

/// Fixed-step RK4 on the coupled system (x, X) with X' = Df(x) X. Throws if
/// the state norm exceeds the blow-up threshold. Diagnostic integrator; not
/// part of any certificate.
IntegrationResult integrate_with_variational(const SystemModel& model,
                                             const Eigen::VectorXd& x0, double t,
                                             int steps, double blowup = 1e9);

}  // namespace entrobound::sysmodel
