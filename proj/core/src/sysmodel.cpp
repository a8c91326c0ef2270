#include "entrobound/sysmodel.hpp"

#include <cmath>
#include <stdexcept>

namespace entrobound::sysmodel {

void LorenzParams::validate() const {
    if (!(scale.array() > 0.0).all()) {
        throw std::invalid_argument("LorenzParams: scale must be positive");
    }
    if (sigma < 1.0 || b < 2.0) {
        throw std::invalid_argument("LorenzParams: need sigma >= 1 and b >= 2");
    }
}

SystemModel lorenz_scaled(const LorenzParams& p) {
    p.validate();
    const double sx = p.scale(0), sy = p.scale(1), sz = p.scale(2);
    const double sigma = p.sigma, r = p.r, b = p.b;
    const double b2 = sx * std::max(sy / sz, sz / sy);

    SystemModel m;
    m.n = 3;
    m.name = "lorenz";
    m.f = [=](const Eigen::VectorXd& v) {
        Eigen::VectorXd out(3);
        out(0) = -sigma * v(0) + sigma * (sy / sx) * v(1);
        out(1) = r * (sx / sy) * v(0) - v(1) - (sx * sz / sy) * v(0) * v(2);
        out(2) = -b * v(2) + (sx * sy / sz) * v(0) * v(1);
        return out;
    };
    m.jacobian = [=](const Eigen::VectorXd& v) {
        Eigen::MatrixXd j(3, 3);
        j << -sigma, sigma * (sy / sx), 0.0,
             r * (sx / sy) - (sx * sz / sy) * v(2), -1.0, -(sx * sz / sy) * v(0),
             (sx * sy / sz) * v(1), (sx * sy / sz) * v(0), -b;
        return j;
    };
    m.hessian_bound = [b2](const geometry::Simplex&) { return b2; };
    m.third_bound = [](const geometry::Simplex&) { return 0.0; };
    return m;
}

geometry::Box lorenz_dissipation_box(const LorenzParams& p) {
    p.validate();
    const double sigma = p.sigma, r = p.r, b = p.b;

    const double y_raw = b * r / (2.0 * std::sqrt(b - 1.0));
    const double z_raw = r + y_raw;
    const double c2 = 1.0 + (b - 2.0) * (b - 2.0) / (4.0 * (b - 1.0));
    const double arg =
        0.5 * (c2 * (sigma + r) * (sigma + r) - (y_raw - sigma) * (y_raw - sigma));
    if (arg < 0.0) {
        throw std::domain_error("lorenz_dissipation_box: bound chain degenerates");
    }
    const double x_raw = std::sqrt(arg);

    auto ceil2 = [](double v) { return std::ceil(v * 100.0) / 100.0; };
    const double x = ceil2(x_raw / p.scale(0));
    const double y = ceil2(y_raw / p.scale(1));
    const double z = ceil2(z_raw / p.scale(2));

    geometry::Box box;
    box.lo.resize(3);
    box.hi.resize(3);
    box.lo << -x, -y, 0.0;
    box.hi << x, y, z;
    return box;
}

SystemModel linear_model(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        throw std::invalid_argument("linear_model: matrix must be square");
    }
    SystemModel m;
    m.n = static_cast<int>(a.rows());
    m.name = "linear";
    m.f = [a](const Eigen::VectorXd& x) -> Eigen::VectorXd { return a * x; };
    m.jacobian = [a](const Eigen::VectorXd&) { return a; };
    m.hessian_bound = [](const geometry::Simplex&) { return 0.0; };
    m.third_bound = [](const geometry::Simplex&) { return 0.0; };
    return m;
}

IntegrationResult integrate_with_variational(const SystemModel& model,
                                             const Eigen::VectorXd& x0, double t,
                                             int steps, double blowup) {
    if (steps < 1) throw std::invalid_argument("integrate_with_variational: steps >= 1");
    const int n = model.n;
    const double h = t / steps;

    IntegrationResult out;
    out.states.reserve(steps + 1);
    out.states.push_back(x0);
    Eigen::MatrixXd X = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd x = x0;

    auto rhs = [&](const Eigen::VectorXd& xs, const Eigen::MatrixXd& Xs,
                   Eigen::VectorXd& dx, Eigen::MatrixXd& dX) {
        dx = model.f(xs);
        dX = model.jacobian(xs) * Xs;
    };

    Eigen::VectorXd k1(n), k2(n), k3(n), k4(n);
    Eigen::MatrixXd K1(n, n), K2(n, n), K3(n, n), K4(n, n);
    for (int s = 0; s < steps; ++s) {
        rhs(x, X, k1, K1);
        rhs(x + 0.5 * h * k1, X + 0.5 * h * K1, k2, K2);
        rhs(x + 0.5 * h * k2, X + 0.5 * h * K2, k3, K3);
        rhs(x + h * k3, X + h * K3, k4, K4);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        X += (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4);
        if (x.cwiseAbs().maxCoeff() > blowup) {
            throw std::runtime_error("integrate_with_variational: state norm exceeded blow-up threshold");
        }
        out.states.push_back(x);
    }
    out.fundamental = std::move(X);
    return out;
}

}  // namespace entrobound::sysmodel
