#include "entrobound/symlin.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace entrobound::symlin {

SymMatrix::SymMatrix(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        throw std::invalid_argument("SymMatrix: input must be square and nonempty");
    }
    m_ = 0.5 * (a + a.transpose());
}

double matrix_scale(const Eigen::MatrixXd& a) {
    if (a.size() == 0) return 1.0;
    return std::max(1.0, a.cwiseAbs().maxCoeff());
}

namespace {

double offdiag_norm(const Eigen::MatrixXd& a) {
    const int n = static_cast<int>(a.rows());
    double s = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
    return std::sqrt(2.0 * s);
}

// One cyclic sweep of Jacobi rotations over all upper-triangle pivots.
void jacobi_sweep(Eigen::MatrixXd& a, Eigen::MatrixXd& v) {
    const int n = static_cast<int>(a.rows());
    for (int p = 0; p < n - 1; ++p) {
        for (int q = p + 1; q < n; ++q) {
            const double apq = a(p, q);
            if (apq == 0.0) continue;
            const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
            const double t = (tau >= 0.0) ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                          : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
            const double c = 1.0 / std::sqrt(1.0 + t * t);
            const double s = t * c;
            const double app = a(p, p);
            const double aqq = a(q, q);
            for (int k = 0; k < n; ++k) {
                const double akp = a(k, p);
                const double akq = a(k, q);
                a(k, p) = c * akp - s * akq;
                a(k, q) = s * akp + c * akq;
            }
            for (int k = 0; k < n; ++k) {
                const double apk = a(p, k);
                const double aqk = a(q, k);
                a(p, k) = c * apk - s * aqk;
                a(q, k) = s * apk + c * aqk;
            }
            a(p, p) = app - t * apq;
            a(q, q) = aqq + t * apq;
            a(p, q) = a(q, p) = 0.0;
            for (int k = 0; k < n; ++k) {
                const double vkp = v(k, p);
                const double vkq = v(k, q);
                v(k, p) = c * vkp - s * vkq;
                v(k, q) = s * vkp + c * vkq;
            }
        }
    }
}

EigResult sorted_descending(const Eigen::MatrixXd& a, const Eigen::MatrixXd& v) {
    const int n = static_cast<int>(a.rows());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int i, int j) { return a(i, i) > a(j, j); });
    EigResult r;
    r.values.resize(n);
    r.vectors.resize(n, n);
    for (int i = 0; i < n; ++i) {
        r.values(i) = a(order[i], order[i]);
        r.vectors.col(i) = v.col(order[i]);
    }
    return r;
}

void require_pd(const Eigen::VectorXd& eigs, const char* who) {
    const double norm = std::max(std::abs(eigs(0)), std::abs(eigs(eigs.size() - 1)));
    if (eigs(eigs.size() - 1) <= 1e-12 * std::max(norm, 1e-300)) {
        throw std::domain_error(std::string(who) + ": matrix is not positive definite");
    }
}

}  // namespace

EigResult sym_eig(const SymMatrix& a) {
    const int n = a.size();
    Eigen::MatrixXd work = a.mat();
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
    const double stop = 1e-14 * std::max(work.norm(), 1e-300);
    constexpr int kMaxSweeps = 64;
    int sweep = 0;
    for (; sweep < kMaxSweeps; ++sweep) {
        if (offdiag_norm(work) <= stop) break;
        jacobi_sweep(work, v);
    }
    if (sweep == kMaxSweeps) {
        throw std::runtime_error("sym_eig: Jacobi sweep cap exceeded");
    }
    return sorted_descending(work, v);
}

EigResult gen_eig_pairs(const SymMatrix& a, const SymMatrix& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("gen_eig: dimension mismatch");
    }
    const EigResult eb = sym_eig(b);
    require_pd(eb.values, "gen_eig");
    const Eigen::VectorXd dinv = eb.values.cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd binvhalf =
        eb.vectors * dinv.asDiagonal() * eb.vectors.transpose();
    const SymMatrix c(binvhalf * a.mat() * binvhalf);
    EigResult r = sym_eig(c);
    r.vectors = binvhalf * r.vectors;
    return r;
}

Eigen::VectorXd gen_eig(const SymMatrix& a, const SymMatrix& b) {
    return gen_eig_pairs(a, b).values;
}

double lambda_max_gen(const SymMatrix& a, const SymMatrix& b) {
    return gen_eig(a, b)(0);
}

int count_positive_gen_eigs(const SymMatrix& a, const SymMatrix& b, double tol) {
    const Eigen::VectorXd vals = gen_eig(a, b);
    int count = 0;
    for (int i = 0; i < vals.size(); ++i) {
        if (vals(i) > tol) ++count;
    }
    return count;
}

SymMatrix sqrt_pd(const SymMatrix& b) {
    const EigResult e = sym_eig(b);
    require_pd(e.values, "sqrt_pd");
    const Eigen::VectorXd droot = e.values.cwiseSqrt();
    return SymMatrix(e.vectors * droot.asDiagonal() * e.vectors.transpose());
}

double cond2(const SymMatrix& p) {
    const EigResult e = sym_eig(p);
    require_pd(e.values, "cond2");
    return e.values(0) / e.values(e.values.size() - 1);
}

double psd_slack(const SymMatrix& a) {
    return sym_eig(a).values(0);
}

}  // namespace entrobound::symlin
