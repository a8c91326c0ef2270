#pragma once

#include <Eigen/Dense>

namespace entrobound::symlin {

/// Dense real symmetric matrix. The constructor symmetrizes its input, so
/// downstream code never has to worry about roundoff asymmetry.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(const Eigen::MatrixXd& a);

    int size() const { return static_cast<int>(m_.rows()); }
    const Eigen::MatrixXd& mat() const { return m_; }
    double operator()(int i, int j) const { return m_(i, j); }

private:
    Eigen::MatrixXd m_;
};

struct EigResult {
    Eigen::VectorXd values;   // descending
    Eigen::MatrixXd vectors;  // column i pairs with values(i)
};

/// max(1, max |a_ij|). All tolerances in this module are relative to it.
double matrix_scale(const Eigen::MatrixXd& a);

/// Eigendecomposition by cyclic Jacobi rotations. Eigenvectors are
/// orthonormal, A = V diag(values) V^T.
EigResult sym_eig(const SymMatrix& a);

/// Generalized eigenvalues of (A, B) with B positive definite, i.e. the
/// eigenvalues of B^{-1/2} A B^{-1/2}, descending.
Eigen::VectorXd gen_eig(const SymMatrix& a, const SymMatrix& b);

/// Same, but also returns generalized eigenvectors x_i (columns), normalized
/// so that x_i^T B x_j = delta_ij.
EigResult gen_eig_pairs(const SymMatrix& a, const SymMatrix& b);

/// Largest generalized eigenvalue: the least mu with A - mu B <= 0.
double lambda_max_gen(const SymMatrix& a, const SymMatrix& b);

/// Number of generalized eigenvalues strictly above tol.
int count_positive_gen_eigs(const SymMatrix& a, const SymMatrix& b, double tol);

/// Positive definite square root B^{1/2} = V D^{1/2} V^T.
SymMatrix sqrt_pd(const SymMatrix& b);

/// Spectral condition number lambda_max(P)/lambda_min(P) of a PD matrix.
double cond2(const SymMatrix& p);

/// Largest eigenvalue of A. A <= 0 iff the result is <= 0 (up to tolerance);
/// a positive value measures how far A is from the negative semidefinite cone.
double psd_slack(const SymMatrix& a);

}  // namespace entrobound::symlin
