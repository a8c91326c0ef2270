#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <vector>

namespace entrobound::lp {

/// One column of a standard-form LP: entries (row, value) plus its cost.
struct SparseCol {
    std::vector<int> rows;
    std::vector<double> vals;
    double cost = 0.0;
};

enum class SimplexStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct SimplexOptions {
    long max_iterations = 5'000'000;
    int refactor_interval = 250;
    double pivot_tol = 1e-9;
    double feas_tol = 1e-7;  // Harris ratio-test relaxation
    double opt_tol = 1e-9;       // per-column relative reduced-cost tolerance
    int bland_trigger = 512;     // zero-step pivots in a row before Bland kicks in
};

struct SimplexResult {
    SimplexStatus status = SimplexStatus::IterationLimit;
    double objective = 0.0;
    Eigen::VectorXd z;    // primal values per column
    Eigen::VectorXd pi;   // simplex multipliers: B^T pi = c_B
    std::vector<int> basis;
    long iterations = 0;
};

/// Revised primal simplex for min c^T z s.t. E z = d, z >= 0, with columns
/// supplied sparse. Dantzig pricing with a Bland fallback during degeneracy
/// streaks; basis kept as a sparse LU refactorization plus an eta file.
/// Columns may be appended between solves, so callers can warm-start after
/// adding cuts or rows-turned-columns.
class RevisedSimplex {
public:
    explicit RevisedSimplex(int m);

    int rows() const { return m_; }
    int num_columns() const { return static_cast<int>(cols_.size()); }
    int add_column(SparseCol col);
    const SparseCol& column(int j) const { return cols_[j]; }
    void set_cost(int j, double c) { cols_[j].cost = c; }
    Eigen::VectorXd& rhs() { return d_; }
    const Eigen::VectorXd& rhs() const { return d_; }

    /// Solve starting from a given basis (must be nonsingular and primal
    /// feasible). Suitable for structured starts and warm restarts.
    SimplexResult solve_from_basis(std::vector<int> basis,
                                   const SimplexOptions& opt = {});

    /// Two-phase solve: artificial columns first, then the real costs.
    SimplexResult solve(const SimplexOptions& opt = {});

private:
    struct Eta {
        int pos;
        Eigen::VectorXd w;
    };

    void factorize(const std::vector<int>& basis);
    Eigen::VectorXd ftran(const Eigen::VectorXd& v);
    Eigen::VectorXd btran(const Eigen::VectorXd& v);
    SimplexResult iterate(std::vector<int> basis, const std::vector<double>& cost,
                          const std::vector<char>& allowed, const SimplexOptions& opt);

    int m_;
    Eigen::VectorXd d_;
    std::vector<SparseCol> cols_;

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
    std::vector<Eta> etas_;
};

/// Epigraph LP
///     min  tau + w.u   s.t.   g_r . u - tau <= b_r,   lo <= u <= hi,
/// solved through its dual in standard form, which keeps the basis at size
/// k+1 regardless of how many rows are active. Rows can be appended between
/// solves and the previous basis stays feasible, so cut loops and row
/// activation warm-start for free.
class MinimaxMaster {
public:
    /// jitter > 0 adds a deterministic perturbation of that magnitude to the
    /// u-part objective, which breaks the structural degeneracy of the dual
    /// start; the caller must absorb the (jitter * |u|_1)-sized objective
    /// error, e.g. by re-evaluating the true maximum at the returned point.
    MinimaxMaster(Eigen::VectorXd lo, Eigen::VectorXd hi, Eigen::VectorXd tie_cost,
                  double jitter = 0.0);

    int dimension() const { return k_; }
    int num_rows() const { return nrows_; }
    /// g given sparse over u; returns the row id.
    int add_row(const std::vector<int>& idx, const std::vector<double>& val,
                double rhs);

    struct Result {
        SimplexStatus status;
        Eigen::VectorXd u;
        double tau = 0.0;
        double objective = 0.0;  // tau + w.u
        long iterations = 0;
    };

    /// Requires at least one row. Later calls continue from the last basis.
    Result solve(const SimplexOptions& opt = {});

private:
    int k_;
    int nrows_ = 0;
    Eigen::VectorXd lo_, hi_, w_;
    RevisedSimplex lp_;
    std::vector<int> basis_;
    bool solved_ = false;
};

/// Plain box LP, min w.u s.t. g_r . u <= b_r, lo <= u <= hi, solved through
/// the same dual-column construction (basis stays k x k); rows appendable
/// between warm solves. Status Infeasible when the rows admit no box point.
class LinearBoxMaster {
public:
    LinearBoxMaster(Eigen::VectorXd lo, Eigen::VectorXd hi, Eigen::VectorXd cost);

    int add_row(const std::vector<int>& idx, const std::vector<double>& val,
                double rhs);

    struct Result {
        SimplexStatus status;
        Eigen::VectorXd u;
        double objective = 0.0;
        long iterations = 0;
    };

    Result solve(const SimplexOptions& opt = {});

private:
    int k_;
    int nrows_ = 0;
    Eigen::VectorXd lo_, hi_, w_;
    RevisedSimplex lp_;
    std::vector<int> basis_;
    bool solved_ = false;
};

}  // namespace entrobound::lp
