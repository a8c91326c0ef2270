#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "entrobound/geometry.hpp"
#include "entrobound/sdpa.hpp"
#include "entrobound/sysmodel.hpp"

namespace entrobound::metricopt {

/// One LMI constraint M0 + sum_i y_i M_i <= 0 (negated form PSD), with the
/// matrices stored as upper-triangle entry lists.
struct LmiBlock {
    enum class Kind { MetricLower, MetricUpper, GradientAbs, VertexLmi };

    struct Entry {
        int r, c;  // r <= c
        double v;
    };

    Kind kind = Kind::VertexLmi;
    int simplex = -1;  // label; -1 for global blocks
    int vertex = -1;   // label (global vertex id)
    int dim = 0;
    std::vector<Entry> constant;
    std::vector<std::pair<int, std::vector<Entry>>> coeffs;

    Eigen::MatrixXd materialize(const Eigen::VectorXd& y) const;
};

struct VariableInfo {
    std::string name;
    double lo, hi;  // search box for the in-process solver
};

struct Op1Options {
    double c_cap = 0.0;           // 0: default 1e3 * eps0
    bool minimize_max_c = false;  // full-problem export objective only
};

/// Assembled semidefinite feasibility problem: find P (CPA or constant)
/// with eps0 I <= P(x_k) <= C I and A(x_k) - mu P(x_k) + h^2 E I <= 0 at
/// every simplex vertex.
struct Op1Problem {
    int n = 0;
    bool constant_p = true;
    double mu = 0.0, eps0 = 0.0, c_cap = 0.0;
    bool minimize_max_c = false;
    const geometry::Triangulation* tri = nullptr;

    std::vector<VariableInfo> variables;
    std::vector<LmiBlock> blocks;         // the full catalog, export/verify order
    std::vector<LmiBlock> solver_blocks;  // deduplicated per-vertex set (const mode)

    Eigen::VectorXd h;   // per-simplex diameter
    Eigen::VectorXd b2;  // per-simplex second-derivative bound B_nu
    Eigen::VectorXd b3;  // per-simplex third-derivative bound B_{3,nu}

    /// Interpolation-error constant n^2 [(1+4 sqrt n) B_nu D + 2 n B3_nu C].
    double e_bound(int nu, double c_nu, double d_nu) const;

    /// Decision vector of the constant-P problem for a given matrix.
    Eigen::VectorXd pack(const Eigen::MatrixXd& p, double c) const;
    /// Inverse of pack.
    void unpack(const Eigen::VectorXd& y, Eigen::MatrixXd& p, double& c) const;
};

Op1Problem assemble_op1_const(const geometry::Triangulation& tri,
                              const sysmodel::SystemModel& model, double mu,
                              double eps0, const Op1Options& opt = {});

Op1Problem assemble_op1_full(const geometry::Triangulation& tri,
                             const sysmodel::SystemModel& model, double mu,
                             double eps0, const Op1Options& opt = {});

struct BlockSlack {
    double slack = 0.0;  // max over blocks of psd_slack(M_b(y))
    int block = -1;      // argmax block index
    double scale = 1.0;  // max(1, largest entry magnitude seen)
};

/// Post-hoc check over every block in the catalog; solver-independent.
BlockSlack max_block_slack(const Op1Problem& prob, const Eigen::VectorXd& y);

struct FeasibilitySolveOptions {
    long max_rounds = 3000;
    int cuts_per_round = 16;
    double margin_scale = 1e-8;  // feasible needs slack < -margin_scale*scale
};

struct FeasibilityResult {
    enum class Status { Feasible, Infeasible, Inconclusive };
    Status status = Status::Inconclusive;
    Eigen::MatrixXd P;
    double C = 0.0;
    double max_slack = 0.0;   // post-hoc, at the returned point
    int worst_block = -1;     // most violated block at the best point seen
    double lower_bound = 0.0; // certified lower bound on min-max slack over the box
    long rounds = 0;
};

/// Constant-P feasibility by a cutting-plane scheme on the few matrix
/// entries: eigenvector cuts from the worst blocks, epigraph LP over the
/// box {P_ii in [eps0, C_cap], |P_ij| <= C_cap, C in [eps0, C_cap]}.
/// A returned P is accepted only after the post-hoc check over every block.
FeasibilityResult solve_const_feasibility(const Op1Problem& prob,
                                          const FeasibilitySolveOptions& opt = {});

struct BisectResult {
    double mu_star = 0.0;
    Eigen::MatrixXd P;
    double C = 0.0;
    int feasibility_solves = 0;
};

/// Outer bisection on mu: smallest mu (within tol) at which the inner solver
/// certifies feasibility. Throws std::domain_error if infeasible at mu_hi.
BisectResult bisect_mu(const geometry::Triangulation& tri,
                       const sysmodel::SystemModel& model, double eps0,
                       double mu_hi, double tol, const Op1Options& aopt = {},
                       const FeasibilitySolveOptions& sopt = {});

/// Numeric SDPA image of the problem; min c^T y s.t. sum y_i F_i - F0 >= 0.
sdpa::SdpaProblem to_sdpa(const Op1Problem& prob);

/// Audit comment lines: grid spec, mu, eps0, constant table.
std::vector<std::string> sdpa_comments(const Op1Problem& prob);

/// Writes the .dat-s file (comment header + sparse body).
void export_sdpa(const Op1Problem& prob, const std::string& path);

}  // namespace entrobound::metricopt
