#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "entrobound/cpa.hpp"
#include "entrobound/geometry.hpp"
#include "entrobound/metricopt.hpp"
#include "entrobound/sysmodel.hpp"

namespace entrobound::lyapopt {

/// Per-vertex upper bounds mu(x_k) on the largest generalized eigenvalue of
/// (A(x_k), P), plus where they came from.
struct VertexMuTable {
    enum class Provenance { DirectFormula, LpVariable };
    Eigen::VectorXd mu;
    Provenance provenance = Provenance::DirectFormula;
};

/// mu(x_k) = lambda_max(A(x_k), P) + h^2 * 2 n^3 * B3(x_k) * cond2(P), with
/// h the largest incident simplex diameter and B3(x_k) the largest incident
/// third-derivative bound. Exact (no correction) when B3 = 0.
VertexMuTable vertex_mu_simplified(const geometry::Triangulation& tstar,
                                   const sysmodel::SystemModel& model,
                                   const Eigen::MatrixXd& p, double c);

/// The linear program: minimize Q over V values and per-simplex gradient aux
/// a_{xi,k} subject to
///     -a_{xi,k} <= [grad V_xi]_k <= a_{xi,k}            (2n rows per simplex)
///     grad V_xi . f(x_l) + beta_xi sum_k a_{xi,k} + m_tilde mu(x_l) <= Q
///                                                       (n+1 rows per simplex)
/// with beta_xi = h_xi^2 n B*_xi by default (or a caller-supplied override).
class LpProblem {
public:
    struct Row {
        enum class Kind { GradLower, GradUpper, Vertex };
        Kind kind;
        int simplex;
        int index;  // coordinate (grad rows) or local vertex (vertex rows)
        std::vector<std::pair<long, double>> coeffs;  // (variable, coefficient)
        double rhs;
        std::string name;  // deterministic: G<i> / C<i>
    };

    const geometry::Triangulation& triangulation() const { return *tstar_; }
    int m_tilde() const { return m_tilde_; }
    const VertexMuTable& mu_table() const { return mu_; }
    const Eigen::VectorXd& beta() const { return beta_; }
    const Eigen::VectorXd& f_at_vertex(int v) const { return fvals_[v]; }

    long num_vertices() const { return tstar_->vertex_count(); }
    long num_simplices() const { return tstar_->simplex_count(); }
    long variable_count() const;  // #vertices + n * #simplices + 1
    long row_count() const;       // #simplices * (2n) + #simplices * (n+1)

    // Variable indexing: V_k = k, aux(s,c) = nv + s*n + c, Q last.
    long aux_index(long s, int c) const { return num_vertices() + s * tstar_->dim() + c; }
    long q_index() const { return num_vertices() + num_simplices() * tstar_->dim(); }
    std::string variable_name(long j) const;

    /// Rows in deterministic order (per simplex: gradient rows then vertex
    /// rows); used by the MPS writer and the post-hoc feasibility check.
    void for_each_row(const std::function<void(const Row&)>& fn) const;

private:
    friend LpProblem assemble_lp(const geometry::Triangulation&,
                                 const sysmodel::SystemModel&,
                                 const VertexMuTable&, int,
                                 const Eigen::VectorXd*);
    const geometry::Triangulation* tstar_ = nullptr;
    int m_tilde_ = 1;
    VertexMuTable mu_;
    Eigen::VectorXd beta_;
    std::vector<Eigen::VectorXd> fvals_;
};

LpProblem assemble_lp(const geometry::Triangulation& tstar,
                      const sysmodel::SystemModel& model,
                      const VertexMuTable& mu_table, int m_tilde,
                      const Eigen::VectorXd* err_bound = nullptr);

struct LpSolveOptions {
    long max_iterations = 5'000'000;
    int max_outer_rounds = 200;
    double v_box = 1e5;  // |V| box, auto-enlarged if it ever binds
};

struct LpSolution {
    Eigen::VectorXd v;    // per vertex
    Eigen::VectorXd aux;  // per simplex * n
    double q = 0.0;
    long iterations = 0;
    long rows_activated = 0;
    double max_row_violation = 0.0;  // post-hoc over the full row set
};

/// Revised primal simplex on the dual with outer row activation; exact
/// optimum of the assembled LP. Throws std::runtime_error on iteration cap
/// and std::logic_error if the LP turns out unbounded (assembly bug).
LpSolution solve_lp(const LpProblem& prob, const LpSolveOptions& opt = {});

/// Everything a third party needs to re-check the entropy bound without
/// re-running any optimization.
struct EntropyCertificate {
    // model
    std::string model_type;  // "lorenz" | "linear"
    sysmodel::LorenzParams lorenz;
    Eigen::MatrixXd linear_matrix;

    // grids
    std::optional<geometry::Box> metric_box;      // T, when a metric stage ran
    std::optional<geometry::GridSpec> metric_grid;
    geometry::Box lyap_box;  // T*
    geometry::GridSpec lyap_grid;

    // payload
    Eigen::MatrixXd p;  // constant metric
    double mu = 0.0;    // metric-stage parameter certified feasible
    double eps0 = 0.0;
    int m_tilde = 1;
    VertexMuTable mu_table;
    Eigen::VectorXd v_values;
    double q = 0.0;
    std::string err_bound_mode = "conservative";
    Eigen::VectorXd custom_beta;  // per simplex, only when err_bound_mode=="file"

    // tolerances
    double row_tol = 1e-7;     // relative, vertex rows
    double sample_tol = 1e-6;  // absolute, sampled checks

    std::string solver_info;

    sysmodel::SystemModel rebuild_model() const;
};

struct VerifyReport {
    long vertex_rows_checked = 0;
    long vertex_row_violations = 0;
    double worst_row_slack = 0.0;  // max over rows of lhs - Q (<= tol passes)
    long vertex_psd_violations = 0;
    double worst_vertex_psd_slack = 0.0;
    long samples = 0;
    long sample_psd_violations = 0;
    long sample_orbital_violations = 0;
    double worst_sample_psd_slack = 0.0;
    double worst_sample_orbital_slack = 0.0;
    bool clean() const {
        return vertex_row_violations == 0 && vertex_psd_violations == 0 &&
               sample_psd_violations == 0 && sample_orbital_violations == 0;
    }
};

/// Re-checks every vertex row of the LP exactly, the vertex LMIs
/// A(x_k) - mu(x_k) P <= 0, and at `samples` random interior points the
/// interpolated LMI and the orbital inequality V'(x) + m_tilde mu(x) <= Q.
VerifyReport verify_certificate(const EntropyCertificate& cert,
                                const sysmodel::SystemModel& model, long samples,
                                double tol = 1e-6, unsigned long seed = 20220901);

/// Monolithic second-stage semidefinite problem (export only): variables
/// mu(x_k), D^mu_xi, V(x_k), D^V_xi, Q over a refinement T* of T.
struct Op2FullSdp {
    int n = 0;
    int m_tilde = 1;
    const geometry::Triangulation* tri = nullptr;
    const geometry::Triangulation* tstar = nullptr;
    std::vector<metricopt::VariableInfo> variables;
    std::vector<metricopt::LmiBlock> blocks;
    Eigen::VectorXd objective;  // minimize Q
};

/// Throws std::invalid_argument unless T* refines T (same box, integer cell
/// factor per axis).
Op2FullSdp assemble_op2_full_sdp(const geometry::Triangulation& tri,
                                 const geometry::Triangulation& tstar,
                                 const sysmodel::SystemModel& model,
                                 const cpa::CpaMatrixField& p_field, int m_tilde);

sdpa::SdpaProblem to_sdpa(const Op2FullSdp& prob);

struct MTildeEstimate {
    int m_tilde = 0;
    int argmax_vertex = -1;
    long samples = 0;
};

/// Largest count of positive generalized eigenvalues of (A(x), P) over all
/// vertices and random sample points. Diagnostic evidence, not a proof.
MTildeEstimate estimate_m_tilde(const geometry::Triangulation& tstar,
                                const sysmodel::SystemModel& model,
                                const Eigen::MatrixXd& p, double tol,
                                long samples = 10000,
                                unsigned long seed = 20220902);

}  // namespace entrobound::lyapopt
