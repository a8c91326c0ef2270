#include "entrobound/metricopt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "entrobound/simplex.hpp"
#include "entrobound/symlin.hpp"

namespace entrobound::metricopt {

namespace {

int upper_tri_count(int n) { return n * (n + 1) / 2; }

// Row-major upper-triangle index of entry (i, j), i <= j.
int tri_index(int n, int i, int j) {
    return i * n - i * (i - 1) / 2 + (j - i);
}

void add_entry(std::vector<LmiBlock::Entry>& list, int r, int c, double v) {
    if (v == 0.0) return;
    if (r > c) std::swap(r, c);
    list.push_back({r, c, v});
}

// Upper-triangle entries of E_ij Df + Df^T E_ij, where E_ij is the symmetric
// basis matrix of entry (i, j).
std::vector<LmiBlock::Entry> basis_jacobian_form(int n, int i, int j,
                                                 const Eigen::MatrixXd& df) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, n);
    e(i, j) = 1.0;
    e(j, i) = 1.0;
    const Eigen::MatrixXd k = e * df + df.transpose() * e;
    std::vector<LmiBlock::Entry> out;
    for (int r = 0; r < n; ++r) {
        for (int c = r; c < n; ++c) add_entry(out, r, c, k(r, c));
    }
    return out;
}

void append_identity(std::vector<LmiBlock::Entry>& list, int n, double v) {
    for (int r = 0; r < n; ++r) add_entry(list, r, r, v);
}

void append_sym_basis(std::vector<LmiBlock::Entry>& list, int i, int j, double v) {
    add_entry(list, std::min(i, j), std::max(i, j), v);
}

}  // namespace

Eigen::MatrixXd LmiBlock::materialize(const Eigen::VectorXd& y) const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
    auto apply = [&](const std::vector<Entry>& list, double w) {
        for (const Entry& e : list) {
            m(e.r, e.c) += w * e.v;
            if (e.r != e.c) m(e.c, e.r) += w * e.v;
        }
    };
    apply(constant, 1.0);
    for (const auto& [var, list] : coeffs) apply(list, y(var));
    return m;
}

double Op1Problem::e_bound(int nu, double c_nu, double d_nu) const {
    const double nn = static_cast<double>(n);
    return nn * nn *
           ((1.0 + 4.0 * std::sqrt(nn)) * b2(nu) * d_nu + 2.0 * nn * b3(nu) * c_nu);
}

Eigen::VectorXd Op1Problem::pack(const Eigen::MatrixXd& p, double c) const {
    Eigen::VectorXd y(upper_tri_count(n) + 1);
    int t = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) y(t++) = p(i, j);
    }
    y(t) = c;
    return y;
}

void Op1Problem::unpack(const Eigen::VectorXd& y, Eigen::MatrixXd& p, double& c) const {
    p.setZero(n, n);
    int t = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            p(i, j) = y(t);
            p(j, i) = y(t);
            ++t;
        }
    }
    c = y(t);
}

namespace {

void fill_simplex_constants(Op1Problem& prob, const geometry::Triangulation& tri,
                            const sysmodel::SystemModel& model) {
    const int ns = tri.simplex_count();
    prob.h.resize(ns);
    prob.b2.resize(ns);
    prob.b3.resize(ns);
    for (int nu = 0; nu < ns; ++nu) {
        const auto& s = tri.simplex(nu);
        prob.h(nu) = s.diameter;
        prob.b2(nu) = model.hessian_bound(s);
        prob.b3(nu) = model.third_bound(s);
    }
}

void validate_inputs(const geometry::Triangulation& tri,
                     const sysmodel::SystemModel& model, double mu, double eps0) {
    if (model.n != tri.dim()) {
        throw std::invalid_argument("assemble_op1: model/triangulation dimension mismatch");
    }
    if (!(eps0 > 0.0)) throw std::invalid_argument("assemble_op1: eps0 must be positive");
    if (!(mu >= 0.0)) throw std::invalid_argument("assemble_op1: mu must be nonnegative");
}

}  // namespace

Op1Problem assemble_op1_const(const geometry::Triangulation& tri,
                              const sysmodel::SystemModel& model, double mu,
                              double eps0, const Op1Options& opt) {
    validate_inputs(tri, model, mu, eps0);
    const int n = tri.dim();
    Op1Problem prob;
    prob.n = n;
    prob.constant_p = true;
    prob.mu = mu;
    prob.eps0 = eps0;
    prob.c_cap = opt.c_cap > 0.0 ? opt.c_cap : 1e3 * eps0;
    prob.minimize_max_c = opt.minimize_max_c;
    prob.tri = &tri;
    fill_simplex_constants(prob, tri, model);

    const int np = upper_tri_count(n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            prob.variables.push_back({"P_" + std::to_string(i + 1) + std::to_string(j + 1),
                                      i == j ? eps0 : -prob.c_cap, prob.c_cap});
        }
    }
    prob.variables.push_back({"C", eps0, prob.c_cap});
    const int c_var = np;

    // eps0 I - P <= 0
    LmiBlock lower;
    lower.kind = LmiBlock::Kind::MetricLower;
    lower.dim = n;
    append_identity(lower.constant, n, eps0);
    for (int i = 0, t = 0; i < n; ++i) {
        for (int j = i; j < n; ++j, ++t) {
            std::vector<LmiBlock::Entry> e;
            append_sym_basis(e, i, j, -1.0);
            lower.coeffs.emplace_back(t, std::move(e));
        }
    }
    prob.blocks.push_back(lower);

    // P - C I <= 0
    LmiBlock upper;
    upper.kind = LmiBlock::Kind::MetricUpper;
    upper.dim = n;
    for (int i = 0, t = 0; i < n; ++i) {
        for (int j = i; j < n; ++j, ++t) {
            std::vector<LmiBlock::Entry> e;
            append_sym_basis(e, i, j, 1.0);
            upper.coeffs.emplace_back(t, std::move(e));
        }
    }
    {
        std::vector<LmiBlock::Entry> e;
        append_identity(e, n, -1.0);
        upper.coeffs.emplace_back(c_var, std::move(e));
    }
    prob.blocks.push_back(upper);

    // Per-vertex coefficient matrices K_ij - mu E_ij, shared by every
    // incidence of the vertex.
    const int nverts = tri.vertex_count();
    std::vector<std::vector<std::vector<LmiBlock::Entry>>> vertex_coeffs(nverts);
    for (int v = 0; v < nverts; ++v) {
        const Eigen::MatrixXd df = model.jacobian(tri.vertex(v));
        auto& per = vertex_coeffs[v];
        per.resize(np);
        for (int i = 0, t = 0; i < n; ++i) {
            for (int j = i; j < n; ++j, ++t) {
                per[t] = basis_jacobian_form(n, i, j, df);
                append_sym_basis(per[t], i, j, -mu);  // may cancel; harmless
            }
        }
    }

    // A(x_k) - mu P + h^2 * 2 n^3 B3 C I <= 0, one block per (simplex, vertex).
    for (int nu = 0; nu < tri.simplex_count(); ++nu) {
        const auto& s = tri.simplex(nu);
        const double cfac = prob.h(nu) * prob.h(nu) * prob.e_bound(nu, 1.0, 0.0);
        for (int vid : s.vertex_ids) {
            LmiBlock b;
            b.kind = LmiBlock::Kind::VertexLmi;
            b.simplex = nu;
            b.vertex = vid;
            b.dim = n;
            for (int t = 0; t < np; ++t) b.coeffs.emplace_back(t, vertex_coeffs[vid][t]);
            if (cfac != 0.0) {
                std::vector<LmiBlock::Entry> e;
                append_identity(e, n, cfac);
                b.coeffs.emplace_back(c_var, std::move(e));
            }
            prob.blocks.push_back(std::move(b));
        }
    }

    // Solver view: the two bound blocks plus one block per vertex with the
    // worst incident h (the constraint for the largest diameter implies the
    // rest, the h^2 term being monotone).
    prob.solver_blocks.push_back(prob.blocks[0]);
    prob.solver_blocks.push_back(prob.blocks[1]);
    for (int v = 0; v < nverts; ++v) {
        double cmax = 0.0;
        for (int nu : tri.incident_simplices(v)) {
            cmax = std::max(cmax, prob.h(nu) * prob.h(nu) * prob.e_bound(nu, 1.0, 0.0));
        }
        LmiBlock b;
        b.kind = LmiBlock::Kind::VertexLmi;
        b.vertex = v;
        b.dim = n;
        for (int t = 0; t < np; ++t) b.coeffs.emplace_back(t, vertex_coeffs[v][t]);
        if (cmax != 0.0) {
            std::vector<LmiBlock::Entry> e;
            append_identity(e, n, cmax);
            b.coeffs.emplace_back(c_var, std::move(e));
        }
        prob.solver_blocks.push_back(std::move(b));
    }
    return prob;
}

Op1Problem assemble_op1_full(const geometry::Triangulation& tri,
                             const sysmodel::SystemModel& model, double mu,
                             double eps0, const Op1Options& opt) {
    validate_inputs(tri, model, mu, eps0);
    const int n = tri.dim();
    const int np = upper_tri_count(n);
    const int nverts = tri.vertex_count();
    const int ns = tri.simplex_count();

    Op1Problem prob;
    prob.n = n;
    prob.constant_p = false;
    prob.mu = mu;
    prob.eps0 = eps0;
    prob.c_cap = opt.c_cap > 0.0 ? opt.c_cap : 1e3 * eps0;
    prob.minimize_max_c = opt.minimize_max_c;
    prob.tri = &tri;
    fill_simplex_constants(prob, tri, model);

    // Variables: per-vertex P entries, then per simplex C_nu, D_nu^1..D_nu^n.
    auto pvar = [&](int vertex, int t) { return vertex * np + t; };
    for (int v = 0; v < nverts; ++v) {
        for (int i = 0; i < n; ++i) {
            for (int j = i; j < n; ++j) {
                prob.variables.push_back({"P_" + std::to_string(i + 1) +
                                              std::to_string(j + 1) + "[" +
                                              std::to_string(v) + "]",
                                          i == j ? eps0 : -prob.c_cap, prob.c_cap});
            }
        }
    }
    auto cvar = [&](int nu) { return nverts * np + nu * (1 + n); };
    auto dvar = [&](int nu, int k) { return cvar(nu) + 1 + k; };
    for (int nu = 0; nu < ns; ++nu) {
        prob.variables.push_back({"C[" + std::to_string(nu) + "]", eps0, prob.c_cap});
        for (int k = 0; k < n; ++k) {
            prob.variables.push_back(
                {"Daux[" + std::to_string(nu) + "][" + std::to_string(k) + "]", 0.0,
                 2.0 * prob.c_cap});
        }
    }
    int tvar = -1;
    if (prob.minimize_max_c) {
        tvar = static_cast<int>(prob.variables.size());
        prob.variables.push_back({"t", 0.0, prob.c_cap});
    }

    // Gradient coefficients: [w_ij]_c = sum_l wcoef(l, c) P_ij(x_l) with
    // wcoef(l>=1, .) = shape_inv.col(l-1), wcoef(0, .) = -sum of those.
    for (int nu = 0; nu < ns; ++nu) {
        const auto& s = tri.simplex(nu);
        Eigen::MatrixXd wcoef(n + 1, n);
        for (int l = 1; l <= n; ++l) wcoef.row(l) = s.shape_inv.col(l - 1).transpose();
        wcoef.row(0) = -wcoef.bottomRows(n).colwise().sum();
        const double cfac = prob.h(nu) * prob.h(nu) * 2.0 * n * n * n * prob.b3(nu);
        const double dfac =
            prob.h(nu) * prob.h(nu) * n * n * (1.0 + 4.0 * std::sqrt(double(n))) * prob.b2(nu);

        // eps0 I - P(x_k) <= 0 and P(x_k) - C_nu I <= 0 per vertex.
        for (int vid : s.vertex_ids) {
            LmiBlock bl;
            bl.kind = LmiBlock::Kind::MetricLower;
            bl.simplex = nu;
            bl.vertex = vid;
            bl.dim = n;
            append_identity(bl.constant, n, eps0);
            LmiBlock bu;
            bu.kind = LmiBlock::Kind::MetricUpper;
            bu.simplex = nu;
            bu.vertex = vid;
            bu.dim = n;
            for (int i = 0, t = 0; i < n; ++i) {
                for (int j = i; j < n; ++j, ++t) {
                    std::vector<LmiBlock::Entry> e;
                    append_sym_basis(e, i, j, -1.0);
                    bl.coeffs.emplace_back(pvar(vid, t), std::move(e));
                    std::vector<LmiBlock::Entry> e2;
                    append_sym_basis(e2, i, j, 1.0);
                    bu.coeffs.emplace_back(pvar(vid, t), std::move(e2));
                }
            }
            std::vector<LmiBlock::Entry> ec;
            append_identity(ec, n, -1.0);
            bu.coeffs.emplace_back(cvar(nu), std::move(ec));
            prob.blocks.push_back(std::move(bl));
            prob.blocks.push_back(std::move(bu));
        }

        // +-[w_ij]_c <= D_nu^c as 1x1 blocks.
        for (int i = 0; i < n; ++i) {
            for (int j = i; j < n; ++j) {
                const int t = tri_index(n, i, j);
                for (int c = 0; c < n; ++c) {
                    for (double sign : {1.0, -1.0}) {
                        LmiBlock g;
                        g.kind = LmiBlock::Kind::GradientAbs;
                        g.simplex = nu;
                        g.dim = 1;
                        for (int l = 0; l <= n; ++l) {
                            if (wcoef(l, c) != 0.0) {
                                g.coeffs.emplace_back(
                                    pvar(s.vertex_ids[l], t),
                                    std::vector<LmiBlock::Entry>{{0, 0, sign * wcoef(l, c)}});
                            }
                        }
                        g.coeffs.emplace_back(
                            dvar(nu, c), std::vector<LmiBlock::Entry>{{0, 0, -1.0}});
                        prob.blocks.push_back(std::move(g));
                    }
                }
            }
        }

        // A(x_k) - mu P(x_k) + h^2 E_nu I <= 0 per vertex.
        for (int l = 0; l <= n; ++l) {
            const int vid = s.vertex_ids[l];
            const Eigen::VectorXd fx = model.f(tri.vertex(vid));
            const Eigen::MatrixXd df = model.jacobian(tri.vertex(vid));
            LmiBlock b;
            b.kind = LmiBlock::Kind::VertexLmi;
            b.simplex = nu;
            b.vertex = vid;
            b.dim = n;
            for (int i = 0, t = 0; i < n; ++i) {
                for (int j = i; j < n; ++j, ++t) {
                    // P Df + Df^T P part plus -mu P at this vertex.
                    auto e = basis_jacobian_form(n, i, j, df);
                    append_sym_basis(e, i, j, -mu);
                    b.coeffs.emplace_back(pvar(vid, t), std::move(e));
                    // Gradient term (w_ij . f) E_ij over all simplex vertices.
                    for (int m = 0; m <= n; ++m) {
                        const double cm = wcoef.row(m).dot(fx);
                        if (cm == 0.0) continue;
                        std::vector<LmiBlock::Entry> eg;
                        append_sym_basis(eg, i, j, cm);
                        b.coeffs.emplace_back(pvar(s.vertex_ids[m], t), std::move(eg));
                    }
                }
            }
            if (cfac != 0.0) {
                std::vector<LmiBlock::Entry> e;
                append_identity(e, n, cfac);
                b.coeffs.emplace_back(cvar(nu), std::move(e));
            }
            if (dfac != 0.0) {
                for (int c = 0; c < n; ++c) {
                    std::vector<LmiBlock::Entry> e;
                    append_identity(e, n, dfac);
                    b.coeffs.emplace_back(dvar(nu, c), std::move(e));
                }
            }
            prob.blocks.push_back(std::move(b));
        }

        // C_nu <= t for the optional objective.
        if (prob.minimize_max_c) {
            LmiBlock g;
            g.kind = LmiBlock::Kind::GradientAbs;
            g.simplex = nu;
            g.dim = 1;
            g.coeffs.emplace_back(cvar(nu), std::vector<LmiBlock::Entry>{{0, 0, 1.0}});
            g.coeffs.emplace_back(tvar, std::vector<LmiBlock::Entry>{{0, 0, -1.0}});
            prob.blocks.push_back(std::move(g));
        }
    }
    return prob;
}

BlockSlack max_block_slack(const Op1Problem& prob, const Eigen::VectorXd& y) {
    BlockSlack out;
    out.slack = -std::numeric_limits<double>::infinity();
    for (size_t b = 0; b < prob.blocks.size(); ++b) {
        const Eigen::MatrixXd m = prob.blocks[b].materialize(y);
        out.scale = std::max(out.scale, symlin::matrix_scale(m));
        const double s = symlin::psd_slack(symlin::SymMatrix(m));
        if (s > out.slack) {
            out.slack = s;
            out.block = static_cast<int>(b);
        }
    }
    return out;
}

namespace {

struct EvalResult {
    double slack;
    int block;
    double scale;
};

EvalResult eval_solver_blocks(const std::vector<LmiBlock>& blocks,
                              const Eigen::VectorXd& y,
                              std::vector<std::pair<double, int>>* ranking) {
    EvalResult out{-std::numeric_limits<double>::infinity(), -1, 1.0};
    if (ranking) ranking->clear();
    for (size_t b = 0; b < blocks.size(); ++b) {
        const Eigen::MatrixXd m = blocks[b].materialize(y);
        out.scale = std::max(out.scale, symlin::matrix_scale(m));
        const double s = symlin::psd_slack(symlin::SymMatrix(m));
        if (ranking) ranking->emplace_back(s, static_cast<int>(b));
        if (s > out.slack) {
            out.slack = s;
            out.block = static_cast<int>(b);
        }
    }
    return out;
}

}  // namespace

namespace {

// Linearization of psd_slack(M_b(.)) at y along the top eigenvector:
// c0 + g.u <= slack bound. Returns (indices, values, c0).
struct Cut {
    std::vector<int> idx;
    std::vector<double> val;
    double c0 = 0.0;
};

Cut eigenvector_cut(const LmiBlock& block, const Eigen::VectorXd& y) {
    const Eigen::MatrixXd m = block.materialize(y);
    const symlin::EigResult e = symlin::sym_eig(symlin::SymMatrix(m));
    const Eigen::VectorXd v = e.vectors.col(0);
    auto quad = [&](const std::vector<LmiBlock::Entry>& list) {
        double s = 0.0;
        for (const auto& en : list) {
            s += (en.r == en.c ? 1.0 : 2.0) * en.v * v(en.r) * v(en.c);
        }
        return s;
    };
    Cut cut;
    cut.c0 = quad(block.constant);
    for (const auto& [var, list] : block.coeffs) {
        const double g = quad(list);
        if (g != 0.0) {
            cut.idx.push_back(var);
            cut.val.push_back(g);
        }
    }
    return cut;
}

}  // namespace

FeasibilityResult solve_const_feasibility(const Op1Problem& prob,
                                          const FeasibilitySolveOptions& opt) {
    if (!prob.constant_p) {
        throw std::invalid_argument(
            "solve_const_feasibility: constant-P problems only; export the full problem");
    }
    const int ny = static_cast<int>(prob.variables.size());
    Eigen::VectorXd lo(ny), hi(ny), tie(ny);
    for (int i = 0; i < ny; ++i) {
        lo(i) = prob.variables[i].lo;
        hi(i) = prob.variables[i].hi;
        tie(i) = 0.0;
    }
    tie(ny - 1) = 1e-6;  // nudge toward small metrics among equal slacks
    lp::MinimaxMaster master(lo, hi, tie);

    const auto& blocks = prob.solver_blocks;
    std::vector<Cut> cut_pool;
    auto add_cut = [&](int b, const Eigen::VectorXd& y) {
        Cut cut = eigenvector_cut(blocks[b], y);
        master.add_row(cut.idx, cut.val, -cut.c0);
        cut_pool.push_back(std::move(cut));
    };

    // Phase A: hunt for any point with max slack below -margin.
    Eigen::VectorXd y = prob.pack(prob.eps0 * Eigen::MatrixXd::Identity(prob.n, prob.n),
                                  prob.eps0);
    std::vector<std::pair<double, int>> ranking;
    FeasibilityResult res;
    double best_slack = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_y = y;
    bool have_feasible = false;
    double margin = 0.0;

    for (long round = 0; round < opt.max_rounds; ++round) {
        res.rounds = round + 1;
        const EvalResult ev = eval_solver_blocks(blocks, y, &ranking);
        if (ev.slack < best_slack) {
            best_slack = ev.slack;
            best_y = y;
        }
        margin = opt.margin_scale * ev.scale;
        if (ev.slack < -margin) {
            have_feasible = true;
            break;
        }
        std::partial_sort(ranking.begin(),
                          ranking.begin() + std::min<size_t>(opt.cuts_per_round,
                                                             ranking.size()),
                          ranking.end(), std::greater<>());
        const int ncuts = std::min<int>(opt.cuts_per_round, static_cast<int>(ranking.size()));
        for (int c = 0; c < ncuts; ++c) add_cut(ranking[c].second, y);

        const lp::MinimaxMaster::Result mr = master.solve();
        if (mr.status != lp::SimplexStatus::Optimal) break;
        y = mr.u;
        // Lower bound on the true min-max slack over the box: the cut model
        // minimum, minus the tie-break spread.
        res.lower_bound = mr.objective - 1e-6 * prob.c_cap;
        if (res.lower_bound > 0.0) {
            res.status = FeasibilityResult::Status::Infeasible;
            prob.unpack(best_y, res.P, res.C);
            res.max_slack = best_slack;
            res.worst_block = eval_solver_blocks(blocks, best_y, nullptr).block;
            return res;
        }
    }

    if (!have_feasible) {
        res.status = FeasibilityResult::Status::Inconclusive;
        prob.unpack(best_y, res.P, res.C);
        res.max_slack = best_slack;
        res.worst_block = eval_solver_blocks(blocks, best_y, nullptr).block;
        return res;
    }

    // Phase B: among margin-feasible points, pull the metric down by
    // minimizing C over a growing cut model at the tightened target.
    Eigen::VectorXd verified = best_y;
    auto try_improve = [&](const Eigen::VectorXd& cand) {
        if (cand(ny - 1) >= verified(ny - 1)) return false;
        const EvalResult ev = eval_solver_blocks(blocks, cand, nullptr);
        if (ev.slack > -margin) return false;
        verified = cand;
        return true;
    };
    {
        // The blocks are degree-1 homogeneous in (P, C), so the phase-A point
        // scales straight down until the eps0 floor becomes active.
        Eigen::MatrixXd pa;
        double ca;
        prob.unpack(best_y, pa, ca);
        const symlin::EigResult ep = symlin::sym_eig(symlin::SymMatrix(pa));
        const double lmin = ep.values(ep.values.size() - 1);
        if (lmin > 0.0) {
            const double t = std::min(1.0, prob.eps0 / lmin * (1.0 + 1e-4));
            try_improve(prob.pack(t * pa, t * ca));
        }
    }
    Eigen::VectorXd polish_cost = Eigen::VectorXd::Zero(ny);
    polish_cost(ny - 1) = 1.0;
    const double target = -margin;
    lp::LinearBoxMaster polish(lo, hi, polish_cost);
    for (const Cut& cut : cut_pool) polish.add_row(cut.idx, cut.val, target - cut.c0);
    {
        // Seed with the worst blocks at the verified point.
        std::vector<std::pair<double, int>> seed;
        eval_solver_blocks(blocks, verified, &seed);
        const int nseed = std::min<int>(128, static_cast<int>(seed.size()));
        std::partial_sort(seed.begin(), seed.begin() + nseed, seed.end(),
                          std::greater<>());
        for (int c = 0; c < nseed; ++c) {
            const Cut cut = eigenvector_cut(blocks[seed[c].second], verified);
            polish.add_row(cut.idx, cut.val, target - cut.c0);
        }
    }
    constexpr int kPolishRounds = 300;
    for (int round = 0; round < kPolishRounds; ++round) {
        ++res.rounds;
        const lp::LinearBoxMaster::Result pr = polish.solve();
        if (pr.status != lp::SimplexStatus::Optimal) break;
        // The cut model relaxes the true constraints, so its minimum bounds
        // the reachable C from below; no point continuing once it catches up.
        if (pr.objective >= verified(ny - 1) - 1e-9 * prob.c_cap) break;
        const Eigen::VectorXd cand = pr.u;
        const EvalResult ev = eval_solver_blocks(blocks, cand, &ranking);
        if (ev.slack <= -margin) {
            if (cand(ny - 1) < verified(ny - 1)) verified = cand;
        } else {
            // Feasible set is convex; step back toward the verified point.
            try_improve(0.5 * (cand + verified));
        }
        std::partial_sort(ranking.begin(),
                          ranking.begin() + std::min<size_t>(opt.cuts_per_round,
                                                             ranking.size()),
                          ranking.end(), std::greater<>());
        const int ncuts = std::min<int>(opt.cuts_per_round, static_cast<int>(ranking.size()));
        for (int c = 0; c < ncuts; ++c) {
            const Cut cut = eigenvector_cut(blocks[ranking[c].second], cand);
            polish.add_row(cut.idx, cut.val, target - cut.c0);
        }
    }

    const BlockSlack post = max_block_slack(prob, verified);
    if (post.slack <= opt.margin_scale * post.scale) {
        res.status = FeasibilityResult::Status::Feasible;
        prob.unpack(verified, res.P, res.C);
        res.max_slack = post.slack;
        res.worst_block = post.block;
        return res;
    }
    res.status = FeasibilityResult::Status::Inconclusive;
    prob.unpack(verified, res.P, res.C);
    res.max_slack = post.slack;
    res.worst_block = post.block;
    return res;
}

BisectResult bisect_mu(const geometry::Triangulation& tri,
                       const sysmodel::SystemModel& model, double eps0,
                       double mu_hi, double tol, const Op1Options& aopt,
                       const FeasibilitySolveOptions& sopt) {
    if (!(tol > 0.0)) throw std::invalid_argument("bisect_mu: tol must be positive");
    BisectResult out;
    Op1Problem prob = assemble_op1_const(tri, model, mu_hi, eps0, aopt);
    FeasibilityResult r = solve_const_feasibility(prob, sopt);
    ++out.feasibility_solves;
    if (r.status != FeasibilityResult::Status::Feasible) {
        throw std::domain_error("bisect_mu: not feasible at mu_hi");
    }
    out.mu_star = mu_hi;
    out.P = r.P;
    out.C = r.C;
    double lo = 0.0, hi = mu_hi;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        prob = assemble_op1_const(tri, model, mid, eps0, aopt);
        r = solve_const_feasibility(prob, sopt);
        ++out.feasibility_solves;
        if (r.status == FeasibilityResult::Status::Feasible) {
            hi = mid;
            out.mu_star = mid;
            out.P = r.P;
            out.C = r.C;
        } else {
            lo = mid;
        }
    }
    return out;
}

sdpa::SdpaProblem to_sdpa(const Op1Problem& prob) {
    sdpa::SdpaProblem p;
    p.num_vars = static_cast<int>(prob.variables.size());
    p.objective = Eigen::VectorXd::Zero(p.num_vars);
    if (prob.minimize_max_c && !prob.constant_p) {
        p.objective(p.num_vars - 1) = 1.0;
    }
    p.block_sizes.resize(prob.blocks.size());
    for (size_t b = 0; b < prob.blocks.size(); ++b) {
        const LmiBlock& bl = prob.blocks[b];
        p.block_sizes[b] = bl.dim;
        const int blk = static_cast<int>(b) + 1;
        // Constraint M0 + sum y_i M_i <= 0 becomes sum y_i (-M_i) - M0 >= 0.
        if (!bl.constant.empty()) {
            auto& f0 = p.entries[{0, blk}];
            for (const auto& e : bl.constant) f0.emplace_back(e.r + 1, e.c + 1, e.v);
        }
        for (const auto& [var, list] : bl.coeffs) {
            auto& fi = p.entries[{var + 1, blk}];
            for (const auto& e : list) fi.emplace_back(e.r + 1, e.c + 1, -e.v);
        }
    }
    return p;
}

std::vector<std::string> sdpa_comments(const Op1Problem& prob) {
    std::vector<std::string> out;
    std::ostringstream head;
    head << (prob.constant_p ? "constant-P" : "CPA-P")
         << " metric feasibility problem; mu=" << prob.mu << " eps0=" << prob.eps0
         << " C_cap=" << prob.c_cap;
    out.push_back(head.str());
    const auto& g = prob.tri->grid();
    std::ostringstream gs;
    gs << "grid counts=(";
    for (size_t i = 0; i < g.counts.size(); ++i) gs << (i ? "," : "") << g.counts[i];
    gs << ") offsets=(";
    for (size_t i = 0; i < g.offsets.size(); ++i) gs << (i ? "," : "") << g.offsets[i];
    gs << ") box lo=" << prob.tri->box().lo.transpose()
       << " hi=" << prob.tri->box().hi.transpose();
    out.push_back(gs.str());
    std::ostringstream sizes;
    sizes << "variables=" << prob.variables.size() << " blocks=" << prob.blocks.size()
          << " simplices=" << prob.tri->simplex_count()
          << " vertices=" << prob.tri->vertex_count();
    out.push_back(sizes.str());

    // Constant table, aggregated over distinct (h, B, B3) triples.
    std::map<std::tuple<double, double, double>, long> table;
    for (int nu = 0; nu < prob.tri->simplex_count(); ++nu) {
        ++table[{prob.h(nu), prob.b2(nu), prob.b3(nu)}];
    }
    out.push_back("constants per simplex (h, B, B3, count):");
    for (const auto& [key, count] : table) {
        std::ostringstream row;
        row << "  " << std::get<0>(key) << " " << std::get<1>(key) << " "
            << std::get<2>(key) << " x" << count;
        out.push_back(row.str());
    }
    return out;
}

void export_sdpa(const Op1Problem& prob, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("export_sdpa: cannot open " + path);
    sdpa::write_sdpa(to_sdpa(prob), os, sdpa_comments(prob));
    if (!os.good()) throw std::runtime_error("export_sdpa: write failed for " + path);
}

}  // namespace entrobound::metricopt
