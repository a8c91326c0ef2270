#include "entrobound/lyapopt.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <unordered_set>

#include "entrobound/simplex.hpp"
#include "entrobound/symlin.hpp"

namespace entrobound::lyapopt {

VertexMuTable vertex_mu_simplified(const geometry::Triangulation& tstar,
                                   const sysmodel::SystemModel& model,
                                   const Eigen::MatrixXd& p, double c) {
    if (model.n != tstar.dim()) {
        throw std::invalid_argument("vertex_mu_simplified: dimension mismatch");
    }
    const symlin::SymMatrix ps(p);
    const double pnorm = symlin::psd_slack(ps);  // lambda_max of a PD matrix
    if (c < pnorm - 1e-9 * std::max(1.0, pnorm)) {
        throw std::invalid_argument("vertex_mu_simplified: need C >= |P|_2");
    }
    const double kappa = symlin::cond2(ps);  // throws unless PD
    const double n3 = 2.0 * std::pow(static_cast<double>(model.n), 3);

    VertexMuTable table;
    table.provenance = VertexMuTable::Provenance::DirectFormula;
    table.mu.resize(tstar.vertex_count());
    for (int v = 0; v < tstar.vertex_count(); ++v) {
        const Eigen::MatrixXd a = cpa::metric_derivative(p, tstar.vertex(v), model);
        double h = 0.0, b3 = 0.0;
        for (int nu : tstar.incident_simplices(v)) {
            h = std::max(h, tstar.simplex(nu).diameter);
            b3 = std::max(b3, model.third_bound(tstar.simplex(nu)));
        }
        table.mu(v) = symlin::lambda_max_gen(symlin::SymMatrix(a), ps) +
                      h * h * n3 * b3 * kappa;
    }
    return table;
}

long LpProblem::variable_count() const {
    return num_vertices() + num_simplices() * tstar_->dim() + 1;
}

long LpProblem::row_count() const {
    const int n = tstar_->dim();
    return num_simplices() * (2 * n) + num_simplices() * (n + 1);
}

std::string LpProblem::variable_name(long j) const {
    if (j < num_vertices()) return "V" + std::to_string(j);
    if (j < q_index()) return "A" + std::to_string(j - num_vertices());
    return "Q";
}

void LpProblem::for_each_row(const std::function<void(const Row&)>& fn) const {
    const int n = tstar_->dim();
    Row row;
    for (long s = 0; s < num_simplices(); ++s) {
        const geometry::Simplex& sx = tstar_->simplex(s);
        const Eigen::MatrixXd& xi = sx.shape_inv;
        for (int c = 0; c < n; ++c) {
            for (int sign = 0; sign < 2; ++sign) {
                row.kind = sign ? Row::Kind::GradUpper : Row::Kind::GradLower;
                row.simplex = static_cast<int>(s);
                row.index = c;
                row.rhs = 0.0;
                row.name = "G" + std::to_string(s * 2 * n + 2 * c + sign);
                row.coeffs.clear();
                const double sg = sign ? 1.0 : -1.0;
                double base = 0.0;
                for (int l = 1; l <= n; ++l) {
                    const double w = sg * xi(c, l - 1);
                    row.coeffs.emplace_back(sx.vertex_ids[l], w);
                    base -= w;
                }
                row.coeffs.emplace_back(sx.vertex_ids[0], base);
                row.coeffs.emplace_back(aux_index(s, c), -1.0);
                fn(row);
            }
        }
        for (int l = 0; l <= n; ++l) {
            row.kind = Row::Kind::Vertex;
            row.simplex = static_cast<int>(s);
            row.index = l;
            const int vid = sx.vertex_ids[l];
            row.rhs = -static_cast<double>(m_tilde_) * mu_.mu(vid);
            row.name = "C" + std::to_string(s * (n + 1) + l);
            row.coeffs.clear();
            const Eigen::VectorXd w = xi.transpose() * fvals_[vid];
            double base = 0.0;
            for (int m = 1; m <= n; ++m) {
                row.coeffs.emplace_back(sx.vertex_ids[m], w(m - 1));
                base -= w(m - 1);
            }
            row.coeffs.emplace_back(sx.vertex_ids[0], base);
            for (int c = 0; c < n; ++c) row.coeffs.emplace_back(aux_index(s, c), beta_(s));
            row.coeffs.emplace_back(q_index(), -1.0);
            fn(row);
        }
    }
}

LpProblem assemble_lp(const geometry::Triangulation& tstar,
                      const sysmodel::SystemModel& model,
                      const VertexMuTable& mu_table, int m_tilde,
                      const Eigen::VectorXd* err_bound) {
    if (mu_table.mu.size() != tstar.vertex_count()) {
        throw std::invalid_argument("assemble_lp: mu table does not match the triangulation");
    }
    if (m_tilde < 1) throw std::invalid_argument("assemble_lp: m_tilde >= 1 required");
    if (model.n != tstar.dim()) {
        throw std::invalid_argument("assemble_lp: model/triangulation dimension mismatch");
    }
    LpProblem prob;
    prob.tstar_ = &tstar;
    prob.m_tilde_ = m_tilde;
    prob.mu_ = mu_table;
    if (err_bound) {
        if (err_bound->size() != tstar.simplex_count()) {
            throw std::invalid_argument("assemble_lp: err_bound needs one entry per simplex");
        }
        prob.beta_ = *err_bound;
    } else {
        prob.beta_.resize(tstar.simplex_count());
        for (int s = 0; s < tstar.simplex_count(); ++s) {
            const auto& sx = tstar.simplex(s);
            prob.beta_(s) = sx.diameter * sx.diameter * tstar.dim() * model.hessian_bound(sx);
        }
    }
    prob.fvals_.reserve(tstar.vertex_count());
    for (int v = 0; v < tstar.vertex_count(); ++v) {
        prob.fvals_.push_back(model.f(tstar.vertex(v)));
    }
    return prob;
}

namespace {

// Row activation key: (simplex, local vertex, sign pattern).
uint64_t row_key(long s, int l, unsigned sigma_bits, int n) {
    return ((static_cast<uint64_t>(s) * (n + 2) + l) << n) | sigma_bits;
}

}  // namespace

LpSolution solve_lp(const LpProblem& prob, const LpSolveOptions& opt) {
    const geometry::Triangulation& tri = prob.triangulation();
    const int n = tri.dim();
    const long nv = prob.num_vertices();
    const long ns = prob.num_simplices();
    const double mt = static_cast<double>(prob.m_tilde());

    double v_box = opt.v_box;
    LpSolution sol;

    // V is determined only up to an additive constant (every row's V
    // coefficients sum to zero), so vertex 0 is pinned to 0 and the master
    // works in the nv-1 remaining coordinates.
    for (int attempt = 0; attempt < 4; ++attempt) {
        lp::MinimaxMaster master(Eigen::VectorXd::Constant(nv - 1, -v_box),
                                 Eigen::VectorXd::Constant(nv - 1, v_box),
                                 Eigen::VectorXd::Zero(nv - 1), 1e-12);
        std::unordered_set<uint64_t> active;
        long rows_activated = 0;

        auto add_row = [&](long s, int l, const Eigen::VectorXd& sigma) {
            unsigned bits = 0;
            for (int c = 0; c < n; ++c) {
                if (sigma(c) > 0) bits |= (1u << c);
            }
            if (!active.insert(row_key(s, l, bits, n)).second) return false;
            const geometry::Simplex& sx = tri.simplex(s);
            const int vid = sx.vertex_ids[l];
            const Eigen::VectorXd dir = prob.f_at_vertex(vid) + prob.beta()(s) * sigma;
            const Eigen::VectorXd w = sx.shape_inv.transpose() * dir;
            std::vector<int> idx;
            std::vector<double> val;
            idx.reserve(n + 1);
            val.reserve(n + 1);
            double base = 0.0;
            for (int m = 1; m <= n; ++m) {
                base -= w(m - 1);
                if (sx.vertex_ids[m] > 0) {
                    idx.push_back(sx.vertex_ids[m] - 1);
                    val.push_back(w(m - 1));
                }
            }
            if (sx.vertex_ids[0] > 0) {
                idx.push_back(sx.vertex_ids[0] - 1);
                val.push_back(base);
            }
            master.add_row(idx, val, -mt * prob.mu_table().mu(vid));
            ++rows_activated;
            return true;
        };

        // Initial activation: every vertex row with the all-positive pattern.
        const Eigen::VectorXd sigma0 = Eigen::VectorXd::Ones(n);
        for (long s = 0; s < ns; ++s) {
            for (int l = 0; l <= n; ++l) add_row(s, l, sigma0);
        }

        lp::SimplexOptions sopt;
        sopt.max_iterations = opt.max_iterations;
        Eigen::VectorXd v;
        double q = 0.0;
        long iterations = 0;
        bool converged = false;

        for (int round = 0; round < opt.max_outer_rounds; ++round) {
            const lp::MinimaxMaster::Result mr = master.solve(sopt);
            iterations += mr.iterations;
            if (mr.status == lp::SimplexStatus::Unbounded) {
                throw std::logic_error("solve_lp: dual unbounded; assembly is inconsistent");
            }
            if (mr.status != lp::SimplexStatus::Optimal) {
                throw std::runtime_error("solve_lp: simplex iteration cap exhausted");
            }
            v.resize(nv);
            v(0) = 0.0;
            v.tail(nv - 1) = mr.u;
            q = mr.tau;

            // Scan all rows for violations at (v, q) and activate them.
            bool any = false;
            double true_max = -std::numeric_limits<double>::infinity();
            const double tol = 1e-9 * std::max(1.0, std::abs(q));
            for (long s = 0; s < ns; ++s) {
                const geometry::Simplex& sx = tri.simplex(s);
                Eigen::VectorXd dv(n);
                for (int m = 1; m <= n; ++m) {
                    dv(m - 1) = v(sx.vertex_ids[m]) - v(sx.vertex_ids[0]);
                }
                const Eigen::VectorXd g = sx.shape_inv * dv;
                const double pen = prob.beta()(s) * g.lpNorm<1>();
                Eigen::VectorXd sigma(n);
                for (int c = 0; c < n; ++c) sigma(c) = g(c) >= 0.0 ? 1.0 : -1.0;
                for (int l = 0; l <= n; ++l) {
                    const int vid = sx.vertex_ids[l];
                    const double lhs =
                        g.dot(prob.f_at_vertex(vid)) + pen + mt * prob.mu_table().mu(vid);
                    true_max = std::max(true_max, lhs);
                    if (lhs > q + tol) {
                        if (add_row(s, l, sigma)) any = true;
                    }
                }
            }
            if (!any) {
                // The tie-break jitter leaves q marginally optimistic; report
                // the exact maximum of the true rows at the returned V.
                q = std::max(q, true_max);
                converged = true;
                break;
            }
        }
        if (!converged) {
            throw std::runtime_error("solve_lp: row activation did not settle");
        }
        if (v.cwiseAbs().maxCoeff() > 0.999 * v_box) {
            v_box *= 100.0;  // box bound touched; widen and resolve
            continue;
        }

        sol.v = v;
        sol.q = q;
        sol.iterations = iterations;
        sol.rows_activated = rows_activated;
        sol.aux.resize(ns * n);
        for (long s = 0; s < ns; ++s) {
            const geometry::Simplex& sx = tri.simplex(s);
            Eigen::VectorXd dv(n);
            for (int m = 1; m <= n; ++m) {
                dv(m - 1) = v(sx.vertex_ids[m]) - v(sx.vertex_ids[0]);
            }
            const Eigen::VectorXd g = sx.shape_inv * dv;
            for (int c = 0; c < n; ++c) sol.aux(s * n + c) = std::abs(g(c));
        }

        // Post-hoc feasibility over the full row enumeration.
        Eigen::VectorXd z(prob.variable_count());
        z.head(nv) = sol.v;
        z.segment(nv, ns * n) = sol.aux;
        z(prob.q_index()) = sol.q;
        double worst = 0.0;
        prob.for_each_row([&](const LpProblem::Row& row) {
            double lhs = 0.0;
            for (const auto& [var, coef] : row.coeffs) lhs += coef * z(var);
            const double scale = std::max(1.0, std::abs(row.rhs));
            worst = std::max(worst, (lhs - row.rhs) / scale);
        });
        sol.max_row_violation = worst;
        return sol;
    }
    throw std::logic_error(
        "solve_lp: objective unbounded below (a direction of V decreases every row); "
        "assembly is inconsistent with a forward-invariant domain");
}

sysmodel::SystemModel EntropyCertificate::rebuild_model() const {
    if (model_type == "lorenz") return sysmodel::lorenz_scaled(lorenz);
    if (model_type == "linear") return sysmodel::linear_model(linear_matrix);
    throw std::invalid_argument("EntropyCertificate: unknown model type " + model_type);
}

VerifyReport verify_certificate(const EntropyCertificate& cert,
                                const sysmodel::SystemModel& model, long samples,
                                double tol, unsigned long seed) {
    const geometry::Triangulation tstar =
        geometry::build_box_triangulation(cert.lyap_box, cert.lyap_grid);
    if (cert.v_values.size() != tstar.vertex_count() ||
        cert.mu_table.mu.size() != tstar.vertex_count()) {
        throw std::invalid_argument("verify_certificate: value arrays do not match the grid");
    }
    const int n = tstar.dim();
    const double mt = static_cast<double>(cert.m_tilde);
    const symlin::SymMatrix ps(cert.p);

    VerifyReport rep;
    rep.samples = samples;
    rep.worst_row_slack = -std::numeric_limits<double>::infinity();
    rep.worst_vertex_psd_slack = -std::numeric_limits<double>::infinity();
    rep.worst_sample_psd_slack = -std::numeric_limits<double>::infinity();
    rep.worst_sample_orbital_slack = -std::numeric_limits<double>::infinity();

    const cpa::CpaScalarField vfield(tstar, cert.v_values);
    const cpa::CpaScalarField mufield(tstar, cert.mu_table.mu);

    // Vertex rows of the LP, recomputed from scratch.
    const double row_tol = cert.row_tol * std::max(1.0, std::abs(cert.q));
    for (int s = 0; s < tstar.simplex_count(); ++s) {
        const geometry::Simplex& sx = tstar.simplex(s);
        const Eigen::VectorXd& g = vfield.gradient(s);
        double beta;
        if (cert.err_bound_mode == "file") {
            beta = cert.custom_beta(s);
        } else {
            beta = sx.diameter * sx.diameter * n * model.hessian_bound(sx);
        }
        const double pen = beta * g.lpNorm<1>();
        for (int l = 0; l <= n; ++l) {
            const int vid = sx.vertex_ids[l];
            const double lhs = g.dot(model.f(tstar.vertex(vid))) + pen +
                               mt * cert.mu_table.mu(vid);
            ++rep.vertex_rows_checked;
            rep.worst_row_slack = std::max(rep.worst_row_slack, lhs - cert.q);
            if (lhs - cert.q > row_tol) ++rep.vertex_row_violations;
        }
    }

    // Vertex LMIs A(x_k) - mu(x_k) P <= 0.
    for (int v = 0; v < tstar.vertex_count(); ++v) {
        const Eigen::MatrixXd a = cpa::metric_derivative(cert.p, tstar.vertex(v), model);
        const double slack = symlin::psd_slack(
            symlin::SymMatrix(a - cert.mu_table.mu(v) * cert.p));
        rep.worst_vertex_psd_slack = std::max(rep.worst_vertex_psd_slack, slack);
        if (slack > tol) ++rep.vertex_psd_violations;
    }

    // Random interior samples: interpolated LMI and orbital inequality.
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const geometry::Box& box = tstar.box();
    for (long t = 0; t < samples; ++t) {
        Eigen::VectorXd x(n);
        for (int d = 0; d < n; ++d) {
            const double margin = 1e-7 * (box.hi(d) - box.lo(d));
            x(d) = box.lo(d) + margin + (box.hi(d) - box.lo(d) - 2 * margin) * unit(rng);
        }
        const double mux = mufield.eval(x);
        const Eigen::MatrixXd a = cpa::metric_derivative(cert.p, x, model);
        const double psd = symlin::psd_slack(symlin::SymMatrix(a - mux * cert.p));
        rep.worst_sample_psd_slack = std::max(rep.worst_sample_psd_slack, psd);
        if (psd > tol) ++rep.sample_psd_violations;

        const double orb = vfield.orbital_derivative(x, model) + mt * mux - cert.q;
        rep.worst_sample_orbital_slack = std::max(rep.worst_sample_orbital_slack, orb);
        if (orb > tol) ++rep.sample_orbital_violations;
    }
    return rep;
}

namespace {

void require_refinement(const geometry::Triangulation& tri,
                        const geometry::Triangulation& tstar) {
    const geometry::Box& a = tri.box();
    const geometry::Box& b = tstar.box();
    const int n = tri.dim();
    if (tstar.dim() != n) {
        throw std::invalid_argument("assemble_op2_full_sdp: dimension mismatch");
    }
    for (int d = 0; d < n; ++d) {
        const double extent = a.hi(d) - a.lo(d);
        if (std::abs(a.lo(d) - b.lo(d)) > 1e-12 * extent ||
            std::abs(a.hi(d) - b.hi(d)) > 1e-12 * extent) {
            throw std::invalid_argument(
                "assemble_op2_full_sdp: refinement requires identical domains");
        }
        const int coarse = tri.grid().cells(d);
        const int fine = tstar.grid().cells(d);
        if (fine % coarse != 0) {
            throw std::invalid_argument(
                "assemble_op2_full_sdp: cell counts are not integer refinements");
        }
    }
}

}  // namespace

Op2FullSdp assemble_op2_full_sdp(const geometry::Triangulation& tri,
                                 const geometry::Triangulation& tstar,
                                 const sysmodel::SystemModel& model,
                                 const cpa::CpaMatrixField& p_field, int m_tilde) {
    require_refinement(tri, tstar);
    if (m_tilde < 1) throw std::invalid_argument("assemble_op2_full_sdp: m_tilde >= 1");
    const int n = tri.dim();
    const long nv = tstar.vertex_count();
    const long ns = tstar.simplex_count();

    Op2FullSdp prob;
    prob.n = n;
    prob.m_tilde = m_tilde;
    prob.tri = &tri;
    prob.tstar = &tstar;

    // Variables: mu(x_k), then D^mu_xi, then V(x_k), then D^V_xi, then Q.
    const long mu0 = 0, dmu0 = nv, v0 = nv + ns, dv0 = 2 * nv + ns, qv = 2 * nv + 2 * ns;
    for (long k = 0; k < nv; ++k) {
        prob.variables.push_back({"mu[" + std::to_string(k) + "]", -1e30, 1e30});
    }
    for (long s = 0; s < ns; ++s) {
        prob.variables.push_back({"Dmu[" + std::to_string(s) + "]", 0.0, 1e30});
    }
    for (long k = 0; k < nv; ++k) {
        prob.variables.push_back({"V[" + std::to_string(k) + "]", -1e30, 1e30});
    }
    for (long s = 0; s < ns; ++s) {
        prob.variables.push_back({"DV[" + std::to_string(s) + "]", 0.0, 1e30});
    }
    prob.variables.push_back({"Q", -1e30, 1e30});
    prob.objective = Eigen::VectorXd::Zero(static_cast<long>(prob.variables.size()));
    prob.objective(qv) = 1.0;

    for (long s = 0; s < ns; ++s) {
        const geometry::Simplex& sx = tstar.simplex(s);
        const double h2 = sx.diameter * sx.diameter;
        // Coarse simplex containing this fine one (via an interior point).
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (int vid : sx.vertex_ids) centroid += tstar.vertex(vid);
        centroid /= (n + 1.0);
        const int nu = tri.locate(centroid);
        if (nu < 0) {
            throw std::logic_error("assemble_op2_full_sdp: fine simplex escaped the domain");
        }
        const double d_nu = p_field.d_bound(nu);
        const double c_nu = p_field.c_bound(nu);
        const double b2_nu = model.hessian_bound(tri.simplex(nu));
        const double b3_nu = model.third_bound(tri.simplex(nu));
        const double e_nu =
            n * n * ((1.0 + 4.0 * std::sqrt(double(n))) * b2_nu * d_nu +
                     2.0 * n * b3_nu * c_nu);
        const double bstar = model.hessian_bound(sx);

        Eigen::MatrixXd wcoef(n + 1, n);
        for (int l = 1; l <= n; ++l) wcoef.row(l) = sx.shape_inv.col(l - 1).transpose();
        wcoef.row(0) = -wcoef.bottomRows(n).colwise().sum();

        // 1. +-[grad mu]_c <= D^mu_xi.
        for (int c = 0; c < n; ++c) {
            for (double sign : {1.0, -1.0}) {
                metricopt::LmiBlock g;
                g.kind = metricopt::LmiBlock::Kind::GradientAbs;
                g.simplex = static_cast<int>(s);
                g.dim = 1;
                for (int l = 0; l <= n; ++l) {
                    if (wcoef(l, c) != 0.0) {
                        g.coeffs.emplace_back(
                            mu0 + sx.vertex_ids[l],
                            std::vector<metricopt::LmiBlock::Entry>{{0, 0, sign * wcoef(l, c)}});
                    }
                }
                g.coeffs.emplace_back(dmu0 + s,
                                      std::vector<metricopt::LmiBlock::Entry>{{0, 0, -1.0}});
                prob.blocks.push_back(std::move(g));
            }
        }

        // 2. A(x_l) - mu(x_l) P(x_l) + h^2 (E_nu + 2 n sqrt(n) D_nu D^mu_xi) I <= 0.
        for (int l = 0; l <= n; ++l) {
            const int vid = sx.vertex_ids[l];
            const Eigen::VectorXd& x = tstar.vertex(vid);
            const Eigen::MatrixXd a = cpa::metric_derivative(p_field, x, model);
            const Eigen::MatrixXd px = p_field.eval(x);
            metricopt::LmiBlock b;
            b.kind = metricopt::LmiBlock::Kind::VertexLmi;
            b.simplex = static_cast<int>(s);
            b.vertex = vid;
            b.dim = n;
            for (int r = 0; r < n; ++r) {
                for (int c2 = r; c2 < n; ++c2) {
                    const double val = a(r, c2) + (r == c2 ? h2 * e_nu : 0.0);
                    if (val != 0.0) b.constant.push_back({r, c2, val});
                }
            }
            std::vector<metricopt::LmiBlock::Entry> pm;
            for (int r = 0; r < n; ++r) {
                for (int c2 = r; c2 < n; ++c2) {
                    if (px(r, c2) != 0.0) pm.push_back({r, c2, -px(r, c2)});
                }
            }
            b.coeffs.emplace_back(mu0 + vid, std::move(pm));
            const double dm = h2 * 2.0 * n * std::sqrt(double(n)) * d_nu;
            if (dm != 0.0) {
                std::vector<metricopt::LmiBlock::Entry> e;
                for (int r = 0; r < n; ++r) e.push_back({r, r, dm});
                b.coeffs.emplace_back(dmu0 + s, std::move(e));
            }
            prob.blocks.push_back(std::move(b));
        }

        // 3. sigma . grad V_xi <= D^V_xi for every sign pattern.
        for (unsigned bits = 0; bits < (1u << n); ++bits) {
            metricopt::LmiBlock g;
            g.kind = metricopt::LmiBlock::Kind::GradientAbs;
            g.simplex = static_cast<int>(s);
            g.dim = 1;
            Eigen::VectorXd sigma(n);
            for (int c = 0; c < n; ++c) sigma(c) = (bits & (1u << c)) ? 1.0 : -1.0;
            const Eigen::VectorXd coef = wcoef * sigma;
            for (int l = 0; l <= n; ++l) {
                if (coef(l) != 0.0) {
                    g.coeffs.emplace_back(
                        v0 + sx.vertex_ids[l],
                        std::vector<metricopt::LmiBlock::Entry>{{0, 0, coef(l)}});
                }
            }
            g.coeffs.emplace_back(dv0 + s,
                                  std::vector<metricopt::LmiBlock::Entry>{{0, 0, -1.0}});
            prob.blocks.push_back(std::move(g));
        }

        // 4. grad V_xi . f(x_l) + h^2 n B*_xi D^V_xi + m_tilde mu(x_l) <= Q.
        for (int l = 0; l <= n; ++l) {
            const int vid = sx.vertex_ids[l];
            const Eigen::VectorXd fx = model.f(tstar.vertex(vid));
            const Eigen::VectorXd coef = wcoef * fx;
            metricopt::LmiBlock b;
            b.kind = metricopt::LmiBlock::Kind::GradientAbs;
            b.simplex = static_cast<int>(s);
            b.vertex = vid;
            b.dim = 1;
            for (int m = 0; m <= n; ++m) {
                if (coef(m) != 0.0) {
                    b.coeffs.emplace_back(
                        v0 + sx.vertex_ids[m],
                        std::vector<metricopt::LmiBlock::Entry>{{0, 0, coef(m)}});
                }
            }
            const double dv = h2 * n * bstar;
            if (dv != 0.0) {
                b.coeffs.emplace_back(dv0 + s,
                                      std::vector<metricopt::LmiBlock::Entry>{{0, 0, dv}});
            }
            b.coeffs.emplace_back(
                mu0 + vid,
                std::vector<metricopt::LmiBlock::Entry>{{0, 0, static_cast<double>(m_tilde)}});
            b.coeffs.emplace_back(qv, std::vector<metricopt::LmiBlock::Entry>{{0, 0, -1.0}});
            prob.blocks.push_back(std::move(b));
        }
    }
    return prob;
}

sdpa::SdpaProblem to_sdpa(const Op2FullSdp& prob) {
    sdpa::SdpaProblem p;
    p.num_vars = static_cast<int>(prob.variables.size());
    p.objective = prob.objective;
    p.block_sizes.resize(prob.blocks.size());
    for (size_t b = 0; b < prob.blocks.size(); ++b) {
        const metricopt::LmiBlock& bl = prob.blocks[b];
        p.block_sizes[b] = bl.dim;
        const int blk = static_cast<int>(b) + 1;
        if (!bl.constant.empty()) {
            auto& f0 = p.entries[{0, blk}];
            for (const auto& e : bl.constant) f0.emplace_back(e.r + 1, e.c + 1, e.v);
        }
        for (const auto& [var, list] : bl.coeffs) {
            auto& fi = p.entries[{static_cast<int>(var) + 1, blk}];
            for (const auto& e : list) fi.emplace_back(e.r + 1, e.c + 1, -e.v);
        }
    }
    return p;
}

MTildeEstimate estimate_m_tilde(const geometry::Triangulation& tstar,
                                const sysmodel::SystemModel& model,
                                const Eigen::MatrixXd& p, double tol, long samples,
                                unsigned long seed) {
    const symlin::SymMatrix ps(p);
    MTildeEstimate est;
    est.samples = samples;
    for (int v = 0; v < tstar.vertex_count(); ++v) {
        const Eigen::MatrixXd a = cpa::metric_derivative(p, tstar.vertex(v), model);
        const int c = symlin::count_positive_gen_eigs(symlin::SymMatrix(a), ps, tol);
        if (c > est.m_tilde) {
            est.m_tilde = c;
            est.argmax_vertex = v;
        }
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const geometry::Box& box = tstar.box();
    const int n = tstar.dim();
    for (long t = 0; t < samples; ++t) {
        Eigen::VectorXd x(n);
        for (int d = 0; d < n; ++d) {
            x(d) = box.lo(d) + (box.hi(d) - box.lo(d)) * unit(rng);
        }
        const Eigen::MatrixXd a = cpa::metric_derivative(p, x, model);
        est.m_tilde = std::max(
            est.m_tilde, symlin::count_positive_gen_eigs(symlin::SymMatrix(a), ps, tol));
    }
    return est;
}

}  // namespace entrobound::lyapopt
