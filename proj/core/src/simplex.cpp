#include "entrobound/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace entrobound::lp {

RevisedSimplex::RevisedSimplex(int m) : m_(m), d_(Eigen::VectorXd::Zero(m)) {
    if (m < 1) throw std::invalid_argument("RevisedSimplex: need at least one row");
}

int RevisedSimplex::add_column(SparseCol col) {
    for (int r : col.rows) {
        if (r < 0 || r >= m_) throw std::invalid_argument("add_column: row out of range");
    }
    cols_.push_back(std::move(col));
    return static_cast<int>(cols_.size()) - 1;
}

long g_factorize_count = 0;
double g_prev_obj = 1e300;
void RevisedSimplex::factorize(const std::vector<int>& basis) {
    ++g_factorize_count;
    Eigen::SparseMatrix<double> b(m_, m_);
    std::vector<Eigen::Triplet<double>> trips;
    for (int i = 0; i < m_; ++i) {
        const SparseCol& c = cols_[basis[i]];
        for (size_t k = 0; k < c.rows.size(); ++k) {
            trips.emplace_back(c.rows[k], i, c.vals[k]);
        }
    }
    b.setFromTriplets(trips.begin(), trips.end());
    lu_.compute(b);
    if (lu_.info() != Eigen::Success) {
        throw std::runtime_error("RevisedSimplex: basis matrix is singular");
    }
    etas_.clear();
}

Eigen::VectorXd RevisedSimplex::ftran(const Eigen::VectorXd& v) {
    Eigen::VectorXd x = lu_.solve(v);
    for (const Eta& e : etas_) {
        const double xp = x(e.pos) / e.w(e.pos);
        x -= xp * e.w;
        x(e.pos) = xp;
    }
    return x;
}

Eigen::VectorXd RevisedSimplex::btran(const Eigen::VectorXd& v) {
    Eigen::VectorXd x = v;
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
        const Eta& e = *it;
        double acc = x(e.pos);
        for (int i = 0; i < m_; ++i) {
            if (i != e.pos) acc -= e.w(i) * x(i);
        }
        x(e.pos) = acc / e.w(e.pos);
    }
    return lu_.adjoint().solve(x);
}

SimplexResult RevisedSimplex::iterate(std::vector<int> basis,
                                      const std::vector<double>& cost,
                                      const std::vector<char>& allowed,
                                      const SimplexOptions& opt) {
    const int ncols = num_columns();
    std::vector<int> in_basis_pos(ncols, -1);
    for (int i = 0; i < m_; ++i) in_basis_pos[basis[i]] = i;

    factorize(basis);
    Eigen::VectorXd xb = ftran(d_);

    Eigen::VectorXd cb(m_);
    for (int i = 0; i < m_; ++i) cb(i) = cost[basis[i]];

    SimplexResult res;
    long iter = 0;
    int degen_streak = 0;
#ifdef ENTROBOUND_SIMPLEX_DEBUG
    g_prev_obj = 1e300;
#endif

    auto refresh = [&]() {
        factorize(basis);
        xb = ftran(d_);
        for (int i = 0; i < m_; ++i) {
            if (xb(i) < 0.0) xb(i) = 0.0;
        }
    };

    // Devex pricing (Bland during degeneracy streaks); -1 when no column
    // improves. The noise floor tracks the basic cost magnitude: multipliers
    // carry absolute error of that order, so smaller reduced costs are not
    // trustworthy signals.
    std::vector<double> devex(ncols, 1.0);
    auto price = [&](const Eigen::VectorXd& pi, bool bland) {
        double cb_mag = 1.0;
        for (int i = 0; i < m_; ++i) cb_mag = std::max(cb_mag, std::abs(cb(i)));
        const double noise = 1e-11 * cb_mag;
        int enter = -1;
        double best = 0.0;
        for (int j = 0; j < ncols; ++j) {
            if (in_basis_pos[j] >= 0 || !allowed[j]) continue;
            const SparseCol& c = cols_[j];
            double rc = cost[j];
            for (size_t k = 0; k < c.rows.size(); ++k) rc -= pi(c.rows[k]) * c.vals[k];
            const double tol = std::max(opt.opt_tol * std::max(1.0, std::abs(cost[j])), noise);
            if (rc < -tol) {
                if (bland) return j;
                const double score = rc * rc / devex[j];
                if (score > best) {
                    best = score;
                    enter = j;
                }
            }
        }
        return enter;
    };

    // Harris two-pass ratio test. Blocked basics (phase-2 artificials) are
    // pinned at zero, so one that would grow leaves immediately. Pass 1
    // relaxes feasibility by feas_tol to widen the eligible set; pass 2 picks
    // the strongest pivot inside it (smallest index in Bland mode). The
    // bounded infeasibility this introduces is wiped at each refactorization.
    auto ratio_test = [&](const Eigen::VectorXd& w, bool bland, double* theta_out) {
        const double wmax = w.cwiseAbs().maxCoeff();
        const double piv_accept = std::max(opt.pivot_tol, 1e-7 * wmax);
        for (int i = 0; i < m_; ++i) {
            if (!allowed[basis[i]] && w(i) < -piv_accept) {
                *theta_out = 0.0;
                return i;
            }
        }
        double theta_relaxed = std::numeric_limits<double>::infinity();
        for (int i = 0; i < m_; ++i) {
            if (w(i) > piv_accept) {
                theta_relaxed = std::min(
                    theta_relaxed, (std::max(xb(i), 0.0) + opt.feas_tol) / w(i));
            }
        }
        if (theta_relaxed == std::numeric_limits<double>::infinity()) return -1;
        int leave = -1;
        for (int i = 0; i < m_; ++i) {
            if (w(i) > piv_accept && std::max(xb(i), 0.0) / w(i) <= theta_relaxed) {
                if (leave < 0) {
                    leave = i;
                } else if (bland ? (basis[i] < basis[leave]) : (w(i) > w(leave))) {
                    leave = i;
                }
            }
        }
        *theta_out = std::max(xb(leave), 0.0) / w(leave);
        return leave;
    };

    while (iter < opt.max_iterations) {
        ++iter;
#ifdef ENTROBOUND_SIMPLEX_DEBUG
        if (iter % 2000 == 0) {
            double obj = 0;
            for (int i = 0; i < m_; ++i) obj += cb(i) * xb(i);
            fprintf(stderr, "[simplex] iter=%ld refactors=%ld obj=%.9g degen=%d cols=%d\n",
                    iter, g_factorize_count, obj, degen_streak, num_columns());
        }
#endif
        Eigen::VectorXd pi = btran(cb);
        if (!etas_.empty() && iter % 64 == 0) {
            // Drift check on the eta file: refresh when B^T pi strays.
            double resid = 0.0;
            for (int i = 0; i < m_; ++i) {
                const SparseCol& ci = cols_[basis[i]];
                double dot = 0.0;
                for (size_t k = 0; k < ci.rows.size(); ++k) {
                    dot += pi(ci.rows[k]) * ci.vals[k];
                }
                resid = std::max(resid,
                                 std::abs(dot - cb(i)) / std::max(1.0, std::abs(cb(i))));
            }
            if (resid > 1e-9) {
                refresh();
                pi = btran(cb);
            }
        }

        const bool bland = degen_streak >= opt.bland_trigger;
        int enter = price(pi, bland);
        if (enter < 0 && !etas_.empty()) {
            // Confirm optimality against a fresh factorization.
            refresh();
            pi = btran(cb);
            enter = price(pi, bland);
        }
        if (enter < 0) {
            res.status = SimplexStatus::Optimal;
            break;
        }

        Eigen::VectorXd aj = Eigen::VectorXd::Zero(m_);
        for (size_t k = 0; k < cols_[enter].rows.size(); ++k) {
            aj(cols_[enter].rows[k]) = cols_[enter].vals[k];
        }
        Eigen::VectorXd w = ftran(aj);
        double theta = 0.0;
        int leave = ratio_test(w, bland, &theta);
        // A missing or tiny pivot is often an artifact of the eta file;
        // recompute against a fresh factorization before trusting it.
        if (!etas_.empty() &&
            (leave < 0 || std::abs(w(leave)) < 1e-5 * w.cwiseAbs().maxCoeff())) {
            refresh();
            w = ftran(aj);
            leave = ratio_test(w, bland, &theta);
        }
        if (leave < 0) {
            res.status = SimplexStatus::Unbounded;
            break;
        }

        if (theta <= 1e-13) {
            ++degen_streak;
        } else {
            degen_streak = 0;
        }

        // Pivot row of the outgoing basis, for the devex weight update.
        Eigen::VectorXd eleave = Eigen::VectorXd::Zero(m_);
        eleave(leave) = 1.0;
        const Eigen::VectorXd rho = btran(eleave);

        xb -= theta * w;
        xb(leave) = theta;
        for (int i = 0; i < m_; ++i) {
            if (i != leave && xb(i) < 0.0) xb(i) = 0.0;  // clip roundoff
        }
        const int leaving_var = basis[leave];
        in_basis_pos[leaving_var] = -1;
        in_basis_pos[enter] = leave;
        basis[leave] = enter;
        cb(leave) = cost[enter];

        {
            const double alpha_q = w(leave);
            const double gq = std::max(devex[enter], 1.0);
            double devmax = 1.0;
            for (int j = 0; j < ncols; ++j) {
                if (in_basis_pos[j] >= 0 || !allowed[j]) continue;
                const SparseCol& c = cols_[j];
                double alpha = 0.0;
                for (size_t k = 0; k < c.rows.size(); ++k) {
                    alpha += rho(c.rows[k]) * c.vals[k];
                }
                if (alpha != 0.0) {
                    const double cand = (alpha / alpha_q) * (alpha / alpha_q) * gq;
                    if (cand > devex[j]) devex[j] = cand;
                }
                if (devex[j] > devmax) devmax = devex[j];
            }
            devex[leaving_var] = std::max(gq / (alpha_q * alpha_q), 1.0);
            if (devmax > 1e8) std::fill(devex.begin(), devex.end(), 1.0);
        }

        const bool weak_pivot = std::abs(w(leave)) < 1e-5 * w.cwiseAbs().maxCoeff();
#ifdef ENTROBOUND_SIMPLEX_DEBUG
        {
            double obj2 = 0;
            for (int i = 0; i < m_; ++i) obj2 += cb(i) * xb(i);
            if (obj2 > g_prev_obj + 1e-6 * (1.0 + std::abs(g_prev_obj))) {
                fprintf(stderr,
                        "[simplex] OBJ UP iter=%ld %.9g -> %.9g theta=%g wl=%g wmax=%g etas=%zu\n",
                        iter, g_prev_obj, obj2, theta, w(leave), w.cwiseAbs().maxCoeff(),
                        etas_.size());
            }
            g_prev_obj = obj2;
        }
#endif
        etas_.push_back({leave, std::move(w)});
        if (weak_pivot || static_cast<int>(etas_.size()) >= opt.refactor_interval) {
            refresh();
#ifdef ENTROBOUND_SIMPLEX_DEBUG
            double obj3 = 0;
            for (int i = 0; i < m_; ++i) obj3 += cb(i) * xb(i);
            if (std::abs(obj3 - g_prev_obj) > 1e-6 * (1.0 + std::abs(g_prev_obj))) {
                fprintf(stderr, "[simplex] REFRESH JUMP iter=%ld %.9g -> %.9g\n",
                        iter, g_prev_obj, obj3);
            }
            g_prev_obj = obj3;
#endif
        }
    }

    if (iter >= opt.max_iterations && res.status != SimplexStatus::Optimal) {
        res.status = SimplexStatus::IterationLimit;
    }
    res.iterations = iter;
    res.basis = std::move(basis);
    res.z = Eigen::VectorXd::Zero(ncols);
    for (int i = 0; i < m_; ++i) res.z(res.basis[i]) = xb(i);
    Eigen::VectorXd cb2(m_);
    for (int i = 0; i < m_; ++i) cb2(i) = cost[res.basis[i]];
    res.pi = btran(cb2);
    res.objective = 0.0;
    for (int i = 0; i < m_; ++i) res.objective += cb2(i) * xb(i);
    return res;
}

SimplexResult RevisedSimplex::solve_from_basis(std::vector<int> basis,
                                               const SimplexOptions& opt) {
    if (static_cast<int>(basis.size()) != m_) {
        throw std::invalid_argument("solve_from_basis: basis size != row count");
    }
    std::vector<double> cost(num_columns());
    for (int j = 0; j < num_columns(); ++j) cost[j] = cols_[j].cost;
    std::vector<char> allowed(num_columns(), 1);
    return iterate(std::move(basis), cost, allowed, opt);
}

SimplexResult RevisedSimplex::solve(const SimplexOptions& opt) {
    const int nreal = num_columns();

    // Phase 1: artificial identity basis with signs matched to d.
    std::vector<int> basis(m_);
    for (int i = 0; i < m_; ++i) {
        SparseCol art;
        art.rows = {i};
        art.vals = {d_(i) >= 0.0 ? 1.0 : -1.0};
        art.cost = 0.0;
        basis[i] = add_column(std::move(art));
    }
    std::vector<double> cost(num_columns(), 0.0);
    for (int j = nreal; j < num_columns(); ++j) cost[j] = 1.0;
    std::vector<char> allowed(num_columns(), 1);

    SimplexResult phase1 = iterate(basis, cost, allowed, opt);
    const double feas_scale = std::max(1.0, d_.cwiseAbs().maxCoeff());
    if (phase1.status != SimplexStatus::Optimal ||
        phase1.objective > 1e-8 * feas_scale) {
        cols_.resize(nreal);
        phase1.status = (phase1.status == SimplexStatus::Optimal)
                            ? SimplexStatus::Infeasible
                            : phase1.status;
        return phase1;
    }

    // Phase 2: real costs; artificial columns are barred from re-entering.
    for (int j = 0; j < nreal; ++j) cost[j] = cols_[j].cost;
    for (int j = nreal; j < num_columns(); ++j) {
        cost[j] = 0.0;
        allowed[j] = 0;
    }
    SimplexResult res = iterate(phase1.basis, cost, allowed, opt);

    // Any artificial still basic sits at zero; report primal values for the
    // real columns only.
    cols_.resize(nreal);
    res.z.conservativeResize(nreal);
    return res;
}

namespace {

double unit_hash(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return static_cast<double>(x >> 11) * 0x1.0p-53;  // [0, 1)
}

}  // namespace

MinimaxMaster::MinimaxMaster(Eigen::VectorXd lo, Eigen::VectorXd hi,
                             Eigen::VectorXd tie_cost, double jitter)
    : k_(static_cast<int>(lo.size())),
      lo_(std::move(lo)),
      hi_(std::move(hi)),
      w_(std::move(tie_cost)),
      lp_(static_cast<int>(lo_.size()) + 1) {
    if (hi_.size() != k_ || w_.size() != k_) {
        throw std::invalid_argument("MinimaxMaster: bound/cost dimension mismatch");
    }
    for (int i = 0; i < k_; ++i) {
        if (!(lo_(i) < hi_(i))) {
            throw std::invalid_argument("MinimaxMaster: need lo < hi");
        }
    }
    if (jitter > 0.0) {
        for (int i = 0; i < k_; ++i) {
            w_(i) += jitter * (0.5 + unit_hash(static_cast<uint64_t>(i)));
        }
    }
    // Dual rhs d = (-w, 1); columns: per box side (+-e_i, 0) with dual cost
    // hi_i / -lo_i, then one column per row (g_r, 1) with dual cost b_r.
    lp_.rhs().head(k_) = -w_;
    lp_.rhs()(k_) = 1.0;
    for (int i = 0; i < k_; ++i) {
        lp_.add_column({{i}, {1.0}, hi_(i)});    // column 2i: upper side
        lp_.add_column({{i}, {-1.0}, -lo_(i)});  // column 2i+1: lower side
    }
}

int MinimaxMaster::add_row(const std::vector<int>& idx,
                           const std::vector<double>& val, double rhs) {
    SparseCol col;
    col.rows = idx;
    col.vals = val;
    col.rows.push_back(k_);
    col.vals.push_back(1.0);
    col.cost = rhs;
    lp_.add_column(std::move(col));
    return nrows_++;
}

MinimaxMaster::Result MinimaxMaster::solve(const SimplexOptions& opt) {
    if (nrows_ == 0) throw std::logic_error("MinimaxMaster: no rows added");
    if (!solved_) {
        // Anchor basis: one box column per coordinate, signed so the dual
        // point is nonnegative against the first row column, plus that row.
        const int anchor = 2 * k_;
        const SparseCol& a = lp_.column(anchor);
        Eigen::VectorXd g = Eigen::VectorXd::Zero(k_);
        for (size_t t = 0; t + 1 < a.rows.size(); ++t) g(a.rows[t]) = a.vals[t];
        basis_.resize(k_ + 1);
        for (int i = 0; i < k_; ++i) {
            const double resid = -w_(i) - g(i);
            basis_[i] = (resid >= 0.0) ? 2 * i : 2 * i + 1;
        }
        basis_[k_] = anchor;
        solved_ = true;
    }
    SimplexResult r = lp_.solve_from_basis(basis_, opt);
    basis_ = r.basis;

    Result out;
    out.status = r.status;
    out.iterations = r.iterations;
    out.u = r.pi.head(k_);
    out.tau = -r.pi(k_);
    out.objective = -r.objective;
    return out;
}

LinearBoxMaster::LinearBoxMaster(Eigen::VectorXd lo, Eigen::VectorXd hi,
                                 Eigen::VectorXd cost)
    : k_(static_cast<int>(lo.size())),
      lo_(std::move(lo)),
      hi_(std::move(hi)),
      w_(std::move(cost)),
      lp_(static_cast<int>(lo_.size())) {
    if (hi_.size() != k_ || w_.size() != k_) {
        throw std::invalid_argument("LinearBoxMaster: bound/cost dimension mismatch");
    }
    lp_.rhs() = -w_;
    for (int i = 0; i < k_; ++i) {
        lp_.add_column({{i}, {1.0}, hi_(i)});
        lp_.add_column({{i}, {-1.0}, -lo_(i)});
    }
}

int LinearBoxMaster::add_row(const std::vector<int>& idx,
                             const std::vector<double>& val, double rhs) {
    SparseCol col;
    col.rows = idx;
    col.vals = val;
    col.cost = rhs;
    lp_.add_column(std::move(col));
    return nrows_++;
}

LinearBoxMaster::Result LinearBoxMaster::solve(const SimplexOptions& opt) {
    if (!solved_) {
        basis_.resize(k_);
        for (int i = 0; i < k_; ++i) basis_[i] = (-w_(i) >= 0.0) ? 2 * i : 2 * i + 1;
        solved_ = true;
    }
    SimplexResult r = lp_.solve_from_basis(basis_, opt);
    basis_ = r.basis;

    Result out;
    out.iterations = r.iterations;
    // The dual going unbounded means the box LP has no feasible point.
    out.status = (r.status == SimplexStatus::Unbounded) ? SimplexStatus::Infeasible
                                                        : r.status;
    out.u = r.pi;
    out.objective = -r.objective;
    return out;
}

}  // namespace entrobound::lp
