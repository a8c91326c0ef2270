#include "entrobound/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace entrobound::geometry {

void Box::validate() const {
    if (lo.size() == 0 || lo.size() != hi.size()) {
        throw std::invalid_argument("Box: lo and hi must have the same nonzero dimension");
    }
    for (int i = 0; i < lo.size(); ++i) {
        if (!(lo(i) < hi(i))) {
            throw std::invalid_argument("Box: lo must be strictly below hi on every axis");
        }
    }
}

bool Box::contains(const Eigen::VectorXd& x, double tol) const {
    if (x.size() != lo.size()) return false;
    for (int i = 0; i < lo.size(); ++i) {
        if (x(i) < lo(i) - tol || x(i) > hi(i) + tol) return false;
    }
    return true;
}

GridSpec GridSpec::uniform(std::vector<int> counts) {
    GridSpec g;
    g.offsets.assign(counts.size(), 0);
    g.counts = std::move(counts);
    return g;
}

GridSpec GridSpec::symmetric(std::vector<int> counts) {
    GridSpec g;
    g.offsets.resize(counts.size());
    for (size_t i = 0; i < counts.size(); ++i) g.offsets[i] = -counts[i];
    g.counts = std::move(counts);
    return g;
}

void GridSpec::validate() const {
    if (counts.empty() || counts.size() != offsets.size()) {
        throw std::invalid_argument("GridSpec: counts and offsets must match in dimension");
    }
    for (size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] < 1) {
            throw std::invalid_argument("GridSpec: counts must be >= 1");
        }
        if (offsets[i] >= counts[i]) {
            throw std::invalid_argument("GridSpec: offset must be below count on every axis");
        }
    }
}

namespace {

std::vector<std::vector<int>> permutations_lex(int n) {
    std::vector<int> p(n);
    for (int i = 0; i < n; ++i) p[i] = i;
    std::vector<std::vector<int>> out;
    do {
        out.push_back(p);
    } while (std::next_permutation(p.begin(), p.end()));
    return out;
}

double max_pairwise_distance(const std::vector<Eigen::VectorXd>& pts,
                             const std::vector<int>& ids) {
    double best = 0.0;
    for (size_t a = 0; a < ids.size(); ++a) {
        for (size_t b = a + 1; b < ids.size(); ++b) {
            best = std::max(best, (pts[ids[a]] - pts[ids[b]]).norm());
        }
    }
    return best;
}

}  // namespace

Triangulation build_box_triangulation(const Box& box, const GridSpec& grid) {
    box.validate();
    grid.validate();
    const int n = box.dim();
    if (grid.dim() != n) {
        throw std::invalid_argument("build_box_triangulation: box and grid dimension mismatch");
    }

    Triangulation t;
    t.n_ = n;
    t.box_ = box;
    t.grid_ = grid;
    t.spacing_.resize(n);
    for (int d = 0; d < n; ++d) {
        t.spacing_(d) = (box.hi(d) - box.lo(d)) / grid.cells(d);
    }

    // Row-major vertex ids: last axis fastest.
    t.vstride_.assign(n, 1);
    for (int d = n - 2; d >= 0; --d) {
        t.vstride_[d] = t.vstride_[d + 1] * grid.levels(d + 1);
    }
    long nverts = 1;
    for (int d = 0; d < n; ++d) nverts *= grid.levels(d);

    t.vertices_.reserve(nverts);
    std::vector<int> j(n, 0);
    for (long id = 0; id < nverts; ++id) {
        Eigen::VectorXd x(n);
        for (int d = 0; d < n; ++d) x(d) = box.lo(d) + j[d] * t.spacing_(d);
        t.vertices_.push_back(std::move(x));
        for (int d = n - 1; d >= 0; --d) {
            if (++j[d] <= grid.cells(d)) break;
            j[d] = 0;
        }
    }

    const auto perms = permutations_lex(n);
    long ncells = 1;
    for (int d = 0; d < n; ++d) ncells *= grid.cells(d);
    t.simplices_.reserve(ncells * static_cast<long>(perms.size()));
    t.incident_.resize(nverts);

    std::vector<int> c(n, 0);
    for (long cell = 0; cell < ncells; ++cell) {
        long base = 0;
        for (int d = 0; d < n; ++d) base += c[d] * t.vstride_[d];
        for (const auto& perm : perms) {
            Simplex s;
            s.vertex_ids.resize(n + 1);
            s.vertex_ids[0] = static_cast<int>(base);
            long v = base;
            for (int k = 0; k < n; ++k) {
                v += t.vstride_[perm[k]];
                s.vertex_ids[k + 1] = static_cast<int>(v);
            }
            s.shape_matrix.setZero(n, n);
            const Eigen::VectorXd& x0 = t.vertices_[s.vertex_ids[0]];
            for (int k = 1; k <= n; ++k) {
                s.shape_matrix.row(k - 1) = (t.vertices_[s.vertex_ids[k]] - x0).transpose();
            }
            Eigen::PartialPivLU<Eigen::MatrixXd> lu(s.shape_matrix);
            if (std::abs(lu.determinant()) <= 0.0) {
                throw std::runtime_error("build_box_triangulation: singular shape matrix");
            }
            s.shape_inv = lu.inverse();
            s.diameter = max_pairwise_distance(t.vertices_, s.vertex_ids);
            const int sid = static_cast<int>(t.simplices_.size());
            for (int vid : s.vertex_ids) t.incident_[vid].push_back(sid);
            t.simplices_.push_back(std::move(s));
        }
        for (int d = n - 1; d >= 0; --d) {
            if (++c[d] < grid.cells(d)) break;
            c[d] = 0;
        }
    }
    return t;
}

Eigen::VectorXd Triangulation::barycentric(int nu, const Eigen::VectorXd& x,
                                           double tol) const {
    const Simplex& s = simplices_[nu];
    Eigen::VectorXd lam(n_ + 1);
    lam.tail(n_) = s.shape_inv.transpose() * (x - vertices_[s.vertex_ids[0]]);
    lam(0) = 1.0 - lam.tail(n_).sum();
    for (int k = 0; k <= n_; ++k) {
        if (lam(k) < -tol || lam(k) > 1.0 + tol) {
            throw std::domain_error("barycentric: point outside simplex");
        }
    }
    return lam;
}

std::vector<int> Triangulation::candidate_simplices(const Eigen::VectorXd& x) const {
    // Cell of x plus neighbors when x sits close to a cell face.
    constexpr double kFaceFuzz = 1e-8;
    std::vector<std::vector<int>> axis_cells(n_);
    for (int d = 0; d < n_; ++d) {
        const double u = (x(d) - box_.lo(d)) / spacing_(d);
        if (u < -kFaceFuzz || u > grid_.cells(d) + kFaceFuzz) return {};
        int cell = std::clamp(static_cast<int>(std::floor(u)), 0, grid_.cells(d) - 1);
        axis_cells[d].push_back(cell);
        const double frac = u - cell;
        if (frac < kFaceFuzz && cell > 0) axis_cells[d].push_back(cell - 1);
        if (frac > 1.0 - kFaceFuzz && cell + 1 < grid_.cells(d)) {
            axis_cells[d].push_back(cell + 1);
        }
    }
    long perms = 1;
    for (int k = 2; k <= n_; ++k) perms *= k;

    std::vector<int> out;
    std::vector<size_t> pick(n_, 0);
    while (true) {
        long cell = 0;
        for (int d = 0; d < n_; ++d) {
            long idx = axis_cells[d][pick[d]];
            long stride = 1;
            for (int e = d + 1; e < n_; ++e) stride *= grid_.cells(e);
            cell += idx * stride;
        }
        for (long p = 0; p < perms; ++p) {
            out.push_back(static_cast<int>(cell * perms + p));
        }
        int d = n_ - 1;
        for (; d >= 0; --d) {
            if (++pick[d] < axis_cells[d].size()) break;
            pick[d] = 0;
        }
        if (d < 0) break;
    }
    std::sort(out.begin(), out.end());
    return out;
}

int Triangulation::locate(const Eigen::VectorXd& x, double tol) const {
    for (int nu : candidate_simplices(x)) {
        try {
            barycentric(nu, x, tol);
            return nu;
        } catch (const std::domain_error&) {
        }
    }
    return -1;
}

int Triangulation::locate_for_orbit(const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& direction,
                                    double tol) const {
    bool contained_somewhere = false;
    for (int nu : candidate_simplices(x)) {
        Eigen::VectorXd lam;
        try {
            lam = barycentric(nu, x, tol);
        } catch (const std::domain_error&) {
            continue;
        }
        contained_somewhere = true;
        const Simplex& s = simplices_[nu];
        Eigen::VectorXd dlam(n_ + 1);
        dlam.tail(n_) = s.shape_inv.transpose() * direction;
        dlam(0) = -dlam.tail(n_).sum();
        const double dir_tol = 1e-12 * std::max(1.0, dlam.cwiseAbs().maxCoeff());
        bool ok = true;
        for (int k = 0; k <= n_; ++k) {
            if (lam(k) <= tol && dlam(k) < -dir_tol) {
                ok = false;
                break;
            }
        }
        if (ok) return nu;
    }
    if (!contained_somewhere) {
        throw std::domain_error("locate_for_orbit: point outside the triangulated domain");
    }
    throw std::domain_error(
        "locate_for_orbit: no simplex admits the direction (orbit leaves the domain)");
}

double Triangulation::max_incident_diameter(int vertex) const {
    double h = 0.0;
    for (int nu : incident_[vertex]) h = std::max(h, simplices_[nu].diameter);
    return h;
}

}  // namespace entrobound::geometry
