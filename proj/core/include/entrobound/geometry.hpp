#pragma once

#include <Eigen/Dense>
#include <vector>

namespace entrobound::geometry {

/// Axis-aligned box [lo, hi], the domain of every triangulation here.
struct Box {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    int dim() const { return static_cast<int>(lo.size()); }
    void validate() const;  // throws unless lo[i] < hi[i] for all i
    bool contains(const Eigen::VectorXd& x, double tol = 0.0) const;
};

/// Uniform grid layout. Along axis d the integer index runs from offsets[d]
/// to counts[d], giving counts[d] - offsets[d] cells; offsets are index
/// labels (the geometry depends only on the cell count), kept so that grids
/// anchored below an axis origin can be addressed the way they are defined.
struct GridSpec {
    std::vector<int> counts;
    std::vector<int> offsets;

    static GridSpec uniform(std::vector<int> counts);    // offsets all 0
    static GridSpec symmetric(std::vector<int> counts);  // offsets = -counts

    int dim() const { return static_cast<int>(counts.size()); }
    int cells(int d) const { return counts[d] - offsets[d]; }
    int levels(int d) const { return cells(d) + 1; }
    void validate() const;  // counts >= 1, offsets < counts
};

/// One n-simplex of a triangulation. shape_matrix has rows x_k - x_0 in the
/// stored vertex order (ascending grid index); its inverse maps vertex value
/// differences to simplex gradients.
struct Simplex {
    std::vector<int> vertex_ids;   // n+1 entries
    Eigen::MatrixXd shape_matrix;  // X, rows x_k - x_0
    Eigen::MatrixXd shape_inv;     // X^{-1}, cached
    double diameter = 0.0;         // max pairwise vertex distance
};

/// Standard (Kuhn/Freudenthal) triangulation of a box grid: every grid cell
/// split into n! simplices along its permutation chains. Immutable after
/// construction; all queries are pure.
class Triangulation {
public:
    static constexpr double kContainTol = 1e-10;  // barycentric containment

    int dim() const { return n_; }
    const Box& box() const { return box_; }
    const GridSpec& grid() const { return grid_; }
    double spacing(int d) const { return spacing_(d); }
    const Eigen::VectorXd& spacings() const { return spacing_; }

    int vertex_count() const { return static_cast<int>(vertices_.size()); }
    int simplex_count() const { return static_cast<int>(simplices_.size()); }
    const std::vector<Eigen::VectorXd>& vertices() const { return vertices_; }
    const Eigen::VectorXd& vertex(int k) const { return vertices_[k]; }
    const std::vector<Simplex>& simplices() const { return simplices_; }
    const Simplex& simplex(int nu) const { return simplices_[nu]; }
    const std::vector<int>& incident_simplices(int vertex) const {
        return incident_[vertex];
    }

    /// Barycentric coordinates of x in simplex nu; throws std::domain_error
    /// if any coordinate lies outside [-tol, 1+tol].
    Eigen::VectorXd barycentric(int nu, const Eigen::VectorXd& x,
                                double tol = kContainTol) const;

    /// Lowest-index simplex containing x (within tolerance), or -1.
    int locate(const Eigen::VectorXd& x, double tol = kContainTol) const;

    /// Simplex containing x such that x + theta*direction stays inside for
    /// all small theta >= 0. Ties broken by lowest simplex index (in
    /// particular direction = 0 returns the lowest-index containing simplex).
    /// Throws std::domain_error if x is outside the domain or no simplex
    /// admits the direction (the orbit leaves the domain).
    int locate_for_orbit(const Eigen::VectorXd& x,
                         const Eigen::VectorXd& direction,
                         double tol = kContainTol) const;

    /// Max diameter among the simplices incident to a vertex.
    double max_incident_diameter(int vertex) const;

private:
    friend Triangulation build_box_triangulation(const Box&, const GridSpec&);

    std::vector<int> candidate_simplices(const Eigen::VectorXd& x) const;

    int n_ = 0;
    Box box_;
    GridSpec grid_;
    Eigen::VectorXd spacing_;
    std::vector<long> vstride_;
    std::vector<Eigen::VectorXd> vertices_;
    std::vector<Simplex> simplices_;
    std::vector<std::vector<int>> incident_;
};

/// Builds the standard triangulation of the grid over the box: vertices at
/// lo + j .* h, each cell split into n! simplices with deterministic
/// (ascending grid index) vertex order and lexicographic permutation order.
Triangulation build_box_triangulation(const Box& box, const GridSpec& grid);

}  // namespace entrobound::geometry
