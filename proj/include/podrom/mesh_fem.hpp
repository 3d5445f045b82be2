#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "podrom/linalg.hpp"

namespace podrom::fem {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Gamma1 = {x = 1} u {y = 1}, Gamma2 = {x = 0} u {y = 0}. Corners touching Gamma1 belong to Gamma1.
enum class BoundaryTag { gamma1, gamma2 };

struct BoundaryEdge {
    std::array<std::size_t, 2> vertices;
    BoundaryTag tag;
};

/// Structured triangulation of the unit square. Each cell is split along the
/// diagonal joining (i, j) to (i+1, j+1).
class TriMesh {
public:
    static TriMesh build(std::size_t n_side);

    std::size_t n_side() const noexcept { return n_side_; }
    const std::vector<Point>& vertices() const noexcept { return vertices_; }
    const std::vector<std::array<std::size_t, 3>>& triangles() const noexcept { return triangles_; }
    const std::vector<BoundaryEdge>& boundary_edges() const noexcept { return boundary_edges_; }

    double signed_area(std::size_t t) const;
    /// Plain-text export: vertex count, "x y" lines, triangle count, "a b c" lines (0-based).
    void write(std::ostream& os) const;

private:
    std::size_t n_side_ = 0;
    std::vector<Point> vertices_;
    std::vector<std::array<std::size_t, 3>> triangles_;
    std::vector<BoundaryEdge> boundary_edges_;
};

/// Triangle quadrature on barycentric coordinates; weights sum to one.
struct Quadrature {
    std::vector<std::array<double, 3>> points;
    std::vector<double> weights;
    int degree = 0;

    static const Quadrature& degree2();  ///< 3 points
    static const Quadrature& degree4();  ///< 6 points
};

/// Which boundary part carries essential conditions.
enum class DirichletPart { gamma1, whole_boundary };

/// Continuous Lagrange P1/P2 space. Vertex dofs come first (same numbering as
/// the mesh), then one dof per edge ordered by its sorted endpoint pair.
class FeSpace {
public:
    FeSpace(TriMesh mesh, int degree, DirichletPart dirichlet = DirichletPart::gamma1);

    const TriMesh& mesh() const noexcept { return mesh_; }
    int degree() const noexcept { return degree_; }
    std::size_t n_dof() const noexcept { return dof_coords_.size(); }
    std::size_t dofs_per_element() const noexcept { return degree_ == 1 ? 3 : 6; }
    const std::vector<Point>& dof_coords() const noexcept { return dof_coords_; }
    const std::vector<bool>& dirichlet_mask() const noexcept { return dirichlet_mask_; }
    std::size_t n_dirichlet() const noexcept;
    DirichletPart dirichlet_part() const noexcept { return dirichlet_part_; }

    /// Local-to-global dof map of element e (dofs_per_element() entries).
    std::span<const std::size_t> element_dofs(std::size_t e) const noexcept {
        return {element_dofs_.data() + e * dofs_per_element(), dofs_per_element()};
    }
    /// Zero-valued matrix with the element-coupling sparsity pattern.
    const CsrMatrix& pattern() const noexcept { return pattern_; }
    /// Position in pattern().values() of local entry (a, b) of element e.
    std::size_t pattern_position(std::size_t e, std::size_t a, std::size_t b) const noexcept {
        const auto n = dofs_per_element();
        return element_positions_[(e * n + a) * n + b];
    }

    /// Rule used for mass/stiffness forms: degree 2 for P1, degree 4 for P2.
    const Quadrature& bilinear_rule() const noexcept;

    /// Shape function values at a barycentric point.
    void shape_values(const std::array<double, 3>& bary, std::span<double> out) const;
    /// Physical gradients at a barycentric point of element e (out: n_loc Points).
    void shape_gradients(std::size_t e, const std::array<double, 3>& bary, std::span<Point> out) const;
    Point map_to_physical(std::size_t e, const std::array<double, 3>& bary) const;
    double element_area(std::size_t e) const { return mesh_.signed_area(e); }

    /// Evaluates the finite element function with nodal values v at a point of the domain.
    double evaluate(std::span<const double> v, Point p) const;

private:
    TriMesh mesh_;
    int degree_;
    DirichletPart dirichlet_part_;
    std::vector<Point> dof_coords_;
    std::vector<bool> dirichlet_mask_;
    std::vector<std::size_t> element_dofs_;
    CsrMatrix pattern_;
    std::vector<std::size_t> element_positions_;
};

using ScalarFunction = std::function<double(double)>;
using PointFunction = std::function<double(Point)>;
/// Pointwise map R^nc -> R^nc acting on component tuples.
using PointwiseMap = std::function<void(std::span<const double> u, std::span<double> out)>;
/// Row-major nc x nc Jacobian of a PointwiseMap.
using PointwiseJacobian = std::function<void(std::span<const double> u, std::span<double> jac)>;

/// M_ij = int phi_i phi_j over all dofs.
CsrMatrix assemble_mass(const FeSpace& space);
/// A_ij = int grad phi_i . grad phi_j over all dofs.
CsrMatrix assemble_stiffness(const FeSpace& space);
/// b_i = int f phi_i (degree-4 rule).
Vector assemble_load(const FeSpace& space, const PointFunction& f);

/// b_i = int g(u_h) phi_i, u_h interpolated from `state` (degree-4 rule).
Vector assemble_reaction(const FeSpace& space, std::span<const double> state, const ScalarFunction& g);
/// J_ij = int g'(u_h) phi_i phi_j, mass-matrix pattern.
CsrMatrix assemble_reaction_jacobian(const FeSpace& space, std::span<const double> state,
                                     const ScalarFunction& g_prime);

/// Multi-component versions: `state` stacks nc blocks of n_dof values.
Vector assemble_reaction(const FeSpace& space, std::size_t n_components, std::span<const double> state,
                         const PointwiseMap& g);
/// Returns the (nc*n_dof)^2 block matrix with block (a, b) = int dg_a/du_b phi_i phi_j.
CsrMatrix assemble_reaction_jacobian(const FeSpace& space, std::size_t n_components,
                                     std::span<const double> state, const PointwiseJacobian& g_prime);
/// nc x nc block matrix with every block carrying the space's pattern.
CsrMatrix block_pattern(const FeSpace& space, std::size_t n_components);

Vector interpolate(const FeSpace& space, const PointFunction& f);

/// Dirichlet mask repeated for each of n_components stacked blocks.
std::vector<bool> system_mask(const FeSpace& space, std::size_t n_components);

/// Symmetric elimination: constrained rows and columns become identity, the
/// rhs is corrected with the lift so the solution equals lift on constrained dofs.
std::pair<CsrMatrix, Vector> apply_dirichlet(const std::vector<bool>& mask, const CsrMatrix& system,
                                             std::span<const double> rhs, std::span<const double> lift);
std::pair<CsrMatrix, Vector> apply_dirichlet(const FeSpace& space, const CsrMatrix& system,
                                             std::span<const double> rhs, std::span<const double> lift);

struct Norms {
    double l2 = 0.0;
    double h1_semi = 0.0;
};

/// (sqrt(v^T M v), sqrt(v^T A v)) evaluated element by element.
Norms norms(const FeSpace& space, std::span<const double> v);

/// ||u_h - u||_0 with u_h from nodal values and u evaluated at quadrature points.
double l2_error(const FeSpace& space, std::span<const double> v, const PointFunction& exact);

}  // namespace podrom::fem
