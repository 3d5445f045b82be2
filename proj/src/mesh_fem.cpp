#include "podrom/mesh_fem.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "podrom/error.hpp"
#include "podrom/matrix_market.hpp"

namespace podrom::fem {

// ---------------------------------------------------------------------------
// Mesh

TriMesh TriMesh::build(std::size_t n_side) {
    if (n_side == 0) throw InvalidInput("build_mesh: n_side must be at least 1");
    TriMesh m;
    m.n_side_ = n_side;
    const std::size_t nv = n_side + 1;
    const double h = 1.0 / static_cast<double>(n_side);
    m.vertices_.reserve(nv * nv);
    for (std::size_t j = 0; j < nv; ++j)
        for (std::size_t i = 0; i < nv; ++i)
            m.vertices_.push_back({i == n_side ? 1.0 : static_cast<double>(i) * h,
                                   j == n_side ? 1.0 : static_cast<double>(j) * h});

    auto vid = [nv](std::size_t i, std::size_t j) { return j * nv + i; };
    m.triangles_.reserve(2 * n_side * n_side);
    for (std::size_t j = 0; j < n_side; ++j)
        for (std::size_t i = 0; i < n_side; ++i) {
            const auto sw = vid(i, j), se = vid(i + 1, j), ne = vid(i + 1, j + 1), nw = vid(i, j + 1);
            m.triangles_.push_back({sw, se, ne});
            m.triangles_.push_back({sw, ne, nw});
        }

    for (std::size_t k = 0; k < n_side; ++k) {
        m.boundary_edges_.push_back({{vid(k, 0), vid(k + 1, 0)}, BoundaryTag::gamma2});            // y = 0
        m.boundary_edges_.push_back({{vid(n_side, k), vid(n_side, k + 1)}, BoundaryTag::gamma1});  // x = 1
        m.boundary_edges_.push_back({{vid(k, n_side), vid(k + 1, n_side)}, BoundaryTag::gamma1});  // y = 1
        m.boundary_edges_.push_back({{vid(0, k), vid(0, k + 1)}, BoundaryTag::gamma2});            // x = 0
    }
    return m;
}

double TriMesh::signed_area(std::size_t t) const {
    const auto& tri = triangles_[t];
    const Point a = vertices_[tri[0]], b = vertices_[tri[1]], c = vertices_[tri[2]];
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

void TriMesh::write(std::ostream& os) const {
    os << vertices_.size() << '\n';
    for (const auto& p : vertices_) os << mm::format17(p.x) << ' ' << mm::format17(p.y) << '\n';
    os << triangles_.size() << '\n';
    for (const auto& t : triangles_) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

// ---------------------------------------------------------------------------
// Quadrature

const Quadrature& Quadrature::degree2() {
    static const Quadrature q = [] {
        Quadrature r;
        r.degree = 2;
        const double a = 1.0 / 6.0, b = 2.0 / 3.0;
        r.points = {{b, a, a}, {a, b, a}, {a, a, b}};
        r.weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
        return r;
    }();
    return q;
}

const Quadrature& Quadrature::degree4() {
    static const Quadrature q = [] {
        Quadrature r;
        r.degree = 4;
        const double a1 = 0.44594849091596488631832925388305, w1 = 0.22338158967801146569500700843312;
        const double a2 = 0.091576213509770743459571463402202, w2 = 0.10995174365532186763832632490021;
        const double b1 = 1.0 - 2.0 * a1, b2 = 1.0 - 2.0 * a2;
        r.points = {{b1, a1, a1}, {a1, b1, a1}, {a1, a1, b1}, {b2, a2, a2}, {a2, b2, a2}, {a2, a2, b2}};
        r.weights = {w1, w1, w1, w2, w2, w2};
        return r;
    }();
    return q;
}

// ---------------------------------------------------------------------------
// FeSpace

namespace {

bool on_gamma1(Point p) { return p.x == 1.0 || p.y == 1.0; }
bool on_boundary(Point p) { return p.x == 0.0 || p.y == 0.0 || p.x == 1.0 || p.y == 1.0; }

// Gradients of the barycentric coordinates of triangle (a, b, c).
std::array<Point, 3> barycentric_gradients(Point a, Point b, Point c) {
    const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    return {Point{(b.y - c.y) / det, (c.x - b.x) / det}, Point{(c.y - a.y) / det, (a.x - c.x) / det},
            Point{(a.y - b.y) / det, (b.x - a.x) / det}};
}

}  // namespace

FeSpace::FeSpace(TriMesh mesh, int degree, DirichletPart dirichlet)
    : mesh_(std::move(mesh)), degree_(degree), dirichlet_part_(dirichlet) {
    if (degree_ != 1 && degree_ != 2) throw InvalidInput("FeSpace: degree must be 1 or 2");
    const auto& verts = mesh_.vertices();
    const auto& tris = mesh_.triangles();
    dof_coords_ = verts;
    const std::size_t nloc = dofs_per_element();
    element_dofs_.resize(tris.size() * nloc);

    std::map<std::pair<std::size_t, std::size_t>, std::size_t> edge_index;
    if (degree_ == 2) {
        for (const auto& t : tris)
            for (int k = 0; k < 3; ++k) {
                const auto a = t[k], b = t[(k + 1) % 3];
                edge_index.emplace(std::minmax(a, b), 0);
            }
        std::size_t next = verts.size();
        for (auto& [edge, idx] : edge_index) {
            idx = next++;
            const Point p = verts[edge.first], q = verts[edge.second];
            dof_coords_.push_back({0.5 * (p.x + q.x), 0.5 * (p.y + q.y)});
        }
    }
    for (std::size_t e = 0; e < tris.size(); ++e) {
        const auto& t = tris[e];
        for (std::size_t k = 0; k < 3; ++k) element_dofs_[e * nloc + k] = t[k];
        if (degree_ == 2) {
            // Local edge nodes: 3 on (v0,v1), 4 on (v1,v2), 5 on (v2,v0).
            for (std::size_t k = 0; k < 3; ++k)
                element_dofs_[e * nloc + 3 + k] = edge_index.at(std::minmax(t[k], t[(k + 1) % 3]));
        }
    }

    dirichlet_mask_.resize(dof_coords_.size());
    for (std::size_t i = 0; i < dof_coords_.size(); ++i)
        dirichlet_mask_[i] = dirichlet_part_ == DirichletPart::gamma1 ? on_gamma1(dof_coords_[i])
                                                                      : on_boundary(dof_coords_[i]);

    std::vector<CsrMatrix::Triplet> trip;
    trip.reserve(tris.size() * nloc * nloc);
    for (std::size_t e = 0; e < tris.size(); ++e)
        for (std::size_t a = 0; a < nloc; ++a)
            for (std::size_t b = 0; b < nloc; ++b)
                trip.push_back({element_dofs_[e * nloc + a], element_dofs_[e * nloc + b], 0.0});
    pattern_ = CsrMatrix::from_triplets(n_dof(), n_dof(), std::move(trip));
    element_positions_.resize(tris.size() * nloc * nloc);
    for (std::size_t e = 0; e < tris.size(); ++e)
        for (std::size_t a = 0; a < nloc; ++a)
            for (std::size_t b = 0; b < nloc; ++b)
                element_positions_[(e * nloc + a) * nloc + b] =
                    pattern_.find(element_dofs_[e * nloc + a], element_dofs_[e * nloc + b]);
}

std::size_t FeSpace::n_dirichlet() const noexcept {
    return static_cast<std::size_t>(std::count(dirichlet_mask_.begin(), dirichlet_mask_.end(), true));
}

const Quadrature& FeSpace::bilinear_rule() const noexcept {
    return degree_ == 1 ? Quadrature::degree2() : Quadrature::degree4();
}

void FeSpace::shape_values(const std::array<double, 3>& l, std::span<double> out) const {
    if (degree_ == 1) {
        out[0] = l[0];
        out[1] = l[1];
        out[2] = l[2];
        return;
    }
    for (int k = 0; k < 3; ++k) out[k] = l[k] * (2.0 * l[k] - 1.0);
    out[3] = 4.0 * l[0] * l[1];
    out[4] = 4.0 * l[1] * l[2];
    out[5] = 4.0 * l[2] * l[0];
}

void FeSpace::shape_gradients(std::size_t e, const std::array<double, 3>& l, std::span<Point> out) const {
    const auto& t = mesh_.triangles()[e];
    const auto& v = mesh_.vertices();
    const auto g = barycentric_gradients(v[t[0]], v[t[1]], v[t[2]]);
    if (degree_ == 1) {
        for (int k = 0; k < 3; ++k) out[k] = g[k];
        return;
    }
    for (int k = 0; k < 3; ++k) {
        const double s = 4.0 * l[k] - 1.0;
        out[k] = {s * g[k].x, s * g[k].y};
    }
    for (int k = 0; k < 3; ++k) {
        const int m = (k + 1) % 3;
        out[3 + k] = {4.0 * (l[k] * g[m].x + l[m] * g[k].x), 4.0 * (l[k] * g[m].y + l[m] * g[k].y)};
    }
}

Point FeSpace::map_to_physical(std::size_t e, const std::array<double, 3>& l) const {
    const auto& t = mesh_.triangles()[e];
    const auto& v = mesh_.vertices();
    return {l[0] * v[t[0]].x + l[1] * v[t[1]].x + l[2] * v[t[2]].x,
            l[0] * v[t[0]].y + l[1] * v[t[1]].y + l[2] * v[t[2]].y};
}

double FeSpace::evaluate(std::span<const double> v, Point p) const {
    if (v.size() != n_dof()) throw InvalidInput("FeSpace::evaluate: dimension mismatch");
    const auto n = mesh_.n_side();
    const double sx = std::clamp(p.x, 0.0, 1.0) * static_cast<double>(n);
    const double sy = std::clamp(p.y, 0.0, 1.0) * static_cast<double>(n);
    const auto i = std::min(static_cast<std::size_t>(sx), n - 1);
    const auto j = std::min(static_cast<std::size_t>(sy), n - 1);
    const double fx = sx - static_cast<double>(i), fy = sy - static_cast<double>(j);
    std::size_t e = 2 * (j * n + i);
    std::array<double, 3> l{};
    if (fx >= fy) {
        l = {1.0 - fx, fx - fy, fy};  // (sw, se, ne)
    } else {
        ++e;
        l = {1.0 - fy, fx, fy - fx};  // (sw, ne, nw)
    }
    std::array<double, 6> phi{};
    shape_values(l, phi);
    const auto dofs = element_dofs(e);
    double s = 0.0;
    for (std::size_t a = 0; a < dofs.size(); ++a) s += phi[a] * v[dofs[a]];
    return s;
}

// ---------------------------------------------------------------------------
// Assembly

namespace {

void check_state(const FeSpace& space, std::size_t nc, std::span<const double> state) {
    if (state.size() != nc * space.n_dof()) throw InvalidInput("assembly: state dimension mismatch");
}

}  // namespace

CsrMatrix assemble_mass(const FeSpace& space) {
    CsrMatrix m = space.pattern();
    auto& vals = m.values();
    const auto& rule = space.bilinear_rule();
    const std::size_t nloc = space.dofs_per_element();
    std::array<double, 6> phi{};
    for (std::size_t e = 0; e < space.mesh().triangles().size(); ++e) {
        const double area = space.element_area(e);
        for (std::size_t q = 0; q < rule.weights.size(); ++q) {
            space.shape_values(rule.points[q], phi);
            const double w = rule.weights[q] * area;
            for (std::size_t a = 0; a < nloc; ++a)
                for (std::size_t b = 0; b < nloc; ++b) vals[space.pattern_position(e, a, b)] += w * phi[a] * phi[b];
        }
    }
    return m;
}

CsrMatrix assemble_stiffness(const FeSpace& space) {
    CsrMatrix k = space.pattern();
    auto& vals = k.values();
    const auto& rule = space.bilinear_rule();
    const std::size_t nloc = space.dofs_per_element();
    std::array<Point, 6> grad{};
    for (std::size_t e = 0; e < space.mesh().triangles().size(); ++e) {
        const double area = space.element_area(e);
        for (std::size_t q = 0; q < rule.weights.size(); ++q) {
            space.shape_gradients(e, rule.points[q], grad);
            const double w = rule.weights[q] * area;
            for (std::size_t a = 0; a < nloc; ++a)
                for (std::size_t b = 0; b < nloc; ++b)
                    vals[space.pattern_position(e, a, b)] += w * (grad[a].x * grad[b].x + grad[a].y * grad[b].y);
        }
    }
    return k;
}

Vector assemble_load(const FeSpace& space, const PointFunction& f) {
    Vector b(space.n_dof(), 0.0);
    const auto& rule = Quadrature::degree4();
    std::array<double, 6> phi{};
    for (std::size_t e = 0; e < space.mesh().triangles().size(); ++e) {
        const double area = space.element_area(e);
        const auto dofs = space.element_dofs(e);
        for (std::size_t q = 0; q < rule.weights.size(); ++q) {
            space.shape_values(rule.points[q], phi);
            const double w = rule.weights[q] * area * f(space.map_to_physical(e, rule.points[q]));
            for (std::size_t a = 0; a < dofs.size(); ++a) b[dofs[a]] += w * phi[a];
        }
    }
    return b;
}

Vector assemble_reaction(const FeSpace& space, std::size_t nc, std::span<const double> state, const PointwiseMap& g) {
    check_state(space, nc, state);
    const std::size_t n = space.n_dof();
    Vector b(nc * n, 0.0);
    const auto& rule = Quadrature::degree4();
    std::array<double, 6> phi{};
    std::vector<double> u(nc), gu(nc);
    for (std::size_t e = 0; e < space.mesh().triangles().size(); ++e) {
        const double area = space.element_area(e);
        const auto dofs = space.element_dofs(e);
        for (std::size_t q = 0; q < rule.weights.size(); ++q) {
            space.shape_values(rule.points[q], phi);
            for (std::size_t c = 0; c < nc; ++c) {
                double s = 0.0;
                for (std::size_t a = 0; a < dofs.size(); ++a) s += phi[a] * state[c * n + dofs[a]];
                u[c] = s;
            }
            g(u, gu);
            const double w = rule.weights[q] * area;
            for (std::size_t c = 0; c < nc; ++c)
                for (std::size_t a = 0; a < dofs.size(); ++a) b[c * n + dofs[a]] += w * gu[c] * phi[a];
        }
    }
    return b;
}

CsrMatrix block_pattern(const FeSpace& space, std::size_t nc) {
    const auto& p = space.pattern();
    if (nc == 1) return p;
    const std::size_t n = space.n_dof(), nnz = p.nnz();
    std::vector<std::size_t> offsets(nc * n + 1, 0);
    std::vector<std::size_t> cols(nc * nc * nnz);
    std::size_t k = 0;
    for (std::size_t bi = 0; bi < nc; ++bi)
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t bj = 0; bj < nc; ++bj)
                for (std::size_t s = p.row_offsets()[i]; s < p.row_offsets()[i + 1]; ++s)
                    cols[k++] = bj * n + p.col_indices()[s];
            offsets[bi * n + i + 1] = k;
        }
    return CsrMatrix(nc * n, nc * n, std::move(offsets), std::move(cols), Vector(nc * nc * nnz, 0.0));
}

CsrMatrix assemble_reaction_jacobian(const FeSpace& space, std::size_t nc, std::span<const double> state,
                                     const PointwiseJacobian& g_prime) {
    check_state(space, nc, state);
    const std::size_t n = space.n_dof();
    CsrMatrix jm = block_pattern(space, nc);
    auto& vals = jm.values();
    const auto& p = space.pattern();
    const auto& off = p.row_offsets();
    // In block_pattern, row (bi, i) holds nc consecutive copies of row i of the pattern.
    auto position = [&](std::size_t bi, std::size_t bj, std::size_t i, std::size_t base_pos) {
        const std::size_t row_len = off[i + 1] - off[i];
        return jm.row_offsets()[bi * n + i] + bj * row_len + (base_pos - off[i]);
    };
    const auto& rule = Quadrature::degree4();
    const std::size_t nloc = space.dofs_per_element();
    std::array<double, 6> phi{};
    std::vector<double> u(nc), jac(nc * nc);
    for (std::size_t e = 0; e < space.mesh().triangles().size(); ++e) {
        const double area = space.element_area(e);
        const auto dofs = space.element_dofs(e);
        for (std::size_t q = 0; q < rule.weights.size(); ++q) {
            space.shape_values(rule.points[q], phi);
            for (std::size_t c = 0; c < nc; ++c) {
                double s = 0.0;
                for (std::size_t a = 0; a < nloc; ++a) s += phi[a] * state[c * n + dofs[a]];
                u[c] = s;
            }
            g_prime(u, jac);
            const double w = rule.weights[q] * area;
            for (std::size_t a = 0; a < nloc; ++a)
                for (std::size_t b = 0; b < nloc; ++b) {
                    const double pp = w * phi[a] * phi[b];
                    const std::size_t base = space.pattern_position(e, a, b);
                    for (std::size_t bi = 0; bi < nc; ++bi)
                        for (std::size_t bj = 0; bj < nc; ++bj) {
                            const double d = jac[bi * nc + bj];
                            if (d != 0.0) vals[position(bi, bj, dofs[a], base)] += pp * d;
                        }
                }
        }
    }
    return jm;
}

Vector assemble_reaction(const FeSpace& space, std::span<const double> state, const ScalarFunction& g) {
    return assemble_reaction(space, 1, state,
                             [&g](std::span<const double> u, std::span<double> out) { out[0] = g(u[0]); });
}

CsrMatrix assemble_reaction_jacobian(const FeSpace& space, std::span<const double> state,
                                     const ScalarFunction& g_prime) {
    return assemble_reaction_jacobian(
        space, 1, state, [&g_prime](std::span<const double> u, std::span<double> out) { out[0] = g_prime(u[0]); });
}

Vector interpolate(const FeSpace& space, const PointFunction& f) {
    Vector v(space.n_dof());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(space.dof_coords()[i]);
    return v;
}

std::vector<bool> system_mask(const FeSpace& space, std::size_t nc) {
    std::vector<bool> m;
    m.reserve(nc * space.n_dof());
    for (std::size_t c = 0; c < nc; ++c) m.insert(m.end(), space.dirichlet_mask().begin(), space.dirichlet_mask().end());
    return m;
}

std::pair<CsrMatrix, Vector> apply_dirichlet(const std::vector<bool>& mask, const CsrMatrix& system,
                                             std::span<const double> rhs, std::span<const double> lift) {
    const std::size_t n = system.rows();
    if (system.cols() != n || mask.size() != n || rhs.size() != n || lift.size() != n)
        throw InvalidInput("apply_dirichlet: dimension mismatch");
    CsrMatrix a = system;
    Vector b(rhs.begin(), rhs.end());
    auto& vals = a.values();
    const auto& off = a.row_offsets();
    const auto& ci = a.col_indices();
    for (std::size_t i = 0; i < n; ++i) {
        if (mask[i]) {
            for (std::size_t k = off[i]; k < off[i + 1]; ++k) vals[k] = ci[k] == i ? 1.0 : 0.0;
            b[i] = lift[i];
            continue;
        }
        for (std::size_t k = off[i]; k < off[i + 1]; ++k)
            if (mask[ci[k]]) {
                b[i] -= vals[k] * lift[ci[k]];
                vals[k] = 0.0;
            }
    }
    return {std::move(a), std::move(b)};
}

std::pair<CsrMatrix, Vector> apply_dirichlet(const FeSpace& space, const CsrMatrix& system,
                                             std::span<const double> rhs, std::span<const double> lift) {
    const std::size_t nc = space.n_dof() == 0 ? 1 : system.rows() / space.n_dof();
    return apply_dirichlet(system_mask(space, nc), system, rhs, lift);
}

Norms norms(const FeSpace& space, std::span<const double> v) {
    if (v.size() != space.n_dof()) throw InvalidInput("norms: dimension mismatch");
    const auto& rule = space.bilinear_rule();
    std::array<double, 6> phi{};
    std::array<Point, 6> grad{};
    double l2 = 0.0, h1 = 0.0;
    for (std::size_t e = 0; e < space.mesh().triangles().size(); ++e) {
        const double area = space.element_area(e);
        const auto dofs = space.element_dofs(e);
        for (std::size_t q = 0; q < rule.weights.size(); ++q) {
            space.shape_values(rule.points[q], phi);
            space.shape_gradients(e, rule.points[q], grad);
            double val = 0.0, gx = 0.0, gy = 0.0;
            for (std::size_t a = 0; a < dofs.size(); ++a) {
                const double c = v[dofs[a]];
                val += c * phi[a];
                gx += c * grad[a].x;
                gy += c * grad[a].y;
            }
            const double w = rule.weights[q] * area;
            l2 += w * val * val;
            h1 += w * (gx * gx + gy * gy);
        }
    }
    return {std::sqrt(l2), std::sqrt(h1)};
}

double l2_error(const FeSpace& space, std::span<const double> v, const PointFunction& exact) {
    if (v.size() != space.n_dof()) throw InvalidInput("l2_error: dimension mismatch");
    const auto& rule = Quadrature::degree4();
    std::array<double, 6> phi{};
    double s = 0.0;
    for (std::size_t e = 0; e < space.mesh().triangles().size(); ++e) {
        const double area = space.element_area(e);
        const auto dofs = space.element_dofs(e);
        for (std::size_t q = 0; q < rule.weights.size(); ++q) {
            space.shape_values(rule.points[q], phi);
            double val = 0.0;
            for (std::size_t a = 0; a < dofs.size(); ++a) val += v[dofs[a]] * phi[a];
            const double d = val - exact(space.map_to_physical(e, rule.points[q]));
            s += rule.weights[q] * area * d * d;
        }
    }
    return std::sqrt(s);
}

}  // namespace podrom::fem
