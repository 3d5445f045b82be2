#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "podrom/error.hpp"
#include "podrom/mesh_fem.hpp"

using namespace podrom;
using namespace podrom::fem;
using std::numbers::pi;

namespace {

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.entries().size(); ++i) m = std::max(m, std::abs(a.entries()[i] - b.entries()[i]));
    return m;
}

Vector random_state(std::size_t n, unsigned seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    Vector v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

}  // namespace

TEST(TriMesh, Counts) {
    const auto m1 = TriMesh::build(1);
    EXPECT_EQ(m1.triangles().size(), 2u);
    EXPECT_EQ(m1.vertices().size(), 4u);
    const auto m2 = TriMesh::build(2);
    EXPECT_EQ(m2.triangles().size(), 8u);
    EXPECT_EQ(m2.vertices().size(), 9u);
    EXPECT_EQ(m2.boundary_edges().size(), 8u);
    EXPECT_THROW(TriMesh::build(0), InvalidInput);
}

TEST(TriMesh, OrientationDiagonalsAndTags) {
    const auto m = TriMesh::build(5);
    const double h = 1.0 / 5;
    for (std::size_t t = 0; t < m.triangles().size(); ++t) {
        EXPECT_NEAR(m.signed_area(t), h * h / 2, 1e-15);
        // every triangle contains one southwest-northeast diagonal
        const auto& tri = m.triangles()[t];
        int diagonals = 0;
        for (int a = 0; a < 3; ++a) {
            const auto p = m.vertices()[tri[a]], q = m.vertices()[tri[(a + 1) % 3]];
            if (std::abs(std::abs(p.x - q.x) - h) < 1e-12 && std::abs((q.y - p.y) - (q.x - p.x)) < 1e-12) ++diagonals;
        }
        EXPECT_EQ(diagonals, 1);
    }
    std::size_t g1 = 0;
    for (const auto& e : m.boundary_edges()) {
        const auto p = m.vertices()[e.vertices[0]], q = m.vertices()[e.vertices[1]];
        const bool on_g1 = (p.x == 1.0 && q.x == 1.0) || (p.y == 1.0 && q.y == 1.0);
        EXPECT_EQ(e.tag == BoundaryTag::gamma1, on_g1);
        g1 += on_g1;
    }
    EXPECT_EQ(g1, 10u);
    EXPECT_EQ(m.boundary_edges().size(), 20u);
}

TEST(FeSpace, DofCountsAtLargeMesh) {
    const FeSpace sp(TriMesh::build(80), 2);
    EXPECT_EQ(sp.n_dof(), 161u * 161u);
    EXPECT_EQ(2 * sp.n_dof(), 51842u);
    EXPECT_EQ(2 * (sp.n_dof() - sp.n_dirichlet()), 51200u);
}

TEST(FeSpace, DirichletMaskIsClosedGamma1) {
    for (int degree : {1, 2}) {
        const FeSpace sp(TriMesh::build(4), degree);
        for (std::size_t i = 0; i < sp.n_dof(); ++i) {
            const auto p = sp.dof_coords()[i];
            EXPECT_EQ(sp.dirichlet_mask()[i], p.x == 1.0 || p.y == 1.0);
        }
        const FeSpace whole(TriMesh::build(4), degree, DirichletPart::whole_boundary);
        for (std::size_t i = 0; i < whole.n_dof(); ++i) {
            const auto p = whole.dof_coords()[i];
            EXPECT_EQ(whole.dirichlet_mask()[i], p.x == 1.0 || p.y == 1.0 || p.x == 0.0 || p.y == 0.0);
        }
    }
    EXPECT_EQ(FeSpace(TriMesh::build(3), 1).n_dof(), 16u);
    EXPECT_EQ(FeSpace(TriMesh::build(3), 2).n_dof(), 49u);
    EXPECT_THROW(FeSpace(TriMesh::build(3), 3), InvalidInput);
}

TEST(Quadrature, MonomialExactness) {
    for (const Quadrature* rule : {&Quadrature::degree2(), &Quadrature::degree4()}) {
        double wsum = 0.0;
        for (double w : rule->weights) wsum += w;
        EXPECT_NEAR(wsum, 1.0, 1e-15);
        for (int a = 0; a <= rule->degree; ++a)
            for (int b = 0; a + b <= rule->degree; ++b) {
                // normalized measure: 2 a! b! / (a + b + 2)!
                const double exact = 2.0 * factorial(a) * factorial(b) / factorial(a + b + 2);
                double q = 0.0;
                for (std::size_t k = 0; k < rule->points.size(); ++k)
                    q += rule->weights[k] * std::pow(rule->points[k][1], a) * std::pow(rule->points[k][2], b);
                EXPECT_NEAR(q, exact, 1e-14 * exact) << "degree " << rule->degree << " monomial " << a << "," << b;
            }
    }
}

TEST(Assembly, P1MassAndStiffnessByHand) {
    // n_side = 1: triangles (0,1,3) and (0,3,2), each of area 1/2.
    const FeSpace sp(TriMesh::build(1), 1);
    const auto m = assemble_mass(sp).to_dense();
    EXPECT_NEAR(m(1, 1), 0.5 / 6, 1e-15);
    EXPECT_NEAR(m(0, 0), 2 * 0.5 / 6, 1e-15);
    EXPECT_NEAR(m(0, 1), 0.5 / 12, 1e-15);
    EXPECT_NEAR(m(0, 3), 2 * 0.5 / 12, 1e-15);
    EXPECT_NEAR(m(1, 2), 0.0, 1e-15);

    // right angle of triangle (0,1,3) sits at vertex 1: element matrix [[1/2,-1/2,0],[-1/2,1,-1/2],[0,-1/2,1/2]]
    const auto a = assemble_stiffness(sp).to_dense();
    EXPECT_NEAR(a(1, 1), 1.0, 1e-15);
    EXPECT_NEAR(a(2, 2), 1.0, 1e-15);
    EXPECT_NEAR(a(0, 0), 1.0, 1e-15);
    EXPECT_NEAR(a(0, 1), -0.5, 1e-15);
    EXPECT_NEAR(a(1, 3), -0.5, 1e-15);
    EXPECT_NEAR(a(0, 3), 0.0, 1e-15);
}

TEST(Assembly, MassAndStiffnessProperties) {
    for (int degree : {1, 2}) {
        const FeSpace sp(TriMesh::build(3), degree);
        const auto m = assemble_mass(sp).to_dense();
        const auto a = assemble_stiffness(sp).to_dense();
        double total = 0.0;
        for (double x : m.entries()) total += x;
        EXPECT_NEAR(total, 1.0, 1e-12);
        EXPECT_LE(max_abs_diff(m, m.transposed()), 1e-14);
        EXPECT_LE(max_abs_diff(a, a.transposed()), 1e-14);
        const auto a1 = a.multiply(Vector(sp.n_dof(), 1.0));
        EXPECT_LE(norm2(a1), 1e-12);
        EXPECT_GT(sym_eigen(m).eigenvalues.back(), 0.0);

        std::vector<std::size_t> free;
        for (std::size_t i = 0; i < sp.n_dof(); ++i)
            if (!sp.dirichlet_mask()[i]) free.push_back(i);
        DenseMatrix af(free.size(), free.size());
        for (std::size_t i = 0; i < free.size(); ++i)
            for (std::size_t j = 0; j < free.size(); ++j) af(i, j) = a(free[i], free[j]);
        EXPECT_GT(sym_eigen(af).eigenvalues.back(), 1e-8);
    }
}

TEST(Assembly, LoadSumsToIntegral) {
    for (std::size_t n : {2u, 5u}) {
        const FeSpace sp(TriMesh::build(n), 2);
        const auto b = assemble_load(sp, [](Point p) { return p.x * p.x * p.y * p.y; });
        double s = 0.0;
        for (double x : b) s += x;
        EXPECT_NEAR(s, 1.0 / 9.0, 1e-14);
    }
}

TEST(Assembly, ReactionVectors) {
    for (int degree : {1, 2}) {
        const FeSpace sp(TriMesh::build(4), degree);
        const auto m = assemble_mass(sp);
        const auto u = random_state(sp.n_dof(), 1);
        const auto zero = assemble_reaction(sp, u, [](double) { return 0.0; });
        EXPECT_EQ(zero, Vector(sp.n_dof(), 0.0));
        const auto one = assemble_reaction(sp, u, [](double) { return 1.0; });
        const auto colsum = csr_matvec(m, Vector(sp.n_dof(), 1.0));
        for (std::size_t i = 0; i < sp.n_dof(); ++i) EXPECT_NEAR(one[i], colsum[i], 1e-14);
        const auto lin = assemble_reaction(sp, u, [](double x) { return x; });
        const auto mu = csr_matvec(m, u);
        for (std::size_t i = 0; i < sp.n_dof(); ++i) EXPECT_NEAR(lin[i], mu[i], 1e-12);
    }
}

TEST(Assembly, ReactionJacobian) {
    const FeSpace sp(TriMesh::build(4), 2);
    const auto u = random_state(sp.n_dof(), 2);
    const auto m = assemble_mass(sp).to_dense();
    const auto j1 = assemble_reaction_jacobian(sp, u, [](double) { return 1.0; }).to_dense();
    EXPECT_LE(max_abs_diff(j1, m), 1e-12);
    const auto j0 = assemble_reaction_jacobian(sp, u, [](double) { return 0.0; });
    for (double v : j0.values()) EXPECT_EQ(v, 0.0);

    auto g = [](double x) { return std::sin(x) + x * x * x; };
    auto gp = [](double x) { return std::cos(x) + 3 * x * x; };
    const auto j = assemble_reaction_jacobian(sp, u, gp);
    const auto d = random_state(sp.n_dof(), 3);
    const double eps = 1e-6;
    Vector up = u, um = u;
    axpy(eps, d, up);
    axpy(-eps, d, um);
    auto fd = assemble_reaction(sp, up, g);
    axpy(-1.0, assemble_reaction(sp, um, g), fd);
    for (auto& x : fd) x /= 2 * eps;
    auto jd = csr_matvec(j, d);
    axpy(-1.0, fd, jd);
    EXPECT_LE(norm2(jd), 1e-5 * norm2(fd));
}

TEST(Assembly, MultiComponentReactionMatchesScalarBlocks) {
    const FeSpace sp(TriMesh::build(3), 2);
    const std::size_t n = sp.n_dof();
    auto u = random_state(2 * n, 4, 0.5, 1.5);
    // g(u, v) = (u v, u^2); jacobian [[v, u], [2u, 0]]
    const auto vec = assemble_reaction(sp, 2, u, [](std::span<const double> x, std::span<double> out) {
        out[0] = x[0] * x[1];
        out[1] = x[0] * x[0];
    });
    const Vector uu(u.begin(), u.begin() + n);
    const auto sq = assemble_reaction(sp, uu, [](double x) { return x * x; });
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(vec[n + i], sq[i], 1e-14);

    const auto jac = assemble_reaction_jacobian(sp, 2, u, [](std::span<const double> x, std::span<double> out) {
        out[0] = x[1];
        out[1] = x[0];
        out[2] = 2 * x[0];
        out[3] = 0.0;
    });
    const auto d = random_state(2 * n, 5);
    const double eps = 1e-6;
    auto g = [&](const Vector& s) {
        return assemble_reaction(sp, 2, s, [](std::span<const double> x, std::span<double> out) {
            out[0] = x[0] * x[1];
            out[1] = x[0] * x[0];
        });
    };
    Vector up = u, um = u;
    axpy(eps, d, up);
    axpy(-eps, d, um);
    auto fd = g(up);
    axpy(-1.0, g(um), fd);
    for (auto& x : fd) x /= 2 * eps;
    auto jd = csr_matvec(jac, d);
    axpy(-1.0, fd, jd);
    EXPECT_LE(norm2(jd), 1e-8 * norm2(fd));
}

TEST(Interpolation, ReproducesLinearFunctions) {
    for (int degree : {1, 2}) {
        const FeSpace sp(TriMesh::build(3), degree);
        const auto ones = interpolate(sp, [](Point) { return 1.0; });
        EXPECT_EQ(ones, Vector(sp.n_dof(), 1.0));
        auto f = [](Point p) { return 2.0 * p.x - 3.0 * p.y + 0.5; };
        const auto v = interpolate(sp, f);
        for (Point p : {Point{0.123, 0.456}, Point{0.9, 0.05}, Point{0.5, 0.5}, Point{0.77, 0.31}})
            EXPECT_NEAR(sp.evaluate(v, p), f(p), 1e-13);
    }
}

TEST(Interpolation, P2InterpolantOrder) {
    std::vector<double> errs;
    auto f = [](Point p) { return std::sin(pi * p.x) * std::sin(pi * p.y); };
    for (std::size_t n : {4u, 8u, 16u}) {
        const FeSpace sp(TriMesh::build(n), 2);
        errs.push_back(l2_error(sp, interpolate(sp, f), f));
    }
    EXPECT_GE(std::log2(errs[0] / errs[1]), 2.8);
    EXPECT_GE(std::log2(errs[1] / errs[2]), 2.8);
}

TEST(Dirichlet, ZeroLiftGivesIdentityRows) {
    const FeSpace sp(TriMesh::build(2), 1);
    const auto a = assemble_stiffness(sp);
    const Vector rhs(sp.n_dof(), 1.0), lift(sp.n_dof(), 0.0);
    const auto [k, b] = apply_dirichlet(sp, a, rhs, lift);
    for (std::size_t i = 0; i < sp.n_dof(); ++i) {
        if (!sp.dirichlet_mask()[i]) continue;
        EXPECT_EQ(b[i], 0.0);
        for (std::size_t j = 0; j < sp.n_dof(); ++j) {
            EXPECT_EQ(k.at(i, j), i == j ? 1.0 : 0.0);
            EXPECT_EQ(k.at(j, i), i == j ? 1.0 : 0.0);
        }
    }
}

TEST(Dirichlet, LaplaceWithUnitLiftIsConstant) {
    const FeSpace sp(TriMesh::build(6), 2);
    const auto a = assemble_stiffness(sp);
    Vector lift(sp.n_dof(), 0.0);
    for (std::size_t i = 0; i < sp.n_dof(); ++i)
        if (sp.dirichlet_mask()[i]) lift[i] = 1.0;
    const auto [k, b] = apply_dirichlet(sp, a, Vector(sp.n_dof(), 0.0), lift);
    const auto x = krylov_solve(k, b, 1e-13, 2000).x;
    for (double v : x) EXPECT_NEAR(v, 1.0, 1e-10);
}

TEST(Dirichlet, ManufacturedPoissonOrder) {
    // -Laplace u = (pi^2/2) u, u = cos(pi x/2) cos(pi y/2): u = 0 on Gamma1, zero flux on Gamma2.
    auto u = [](Point p) { return std::cos(pi * p.x / 2) * std::cos(pi * p.y / 2); };
    for (int degree : {1, 2}) {
        std::vector<double> errs;
        for (std::size_t n : {4u, 8u, 16u}) {
            const FeSpace sp(TriMesh::build(n), degree);
            const auto rhs = assemble_load(sp, [&](Point p) { return pi * pi / 2 * u(p); });
            const auto [k, b] = apply_dirichlet(sp, assemble_stiffness(sp), rhs, Vector(sp.n_dof(), 0.0));
            errs.push_back(l2_error(sp, krylov_solve(k, b, 1e-13, 5000).x, u));
        }
        const double order = std::log2(errs[1] / errs[2]);
        EXPECT_GE(order, degree + 1 - 0.2) << "degree " << degree;
    }
}

TEST(Norms, Basics) {
    const FeSpace sp(TriMesh::build(4), 2);
    auto n0 = norms(sp, Vector(sp.n_dof(), 0.0));
    EXPECT_EQ(n0.l2, 0.0);
    EXPECT_EQ(n0.h1_semi, 0.0);
    auto n1 = norms(sp, Vector(sp.n_dof(), 1.0));
    EXPECT_NEAR(n1.l2, 1.0, 1e-13);
    EXPECT_NEAR(n1.h1_semi, 0.0, 1e-6);

    const auto v = random_state(sp.n_dof(), 8);
    const auto nv = norms(sp, v);
    EXPECT_NEAR(nv.l2 * nv.l2, dot(v, csr_matvec(assemble_mass(sp), v)), 1e-12);
    EXPECT_NEAR(nv.h1_semi * nv.h1_semi, dot(v, csr_matvec(assemble_stiffness(sp), v)), 1e-10);
}

TEST(Norms, SineProductLimits) {
    const FeSpace sp(TriMesh::build(32), 2);
    const auto v = interpolate(sp, [](Point p) { return std::sin(pi * p.x) * std::sin(pi * p.y); });
    const auto n = norms(sp, v);
    EXPECT_NEAR(n.l2, 0.5, 0.005);
    EXPECT_NEAR(n.h1_semi, pi / std::sqrt(2.0), 0.01 * pi / std::sqrt(2.0));
}
