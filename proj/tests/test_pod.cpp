#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "podrom/error.hpp"
#include "podrom/pod.hpp"

using namespace podrom;
using namespace podrom::pod;

namespace {

struct Fixture {
    std::shared_ptr<const fem::FeSpace> space;
    std::shared_ptr<fom::Discretization> disc;
    fom::Trajectory traj;
};

Fixture brusselator_run(std::size_t n_side, std::size_t M, double T) {
    Fixture f;
    f.space = std::make_shared<const fem::FeSpace>(fem::TriMesh::build(n_side), 2);
    f.disc = std::make_shared<fom::Discretization>(f.space, fom::brusselator_system(0.002));
    const std::size_t n = f.space->n_dof();
    Vector u0(2 * n, 3.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = f.space->dof_coords()[i];
        u0[i] = 1.0 + 0.1 * std::sin(std::numbers::pi * p.x) * std::sin(std::numbers::pi * p.y);
    }
    f.disc->impose_boundary(u0);
    f.traj = fom::fom_integrate(*f.disc, u0, T / static_cast<double>(M), T, 2);
    return f;
}

fom::Trajectory synthetic(const std::vector<Vector>& states, double dt) {
    fom::Trajectory t;
    t.dt = dt;
    t.states = states;
    for (std::size_t j = 0; j < states.size(); ++j) t.times.push_back(static_cast<double>(j) * dt);
    return t;
}

CsrMatrix random_spd(std::size_t n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    DenseMatrix b(n, n);
    for (auto i = 0u; i < n; ++i)
        for (auto j = 0u; j < n; ++j) b(i, j) = u(rng);
    auto a = b.transposed() * b;
    for (auto i = 0u; i < n; ++i) a(i, i) += 1.0;
    return CsrMatrix::from_dense(a);
}

double xdot(const CsrMatrix& g, const Vector& a, const Vector& b) { return dot(a, csr_matvec(g, b)); }

}  // namespace

TEST(Snapshots, TwoStepTrajectoryByHand) {
    const Vector a{1.0, 2.0}, b{3.0, -1.0};
    const auto s = build_snapshots(synthetic({a, b}, 0.5), 1.0, W0Mode::initial);
    ASSERT_EQ(s.count(), 2u);
    EXPECT_DOUBLE_EQ(s.columns[0][0], std::sqrt(2.0) * 1.0);
    EXPECT_DOUBLE_EQ(s.columns[0][1], std::sqrt(2.0) * 2.0);
    EXPECT_DOUBLE_EQ(s.columns[1][0], (3.0 - 1.0) / 0.5);
    EXPECT_DOUBLE_EQ(s.columns[1][1], (-1.0 - 2.0) / 0.5);
    EXPECT_THROW(build_snapshots(synthetic({a, b}, 0.5), 0.0, W0Mode::initial), InvalidInput);
}

TEST(Snapshots, ConstantTrajectoryAfterMeanRemoval) {
    const Vector c{1.5, -2.0, 0.25};
    const auto s = build_snapshots(synthetic({c, c, c, c}, 0.1), 1.0, W0Mode::zero_after_mean);
    for (const auto& y : s.columns)
        for (double v : y) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(s.mean, c);
    const auto K = correlation_matrix(s, CsrMatrix::identity(3));
    EXPECT_THROW(pod_basis(s, K, CsrMatrix::identity(3), InnerProduct::l2), DegenerateSnapshots);
}

TEST(Snapshots, MeanCancelsInDifferences) {
    const auto f = brusselator_run(3, 8, 0.8);
    const auto plain = build_snapshots(f.traj, 0.7, W0Mode::initial);
    const auto centered = build_snapshots(f.traj, 0.7, W0Mode::zero_after_mean);
    const auto mean = build_snapshots(f.traj, 0.7, W0Mode::mean);
    ASSERT_EQ(plain.count(), 9u);
    for (std::size_t j = 1; j < plain.count(); ++j) EXPECT_EQ(plain.columns[j], centered.columns[j]);
    // reconstruct u(t_j) from the stored mean and the scaled differences
    Vector u = f.traj.states[0];
    for (std::size_t j = 1; j < plain.count(); ++j) {
        axpy(centered.dt / centered.tau, centered.columns[j], u);
        for (std::size_t i = 0; i < u.size(); ++i) ASSERT_NEAR(u[i], f.traj.states[j][i], 1e-13);
    }
    for (std::size_t i = 0; i < u.size(); ++i) EXPECT_NEAR(mean.w0[i], centered.mean[i], 1e-15);
}

TEST(Correlation, SmallCases) {
    const auto g = random_spd(4, 1);
    SnapshotSet s;
    s.columns = {{1.0, 0.5, -1.0, 2.0}};
    auto K = correlation_matrix(s, g);
    EXPECT_NEAR(K(0, 0), xdot(g, s.columns[0], s.columns[0]), 1e-13);

    s.columns.push_back(s.columns[0]);
    K = correlation_matrix(s, g);
    const auto e = sym_eigen(K);
    EXPECT_NEAR(e.eigenvalues[1], 0.0, 1e-12 * e.eigenvalues[0]);

    std::mt19937 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    s.columns.assign(5, Vector(4));
    for (auto& y : s.columns)
        for (auto& x : y) x = u(rng);
    K = correlation_matrix(s, g);
    const auto gd = g.to_dense();
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
            const auto gy = gd.multiply(s.columns[j]);
            EXPECT_NEAR(K(i, j), dot(s.columns[i], gy) / 5.0, 1e-13);
        }
    EXPECT_THROW(correlation_matrix(s, CsrMatrix::identity(3)), InvalidInput);
}

TEST(Basis, OrthonormalSnapshotsGiveEqualEigenvalues) {
    const auto g = CsrMatrix::identity(3);
    SnapshotSet s;
    s.columns = {{1.0, 0.0, 0.0}, {0.0, 0.6, 0.8}};
    const auto b = pod_basis(s, correlation_matrix(s, g), g, InnerProduct::l2);
    ASSERT_EQ(b.dim(), 2u);
    EXPECT_NEAR(b.eigenvalues[0], 0.5, 1e-15);
    EXPECT_NEAR(b.eigenvalues[1], 0.5, 1e-15);
    // same span: each snapshot is reproduced by the projection
    for (const auto& y : s.columns) {
        const auto p = project(b, 2, y);
        for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(p.reconstruction[i], y[i], 1e-14);
    }
}

TEST(Basis, SingleSnapshotIsNormalized) {
    const auto g = random_spd(4, 3);
    SnapshotSet s;
    s.columns = {{2.0, -1.0, 0.5, 0.0}};
    const auto b = pod_basis(s, correlation_matrix(s, g), g, InnerProduct::h10);
    ASSERT_EQ(b.dim(), 1u);
    const double nrm = std::sqrt(xdot(g, s.columns[0], s.columns[0]));
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(b.modes(i, 0), s.columns[0][i] / nrm, 1e-14);
}

TEST(Basis, OrthonormalityScalingAndSigns) {
    const auto f = brusselator_run(4, 32, 3.2);
    const auto& g = f.disc->stiffness();
    const auto s = build_snapshots(f.traj, 1.0, W0Mode::zero_after_mean);
    const auto b = pod_basis(s, correlation_matrix(s, g), g, InnerProduct::h10);
    ASSERT_GT(b.dim(), 4u);
    for (std::size_t i = 0; i < b.dim(); ++i) {
        for (std::size_t j = 0; j < b.dim(); ++j)
            EXPECT_NEAR(xdot(g, b.mode(i), b.mode(j)), i == j ? 1.0 : 0.0, 1e-10);
        EXPECT_GT(b.eigenvalues[i], 0.0);
        if (i > 0) EXPECT_GE(b.eigenvalues[i - 1], b.eigenvalues[i]);
        const auto m = b.mode(i);
        const auto it = std::max_element(m.begin(), m.end(), [](double x, double y) { return std::abs(x) < std::abs(y); });
        EXPECT_GT(*it, 0.0);
    }

    auto scaled = s;
    for (auto& y : scaled.columns)
        for (auto& x : y) x *= 3.0;
    const auto bs = pod_basis(scaled, correlation_matrix(scaled, g), g, InnerProduct::h10);
    for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_NEAR(bs.eigenvalues[k], 9.0 * b.eigenvalues[k], 1e-9 * b.eigenvalues[0]);
        EXPECT_NEAR(std::abs(xdot(g, bs.mode(k), b.mode(k))), 1.0, 1e-10);
    }
}

TEST(Projection, Basics) {
    const auto f = brusselator_run(4, 16, 1.6);
    const auto& g = f.disc->stiffness();
    const auto s = build_snapshots(f.traj, 1.0, W0Mode::zero_after_mean);
    const auto b = pod_basis(s, correlation_matrix(s, g), g, InnerProduct::h10);
    const std::size_t r = std::min<std::size_t>(4, b.dim());

    const auto p1 = project(b, r, b.mode(0));
    EXPECT_NEAR(p1.coefficients[0], 1.0, 1e-12);
    for (std::size_t k = 1; k < r; ++k) EXPECT_NEAR(p1.coefficients[k], 0.0, 1e-12);

    std::mt19937 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vector v(g.rows());
    for (auto& x : v) x = u(rng);
    // strip the modal part: what is left is X-orthogonal to the first r modes
    auto ortho = v;
    axpy(-1.0, project(b, r, v).reconstruction, ortho);
    const auto po = project(b, r, ortho);
    EXPECT_LE(std::sqrt(xdot(g, po.reconstruction, po.reconstruction)), 1e-10 * std::sqrt(xdot(g, v, v)));

    // normal equations (Phi^T G Phi) c = Phi^T G v with the densified gram
    const auto gd = g.to_dense();
    DenseMatrix n(r, r);
    Vector rhs(r);
    for (std::size_t i = 0; i < r; ++i) {
        const auto gi = gd.multiply(b.mode(i));
        rhs[i] = dot(gi, v);
        for (std::size_t j = 0; j < r; ++j) n(i, j) = dot(gi, b.mode(j));
    }
    const auto c = dense_lu_solve(n, rhs);
    const auto pv = project(b, r, v);
    for (std::size_t k = 0; k < r; ++k) EXPECT_NEAR(pv.coefficients[k], c[k], 1e-10);

    const auto pp = project(b, r, pv.reconstruction);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(pp.reconstruction[i], pv.reconstruction[i], 1e-10);
    EXPECT_THROW(project(b, b.dim() + 1, v), InvalidRank);
}

TEST(TailIdentity, AllRanksAndVariants) {
    const auto f = brusselator_run(4, 32, 3.2);
    for (auto ip : {InnerProduct::h10, InnerProduct::l2}) {
        const auto& g = ip == InnerProduct::h10 ? f.disc->stiffness() : f.disc->mass();
        for (auto mode : {W0Mode::initial, W0Mode::zero_after_mean}) {
            const auto s = build_snapshots(f.traj, 1.0, mode);
            const auto K = correlation_matrix(s, g);
            const auto b = pod_basis(s, K, g, ip);
            const double l1 = b.eigenvalues[0];
            double trace = 0.0;
            for (std::size_t i = 0; i < K.rows(); ++i) trace += K(i, i);
            const auto t0 = tail_identity_check(s, b, 0);
            EXPECT_NEAR(t0.lhs, trace, 1e-10 * l1);
            for (std::size_t r = 0; r <= b.dim(); ++r) {
                const auto t = tail_identity_check(s, b, r);
                EXPECT_NEAR(t.lhs, t.rhs, 1e-10 * l1) << "r " << r;
                const auto ts = split_tail_identity_check(f.traj, s, b, r);
                EXPECT_NEAR(ts.lhs, ts.rhs, 1e-10 * l1) << "split r " << r;
            }
            EXPECT_NEAR(tail_identity_check(s, b, b.dim()).lhs, 0.0, 1e-12 * l1);
        }
    }
}

TEST(Pointwise, BoundAndMonotonicity) {
    const auto f = brusselator_run(4, 32, 3.2);
    const auto& g = f.disc->stiffness();
    for (auto mode : {W0Mode::initial, W0Mode::mean}) {
        const auto s = build_snapshots(f.traj, 1.0, mode);
        const auto b = pod_basis(s, correlation_matrix(s, g), g, InnerProduct::h10);
        double prev_l2 = INFINITY, prev_h1 = INFINITY;
        for (std::size_t r : {2u, 4u, 8u}) {
            const auto rep = pointwise_projection_report(f.traj, s, b, f.disc->mass(), r);
            EXPECT_LE(rep.max_h1 * rep.max_h1, rep.bound_h1);
            EXPECT_LE(rep.max_l2, prev_l2 * (1 + 1e-12));
            EXPECT_LE(rep.max_h1, prev_h1 * (1 + 1e-12));
            prev_l2 = rep.max_l2;
            prev_h1 = rep.max_h1;
            EXPECT_EQ(rep.c_tilde, mode == W0Mode::initial ? 1.0 : 4.0);
        }
        const auto full = pointwise_projection_report(f.traj, s, b, f.disc->mass(), b.dim());
        EXPECT_LE(full.max_h1, 1e-5 * std::sqrt(b.eigenvalues[0]));
        EXPECT_GE(full.bound_h1, 0.0);
    }
}

TEST(Persistence, BasisAndSnapshotsRoundTrip) {
    const auto f = brusselator_run(3, 8, 0.8);
    const auto& g = f.disc->stiffness();
    const auto s = build_snapshots(f.traj, 0.5, W0Mode::zero_after_mean);
    const auto b = pod_basis(s, correlation_matrix(s, g), g, InnerProduct::h10);
    const auto dir = std::filesystem::temp_directory_path() / "podrom_test_pod";
    std::filesystem::create_directories(dir);
    write_basis((dir / "b").string(), b);
    const auto rb = read_basis((dir / "b").string(), g, InnerProduct::h10);
    EXPECT_EQ(rb.eigenvalues, b.eigenvalues);
    EXPECT_EQ(rb.modes.entries(), b.modes.entries());
    write_snapshots((dir / "s").string(), s, 2, 2, 3);
    const auto rs = read_snapshots((dir / "s").string());
    EXPECT_EQ(rs.columns, s.columns);
    EXPECT_EQ(rs.mean, s.mean);
    EXPECT_EQ(rs.tau, 0.5);
    EXPECT_EQ(rs.w0_mode, W0Mode::zero_after_mean);
    std::filesystem::remove_all(dir);
}
