#include "podrom/pod.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "podrom/error.hpp"
#include "podrom/matrix_market.hpp"

namespace podrom::pod {

const char* to_string(W0Mode m) {
    switch (m) {
        case W0Mode::initial: return "initial";
        case W0Mode::mean: return "mean";
        case W0Mode::zero_after_mean: return "zero-after-mean-subtraction";
    }
    return "?";
}

const char* to_string(InnerProduct ip) { return ip == InnerProduct::h10 ? "H10" : "L2"; }

W0Mode parse_w0_mode(const std::string& s) {
    if (s == "initial") return W0Mode::initial;
    if (s == "mean") return W0Mode::mean;
    if (s == "zero" || s == "zero-after-mean-subtraction" || s == "zero_after_mean") return W0Mode::zero_after_mean;
    throw InvalidInput("unknown w0 mode '" + s + "'");
}

InnerProduct parse_inner_product(const std::string& s) {
    if (s == "H10" || s == "h10" || s == "H1") return InnerProduct::h10;
    if (s == "L2" || s == "l2") return InnerProduct::l2;
    throw InvalidInput("unknown inner product '" + s + "'");
}

SnapshotSet build_snapshots(const fom::Trajectory& traj, double tau, W0Mode mode) {
    if (!(tau > 0.0)) throw InvalidInput("build_snapshots: tau must be positive");
    if (traj.states.size() < 2) throw InvalidInput("build_snapshots: need at least one time interval");
    const std::size_t N = traj.states.size();
    const std::size_t n = traj.states[0].size();
    SnapshotSet s;
    s.tau = tau;
    s.dt = traj.dt;
    s.w0_mode = mode;
    s.mean.assign(n, 0.0);

    Vector time_mean(n, 0.0);
    for (const auto& u : traj.states) axpy(1.0 / static_cast<double>(N), u, time_mean);
    switch (mode) {
        case W0Mode::initial: s.w0 = traj.states[0]; break;
        case W0Mode::mean: s.w0 = time_mean; break;
        case W0Mode::zero_after_mean:
            s.mean = time_mean;
            s.w0.assign(n, 0.0);
            break;
    }

    s.columns.reserve(N);
    Vector first = s.w0;
    for (auto& x : first) x *= std::sqrt(static_cast<double>(N));
    s.columns.push_back(std::move(first));
    const double scale = tau / traj.dt;
    for (std::size_t j = 1; j < N; ++j) {
        // (u_j - mean) - (u_{j-1} - mean): the mean cancels in the differences.
        Vector y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = scale * (traj.states[j][i] - traj.states[j - 1][i]);
        s.columns.push_back(std::move(y));
    }
    return s;
}

DenseMatrix correlation_matrix(const SnapshotSet& snaps, const CsrMatrix& gram) {
    const std::size_t N = snaps.count();
    if (N == 0) throw InvalidInput("correlation_matrix: empty snapshot set");
    for (const auto& y : snaps.columns)
        if (y.size() != gram.cols()) throw InvalidInput("correlation_matrix: gram/snapshot dimension mismatch");
    std::vector<Vector> gy;
    gy.reserve(N);
    for (const auto& y : snaps.columns) gy.push_back(csr_matvec(gram, y));
    DenseMatrix K(N, N);
    const double inv = 1.0 / static_cast<double>(N);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = i; j < N; ++j) {
            // Average both orders so K is symmetric bit for bit.
            const double v = 0.5 * inv * (dot(snaps.columns[i], gy[j]) + dot(snaps.columns[j], gy[i]));
            K(i, j) = K(j, i) = v;
        }
    return K;
}

double PodBasis::tail(std::size_t r) const {
    double s = 0.0;
    for (std::size_t k = eigenvalues.size(); k-- > r;) s += eigenvalues[k];
    return s;
}

PodBasis pod_basis(const SnapshotSet& snaps, const DenseMatrix& K, const CsrMatrix& gram, InnerProduct ip,
                   const RankCut& cut) {
    const std::size_t N = snaps.count();
    if (K.rows() != N || K.cols() != N) throw InvalidInput("pod_basis: K does not match the snapshot set");
    const std::size_t n = gram.rows();
    const auto eig = sym_eigen(K);

    PodBasis b;
    b.inner_product = ip;
    b.gram = gram;
    b.spectrum = eig.eigenvalues;
    const double lambda1 = eig.eigenvalues.empty() ? 0.0 : eig.eigenvalues[0];
    if (!(lambda1 > 0.0)) throw DegenerateSnapshots("pod_basis: all eigenvalues are numerically zero");
    std::size_t d = 0;
    while (d < N && eig.eigenvalues[d] > cut.tol * lambda1) ++d;
    if (cut.r) d = std::min(d, *cut.r);
    if (d == 0) throw DegenerateSnapshots("pod_basis: rank cut leaves no modes");

    b.eigenvalues.assign(eig.eigenvalues.begin(), eig.eigenvalues.begin() + static_cast<std::ptrdiff_t>(d));
    std::vector<Vector> modes(d, Vector(n, 0.0));
    for (std::size_t k = 0; k < d; ++k) {
        const double c = 1.0 / std::sqrt(static_cast<double>(N) * b.eigenvalues[k]);
        for (std::size_t j = 0; j < N; ++j) axpy(c * eig.eigenvectors(j, k), snaps.columns[j], modes[k]);
    }

    // Two passes of modified Gram-Schmidt in the gram inner product restore
    // orthonormality lost to rounding in the modes with small eigenvalues.
    std::vector<Vector> gmodes(d);
    for (std::size_t k = 0; k < d; ++k) {
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t l = 0; l < k; ++l) axpy(-dot(modes[k], gmodes[l]), modes[l], modes[k]);
        }
        Vector g = csr_matvec(gram, modes[k]);
        const double nrm = std::sqrt(dot(modes[k], g));
        if (!(nrm > 0.0)) throw DegenerateSnapshots("pod_basis: mode with zero norm");
        for (auto& x : modes[k]) x /= nrm;
        for (auto& x : g) x /= nrm;
        gmodes[k] = std::move(g);
    }

    for (auto& m : modes) {
        std::size_t imax = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (std::abs(m[i]) > std::abs(m[imax])) imax = i;
        if (m[imax] < 0.0)
            for (auto& x : m) x = -x;
    }
    b.modes = DenseMatrix(n, d);
    for (std::size_t k = 0; k < d; ++k) b.modes.set_column(k, modes[k]);
    return b;
}

Vector project_coefficients(const PodBasis& basis, std::size_t r, const Vector& v) {
    if (r > basis.dim()) throw InvalidRank("project: r exceeds the basis dimension");
    if (v.size() != basis.modes.rows()) throw InvalidInput("project: dimension mismatch");
    const Vector gv = csr_matvec(basis.gram, v);
    Vector c(r, 0.0);
    for (std::size_t i = 0; i < gv.size(); ++i) {
        const auto row = basis.modes.row(i);
        for (std::size_t k = 0; k < r; ++k) c[k] += row[k] * gv[i];
    }
    return c;
}

Projection project(const PodBasis& basis, std::size_t r, const Vector& v) {
    Projection p;
    p.coefficients = project_coefficients(basis, r, v);
    p.reconstruction.assign(v.size(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto row = basis.modes.row(i);
        double s = 0.0;
        for (std::size_t k = 0; k < r; ++k) s += row[k] * p.coefficients[k];
        p.reconstruction[i] = s;
    }
    return p;
}

namespace {

double residual_norm2(const PodBasis& basis, std::size_t r, const Vector& v) {
    const auto p = project(basis, r, v);
    Vector e = v;
    axpy(-1.0, p.reconstruction, e);
    return dot(e, csr_matvec(basis.gram, e));
}

}  // namespace

TailCheck tail_identity_check(const SnapshotSet& snaps, const PodBasis& basis, std::size_t r) {
    if (r > basis.dim()) throw InvalidRank("tail_identity_check: r exceeds the basis dimension");
    TailCheck t;
    for (const auto& y : snaps.columns) t.lhs += residual_norm2(basis, r, y);
    t.lhs /= static_cast<double>(snaps.count());
    t.rhs = basis.tail(r);
    return t;
}

TailCheck split_tail_identity_check(const fom::Trajectory& traj, const SnapshotSet& snaps, const PodBasis& basis,
                                    std::size_t r) {
    if (r > basis.dim()) throw InvalidRank("split_tail_identity_check: r exceeds the basis dimension");
    const std::size_t M = traj.intervals();
    TailCheck t;
    t.lhs = residual_norm2(basis, r, snaps.w0);
    double diff_sum = 0.0;
    for (std::size_t j = 1; j <= M; ++j) {
        Vector d = traj.states[j];
        axpy(-1.0, traj.states[j - 1], d);
        diff_sum += residual_norm2(basis, r, d);
    }
    t.lhs += snaps.tau * snaps.tau / (static_cast<double>(M + 1) * traj.dt * traj.dt) * diff_sum;
    t.rhs = basis.tail(r);
    return t;
}

PointwiseReport pointwise_projection_report(const fom::Trajectory& traj, const SnapshotSet& snaps,
                                            const PodBasis& basis, const CsrMatrix& mass, std::size_t r) {
    if (r > basis.dim()) throw InvalidRank("pointwise_projection_report: r exceeds the basis dimension");
    PointwiseReport rep;
    rep.c_tilde = snaps.w0_mode == W0Mode::initial ? 1.0 : 4.0;
    for (const auto& u : traj.states) {
        Vector w = u;
        axpy(-1.0, snaps.mean, w);
        const auto p = project(basis, r, w);
        axpy(-1.0, p.reconstruction, w);
        rep.max_l2 = std::max(rep.max_l2, std::sqrt(std::max(0.0, dot(w, csr_matvec(mass, w)))));
        rep.max_h1 = std::max(rep.max_h1, std::sqrt(std::max(0.0, dot(w, csr_matvec(basis.gram, w)))));
    }
    const double T = static_cast<double>(traj.intervals()) * traj.dt;
    const double factor = 2.0 + 4.0 * rep.c_tilde * T * T / (snaps.tau * snaps.tau);
    const double cp = 1.0 / (std::numbers::pi * std::numbers::sqrt2);
    rep.bound_h1 = factor * basis.tail(r);
    rep.bound_l2 = factor * cp * cp * basis.tail(r);
    return rep;
}

// ---------------------------------------------------------------------------

void write_basis(const std::string& prefix, const PodBasis& basis) {
    mm::write_file(prefix + "_modes.mtx", basis.modes);
    std::ofstream os(prefix + "_eigenvalues.txt");
    if (!os) throw InvalidInput("cannot write '" + prefix + "_eigenvalues.txt'");
    os << "# inner_product " << to_string(basis.inner_product) << " retained " << basis.dim() << '\n';
    for (double l : basis.eigenvalues) os << mm::format17(l) << '\n';
}

PodBasis read_basis(const std::string& prefix, CsrMatrix gram, InnerProduct ip) {
    PodBasis b;
    b.inner_product = ip;
    b.modes = mm::read_dense_file(prefix + "_modes.mtx");
    b.gram = std::move(gram);
    std::ifstream is(prefix + "_eigenvalues.txt");
    if (!is) throw InvalidInput("cannot open '" + prefix + "_eigenvalues.txt'");
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        b.eigenvalues.push_back(std::stod(line));
    }
    b.spectrum = b.eigenvalues;
    if (b.eigenvalues.size() != b.modes.cols()) throw InvalidInput("read_basis: eigenvalue/mode count mismatch");
    if (b.gram.rows() != b.modes.rows()) throw InvalidInput("read_basis: gram/mode dimension mismatch");
    return b;
}

void write_snapshots(const std::string& prefix, const SnapshotSet& snaps, std::size_t n_components, int degree,
                     std::size_t n_side) {
    fom::Trajectory t;
    t.dt = snaps.dt;
    t.n_components = n_components;
    t.states = snaps.columns;
    for (std::size_t j = 0; j < snaps.count(); ++j) t.times.push_back(static_cast<double>(j) * snaps.dt);
    fom::write_trajectory(prefix, t, degree, n_side,
                          {"tau " + mm::format17(snaps.tau), std::string("w0_mode ") + to_string(snaps.w0_mode)});
    DenseMatrix extra(snaps.mean.size(), 2);
    extra.set_column(0, snaps.mean);
    extra.set_column(1, snaps.w0);
    mm::write_file(prefix + "_mean.mtx", extra);
}

SnapshotSet read_snapshots(const std::string& prefix) {
    const auto t = fom::read_trajectory(prefix);
    SnapshotSet s;
    s.columns = t.states;
    s.dt = t.dt;
    std::ifstream is(prefix + ".txt");
    std::string line, key, value;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        ls >> key >> value;
        if (key == "tau") s.tau = std::stod(value);
        if (key == "w0_mode") s.w0_mode = parse_w0_mode(value);
    }
    const DenseMatrix extra = mm::read_dense_file(prefix + "_mean.mtx");
    s.mean = extra.column(0);
    s.w0 = extra.column(1);
    return s;
}

}  // namespace podrom::pod
