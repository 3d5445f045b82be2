#include "podrom/fom.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "podrom/error.hpp"
#include "podrom/matrix_market.hpp"

namespace podrom::fom {

void ReactionSystem::validate() const {
    if (n_components == 0) throw InvalidInput("ReactionSystem: n_components must be positive");
    if (diffusion.size() != n_components || dirichlet_values.size() != n_components)
        throw InvalidInput("ReactionSystem: per-component arrays have the wrong length");
    for (double nu : diffusion)
        if (!(nu > 0.0)) throw InvalidInput("ReactionSystem: diffusion must be positive");
    if (!g || !g_prime) throw InvalidInput("ReactionSystem: g and g' are required");
}

ReactionSystem brusselator_system(double nu) {
    if (!(nu > 0.0)) throw InvalidInput("brusselator_system: nu must be positive");
    ReactionSystem s;
    s.n_components = 2;
    s.diffusion = {nu, nu};
    s.g = [](std::span<const double> w, std::span<double> out) {
        const double u = w[0], v = w[1];
        out[0] = -(1.0 + u * u * v - 4.0 * u);
        out[1] = -(3.0 * u - u * u * v);
    };
    s.g_prime = [](std::span<const double> w, std::span<double> jac) {
        const double u = w[0], v = w[1];
        jac[0] = 4.0 - 2.0 * u * v;
        jac[1] = -u * u;
        jac[2] = 2.0 * u * v - 3.0;
        jac[3] = u * u;
    };
    s.dirichlet_values = {1.0, 3.0};
    return s;
}

ReactionSystem heat_system(double nu) {
    if (!(nu > 0.0)) throw InvalidInput("heat_system: nu must be positive");
    ReactionSystem s;
    s.n_components = 1;
    s.diffusion = {nu};
    s.g = [](std::span<const double>, std::span<double> out) { out[0] = 0.0; };
    s.g_prime = [](std::span<const double>, std::span<double> jac) { jac[0] = 0.0; };
    s.dirichlet_values = {0.0};
    return s;
}

double jacobian_consistency(const ReactionSystem& s, std::size_t samples, double lo, double hi, unsigned seed,
                            double eps) {
    const std::size_t nc = s.n_components;
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> u(nc), up(nc), um(nc), gp(nc), gm(nc), jac(nc * nc);
    double worst = 0.0;
    for (std::size_t k = 0; k < samples; ++k) {
        for (auto& x : u) x = dist(rng);
        s.g_prime(u, jac);
        double scale = 0.0;
        for (double x : jac) scale = std::max(scale, std::abs(x));
        for (std::size_t b = 0; b < nc; ++b) {
            up = u;
            um = u;
            up[b] += eps;
            um[b] -= eps;
            s.g(up, gp);
            s.g(um, gm);
            for (std::size_t a = 0; a < nc; ++a) {
                const double fd = (gp[a] - gm[a]) / (2.0 * eps);
                worst = std::max(worst, std::abs(fd - jac[a * nc + b]) / std::max(scale, 1.0));
            }
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------

Discretization::Discretization(std::shared_ptr<const fem::FeSpace> space, ReactionSystem system)
    : space_(std::move(space)), system_(std::move(system)) {
    if (!space_) throw InvalidInput("Discretization: null space");
    system_.validate();
    const std::size_t nc = system_.n_components, n = space_->n_dof();
    const CsrMatrix m = fem::assemble_mass(*space_);
    const CsrMatrix a = fem::assemble_stiffness(*space_);
    mass_ = block_diagonal(m, nc);
    stiffness_ = block_diagonal(a, nc);
    nu_stiffness_ = stiffness_;
    for (std::size_t c = 0; c < nc; ++c)
        for (std::size_t i = c * n; i < (c + 1) * n; ++i)
            for (std::size_t k = nu_stiffness_.row_offsets()[i]; k < nu_stiffness_.row_offsets()[i + 1]; ++k)
                nu_stiffness_.values()[k] *= system_.diffusion[c];
    mask_ = fem::system_mask(*space_, nc);
    lift_.assign(size(), 0.0);
    for (std::size_t c = 0; c < nc; ++c)
        for (std::size_t i = 0; i < n; ++i)
            if (mask_[c * n + i]) lift_[c * n + i] = system_.dirichlet_values[c];

    const CsrMatrix full = fem::block_pattern(*space_, nc);
    diagonal_positions_.resize(mass_.nnz());
    for (std::size_t i = 0; i < mass_.rows(); ++i)
        for (std::size_t k = mass_.row_offsets()[i]; k < mass_.row_offsets()[i + 1]; ++k)
            diagonal_positions_[k] = full.find(i, mass_.col_indices()[k]);
}

void Discretization::impose_boundary(Vector& u) const {
    if (u.size() != size()) throw InvalidInput("impose_boundary: dimension mismatch");
    for (std::size_t i = 0; i < u.size(); ++i)
        if (mask_[i]) u[i] = lift_[i];
}

Vector Discretization::load(double t) const {
    Vector f(size(), 0.0);
    if (!system_.forcing) return f;
    const std::size_t n = space_->n_dof();
    for (std::size_t c = 0; c < system_.n_components; ++c) {
        const auto fc = fem::assemble_load(*space_, [&](fem::Point p) { return system_.forcing(c, t, p); });
        std::copy(fc.begin(), fc.end(), f.begin() + static_cast<std::ptrdiff_t>(c * n));
    }
    return f;
}

Vector Discretization::spatial_residual(const Vector& u, double t) const {
    Vector r = csr_matvec(nu_stiffness_, u);
    const Vector gr = fem::assemble_reaction(*space_, system_.n_components, u, system_.g);
    axpy(1.0, gr, r);
    if (system_.forcing) axpy(-1.0, load(t), r);
    return r;
}

CsrMatrix Discretization::reaction_jacobian(const Vector& u) const {
    return fem::assemble_reaction_jacobian(*space_, system_.n_components, u, system_.g_prime);
}

CsrMatrix Discretization::newton_matrix(const Vector& u, double mass_coeff) const {
    CsrMatrix j = reaction_jacobian(u);
    auto& vals = j.values();
    for (std::size_t k = 0; k < mass_.nnz(); ++k)
        vals[diagonal_positions_[k]] += mass_coeff * mass_.values()[k] + nu_stiffness_.values()[k];
    return j;
}

// ---------------------------------------------------------------------------

void Trajectory::validate() const {
    if (states.empty() || times.size() != states.size()) throw InvalidInput("Trajectory: times/states mismatch");
    if (!(dt > 0.0)) throw InvalidInput("Trajectory: dt must be positive");
    for (std::size_t j = 0; j < times.size(); ++j) {
        const double expect = static_cast<double>(j) * dt;
        if (std::abs(times[j] - expect) > 1e-14 * std::max(1.0, std::abs(expect)) * 4.0)
            throw InvalidInput("Trajectory: time grid is not uniform");
        if (states[j].size() != states[0].size()) throw InvalidInput("Trajectory: state size mismatch");
    }
}

namespace {

std::size_t step_count(double dt, double t_end) {
    if (!(dt > 0.0) || !(t_end > 0.0)) throw InvalidInput("time grid: dt and t_end must be positive");
    const double m = t_end / dt;
    const auto M = static_cast<std::size_t>(std::llround(m));
    if (M == 0 || std::abs(static_cast<double>(M) * dt - t_end) > 1e-12 * std::max(1.0, t_end))
        throw InvalidInput("time grid: dt does not divide t_end");
    return M;
}

class FomStepper {
public:
    FomStepper(const Discretization& disc, const FomOptions& opt) : disc_(disc), opt_(opt) {
        for (int q = 1; q <= 5; ++q) schemes_.push_back(bdf::bdf_coefficients(q));
    }

    /// history: newest first, `order` states.
    bdf::StepResult step(int order, double h, std::span<const Vector> history, double t_new) const {
        const auto& s = schemes_[static_cast<std::size_t>(order) - 1];
        const std::size_t n = disc_.size();
        Vector hsum(n, 0.0);
        for (int i = 1; i <= order; ++i) axpy(s.delta_at(i), history[static_cast<std::size_t>(i) - 1], hsum);
        const Vector m_hsum = csr_matvec(disc_.mass(), hsum);
        const double d0 = s.delta_at(0);
        const auto& mask = disc_.mask();

        auto residual = [&](const Vector& u) {
            Vector r = csr_matvec(disc_.mass(), u);
            for (std::size_t i = 0; i < n; ++i) r[i] = (d0 * r[i] + m_hsum[i]) / h;
            axpy(1.0, disc_.spatial_residual(u, t_new), r);
            for (std::size_t i = 0; i < n; ++i)
                if (mask[i]) r[i] = 0.0;
            return r;
        };
        const Vector zeros(n, 0.0);
        auto correction = [&](const Vector& u, const Vector& r) {
            auto [a, b] = fem::apply_dirichlet(mask, disc_.newton_matrix(u, d0 / h), r, zeros);
            return krylov_solve(a, b, opt_.krylov_tol, opt_.krylov_max_iter, Preconditioner::jacobi).x;
        };

        bdf::History hist(static_cast<std::size_t>(order));
        for (std::size_t k = history.size(); k-- > 0;) hist.push(static_cast<long>(history.size() - 1 - k), history[k]);
        return bdf::implicit_step(hist, residual, correction, opt_.newton);
    }

private:
    const Discretization& disc_;
    FomOptions opt_;
    std::vector<bdf::BdfScheme> schemes_;
};

Trajectory integrate(const Discretization& disc, const Vector& u0_in, double dt, double t_end, int q,
                     const FomOptions& options, std::size_t sample_every) {
    if (u0_in.size() != disc.size()) throw InvalidInput("fom_integrate: initial state dimension mismatch");
    bdf::bdf_coefficients(q);  // order check
    const std::size_t M = step_count(dt, t_end);
    Vector u0 = u0_in;
    disc.impose_boundary(u0);
    const FomStepper stepper(disc, options);

    std::size_t current_step = 0;
    auto run_step = [&](int order, double h, std::span<const Vector> hist, double t_new) {
        try {
            return stepper.step(order, h, hist, t_new).solution;
        } catch (const NonConvergence& e) {
            throw NonConvergence(std::string("fom_integrate: ") + e.what(), e.residual(),
                                 static_cast<std::ptrdiff_t>(current_step));
        }
    };

    std::vector<Vector> states = bdf::starting_values(q, dt, u0, run_step);
    std::vector<Vector> window = states;  // newest last
    Trajectory traj;
    traj.dt = dt * static_cast<double>(sample_every);
    traj.n_components = disc.n_components();
    traj.space = disc.space_ptr();
    auto record = [&](std::size_t j, const Vector& u) {
        if (j % sample_every == 0) {
            traj.times.push_back(static_cast<double>(j / sample_every) * traj.dt);
            traj.states.push_back(u);
        }
    };
    for (std::size_t j = 0; j < states.size() && j <= M; ++j) record(j, states[j]);

    for (std::size_t n = static_cast<std::size_t>(q); n <= M; ++n) {
        current_step = n;
        std::vector<Vector> hist(window.rbegin(), window.rbegin() + q);
        Vector next = run_step(q, dt, hist, static_cast<double>(n) * dt);
        record(n, next);
        window.erase(window.begin());
        window.push_back(std::move(next));
    }
    return traj;
}

}  // namespace

Trajectory fom_integrate(const Discretization& disc, const Vector& u0, double dt, double t_end, int q,
                         const FomOptions& options) {
    return integrate(disc, u0, dt, t_end, q, options, 1);
}

Trajectory reference_trajectory(const Discretization& disc, const Vector& u0, double t_end, std::size_t M_out,
                                std::size_t refinement) {
    if (M_out == 0 || refinement == 0) throw InvalidInput("reference_trajectory: M_out and refinement must be positive");
    FomOptions opt;
    opt.newton.tol = 1e-12;
    opt.krylov_tol = 1e-13;
    const double dt = t_end / static_cast<double>(M_out * refinement);
    return integrate(disc, u0, dt, t_end, 5, opt, refinement);
}

// ---------------------------------------------------------------------------

void write_trajectory(const std::string& prefix, const Trajectory& traj, int degree, std::size_t n_side,
                      const std::vector<std::string>& extra_header) {
    traj.validate();
    const std::size_t nc = traj.n_components;
    const std::size_t n = traj.states[0].size() / nc;
    {
        std::ofstream os(prefix + ".txt");
        if (!os) throw InvalidInput("cannot write '" + prefix + ".txt'");
        os << "dt " << mm::format17(traj.dt) << '\n'
           << "M " << traj.intervals() << '\n'
           << "n_dof " << n << '\n'
           << "components " << nc << '\n'
           << "degree " << degree << '\n'
           << "n_side " << n_side << '\n';
        for (const auto& line : extra_header) os << line << '\n';
    }
    for (std::size_t c = 0; c < nc; ++c) {
        DenseMatrix d(n, traj.states.size());
        for (std::size_t j = 0; j < traj.states.size(); ++j)
            for (std::size_t i = 0; i < n; ++i) d(i, j) = traj.states[j][c * n + i];
        mm::write_file(prefix + "_c" + std::to_string(c) + ".mtx", d);
    }
}

Trajectory read_trajectory(const std::string& prefix) {
    std::ifstream is(prefix + ".txt");
    if (!is) throw InvalidInput("cannot open '" + prefix + ".txt'");
    Trajectory traj;
    std::size_t M = 0, n = 0;
    bool have_dt = false;
    std::string key;
    std::string line;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        if (!(ls >> key)) continue;
        if (key == "dt") {
            ls >> traj.dt;
            have_dt = true;
        } else if (key == "M") {
            ls >> M;
        } else if (key == "n_dof") {
            ls >> n;
        } else if (key == "components") {
            ls >> traj.n_components;
        }
    }
    if (!have_dt || n == 0 || traj.n_components == 0) throw InvalidInput("trajectory header incomplete");
    traj.states.assign(M + 1, Vector(n * traj.n_components, 0.0));
    for (std::size_t c = 0; c < traj.n_components; ++c) {
        const DenseMatrix d = mm::read_dense_file(prefix + "_c" + std::to_string(c) + ".mtx");
        if (d.rows() != n || d.cols() != M + 1) throw InvalidInput("trajectory matrix has the wrong shape");
        for (std::size_t j = 0; j <= M; ++j)
            for (std::size_t i = 0; i < n; ++i) traj.states[j][c * n + i] = d(i, j);
    }
    for (std::size_t j = 0; j <= M; ++j) traj.times.push_back(static_cast<double>(j) * traj.dt);
    return traj;
}

}  // namespace podrom::fom
