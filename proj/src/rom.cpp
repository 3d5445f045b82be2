#include "podrom/rom.hpp"

#include <cmath>
#include <fstream>

#include "podrom/error.hpp"
#include "podrom/matrix_market.hpp"

namespace podrom::rom {

namespace {

DenseMatrix triple_product(const DenseMatrix& phi, const CsrMatrix& a) {
    const std::size_t n = phi.rows(), r = phi.cols();
    // (A Phi) row by row, then Phi^T (A Phi).
    DenseMatrix aphi(n, r);
    const auto& off = a.row_offsets();
    const auto& ci = a.col_indices();
    const auto& v = a.values();
    for (std::size_t i = 0; i < n; ++i) {
        auto out = aphi.row(i);
        for (std::size_t k = off[i]; k < off[i + 1]; ++k) {
            const auto prow = phi.row(ci[k]);
            const double w = v[k];
            for (std::size_t c = 0; c < r; ++c) out[c] += w * prow[c];
        }
    }
    DenseMatrix res(r, r);
    for (std::size_t i = 0; i < n; ++i) {
        const auto prow = phi.row(i);
        const auto arow = aphi.row(i);
        for (std::size_t k = 0; k < r; ++k) {
            const double pk = prow[k];
            if (pk == 0.0) continue;
            auto out = res.row(k);
            for (std::size_t l = 0; l < r; ++l) out[l] += pk * arow[l];
        }
    }
    return res;
}

}  // namespace

RomSystem::RomSystem(std::shared_ptr<const fom::Discretization> disc, const pod::PodBasis& basis, std::size_t r,
                     Vector lift)
    : disc_(std::move(disc)), r_(r), gram_(basis.gram), lift_(std::move(lift)) {
    if (!disc_) throw InvalidInput("RomSystem: null discretization");
    if (r == 0 || r > basis.dim()) throw InvalidRank("rom_assemble: r must lie in [1, d_r]");
    const std::size_t n = disc_->size();
    if (basis.modes.rows() != n) throw InvalidInput("rom_assemble: basis does not match the discretization");
    if (lift_.empty()) lift_.assign(n, 0.0);
    if (lift_.size() != n) throw InvalidInput("rom_assemble: lift dimension mismatch");
    phi_ = DenseMatrix(n, r);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < r; ++k) phi_(i, k) = basis.modes(i, k);
    reduced_mass_ = triple_product(phi_, disc_->mass());
    reduced_stiffness_ = triple_product(phi_, disc_->stiffness());
    reduced_nu_stiffness_ = triple_product(phi_, disc_->nu_stiffness());
    lift_term_ = restrict(csr_matvec(disc_->nu_stiffness(), lift_));
    has_forcing_ = static_cast<bool>(disc_->system().forcing);
}

DenseMatrix RomSystem::restrict(const CsrMatrix& j) const { return triple_product(phi_, j); }

Vector RomSystem::coordinates_of(const Vector& x) const {
    if (x.size() != lift_.size()) throw InvalidInput("coordinates_of: dimension mismatch");
    Vector w = x;
    axpy(-1.0, lift_, w);
    return restrict(csr_matvec(gram_, w));
}

Vector RomSystem::affine_term(double t) const {
    Vector a = lift_term_;
    if (has_forcing_) axpy(-1.0, restrict(disc_->load(t)), a);
    return a;
}

RomSystem rom_assemble(std::shared_ptr<const fom::Discretization> disc, const pod::PodBasis& basis, std::size_t r,
                       Vector lift) {
    return RomSystem(std::move(disc), basis, r, std::move(lift));
}

Vector lift_to_nodal(const RomSystem& rom, const Vector& coords) {
    if (coords.size() != rom.r()) throw InvalidInput("lift_to_nodal: dimension mismatch");
    Vector u = rom.phi().multiply(coords);
    axpy(1.0, rom.lift(), u);
    return u;
}

Vector rom_residual(const RomSystem& rom, const bdf::BdfScheme& scheme, std::span<const Vector> history,
                    const Vector& candidate, double t_n, double dt) {
    const std::size_t r = rom.r();
    if (candidate.size() != r || history.size() != static_cast<std::size_t>(scheme.q))
        throw InvalidInput("rom_residual: dimension mismatch");
    Vector comb(r, 0.0);
    axpy(scheme.delta_at(0), candidate, comb);
    for (int i = 1; i <= scheme.q; ++i) {
        const auto& h = history[static_cast<std::size_t>(i) - 1];
        if (h.size() != r) throw InvalidInput("rom_residual: history dimension mismatch");
        axpy(scheme.delta_at(i), h, comb);
    }
    Vector res = rom.reduced_mass().multiply(comb);
    for (auto& x : res) x /= dt;
    axpy(1.0, rom.reduced_nu_stiffness().multiply(candidate), res);
    const auto& disc = rom.discretization();
    const Vector gu = fem::assemble_reaction(disc.space(), disc.n_components(), lift_to_nodal(rom, candidate),
                                             disc.system().g);
    axpy(1.0, rom.restrict(gu), res);
    axpy(1.0, rom.affine_term(t_n), res);
    return res;
}

DenseMatrix rom_jacobian(const RomSystem& rom, const bdf::BdfScheme& scheme, const Vector& candidate, double dt) {
    if (candidate.size() != rom.r()) throw InvalidInput("rom_jacobian: dimension mismatch");
    DenseMatrix j = rom.restrict(rom.discretization().reaction_jacobian(lift_to_nodal(rom, candidate)));
    const double c = scheme.delta_at(0) / dt;
    for (std::size_t a = 0; a < rom.r(); ++a)
        for (std::size_t b = 0; b < rom.r(); ++b)
            j(a, b) += c * rom.reduced_mass()(a, b) + rom.reduced_nu_stiffness()(a, b);
    return j;
}

// ---------------------------------------------------------------------------

double NewtonRule::tolerance(double dt, int q) const {
    if (fixed) return *fixed;
    return std::pow(dt, q) / 100.0;
}

std::string NewtonRule::describe() const {
    return (fixed ? "fixed " + mm::format17(*fixed) : std::string("scaled dt^q/100")) +
           (stop == bdf::StopRule::increment ? " increment" : " residual");
}

namespace {

struct StepOutcome {
    Vector coords;
    std::size_t iterations;
};

class RomStepper {
public:
    explicit RomStepper(const RomSystem& rom) : rom_(rom) {
        for (int q = 1; q <= 5; ++q) schemes_.push_back(bdf::bdf_coefficients(q));
    }

    StepOutcome step(int order, double h, std::span<const Vector> history, double t_new,
                     const bdf::NewtonConfig& cfg) const {
        const auto& s = schemes_[static_cast<std::size_t>(order) - 1];
        bdf::History hist(static_cast<std::size_t>(order));
        for (std::size_t k = history.size(); k-- > 0;) hist.push(static_cast<long>(history.size() - 1 - k), history[k]);
        auto residual = [&](const Vector& c) { return rom_residual(rom_, s, history, c, t_new, h); };
        auto jacobian = [&](const Vector& c) { return rom_jacobian(rom_, s, c, h); };
        auto res = bdf::implicit_step(hist, residual, bdf::JacobianFn(jacobian), cfg);
        return {std::move(res.solution), res.newton_iterations};
    }

private:
    const RomSystem& rom_;
    std::vector<bdf::BdfScheme> schemes_;
};

std::size_t step_count(double dt, double t_end) {
    if (!(dt > 0.0) || !(t_end > 0.0)) throw InvalidInput("rom_integrate: dt and t_end must be positive");
    const auto M = static_cast<std::size_t>(std::llround(t_end / dt));
    if (M == 0 || std::abs(static_cast<double>(M) * dt - t_end) > 1e-12 * std::max(1.0, t_end))
        throw InvalidInput("rom_integrate: dt does not divide t_end");
    return M;
}

RomTrajectory integrate(const RomSystem& rom, int q, double dt, double t_end, const RomInit& init,
                        const bdf::NewtonConfig& cfg, std::size_t sample_every, const std::string& rule_text) {
    bdf::bdf_coefficients(q);
    const std::size_t M = step_count(dt, t_end);
    const RomStepper stepper(rom);
    RomTrajectory out;
    out.dt = dt * static_cast<double>(sample_every);
    out.q = q;
    out.r = rom.r();
    out.newton_rule = rule_text;

    std::size_t current = 0;
    auto guarded = [&](int order, double h, std::span<const Vector> hist, double t_new) {
        try {
            return stepper.step(order, h, hist, t_new, cfg);
        } catch (const NonConvergence& e) {
            throw NonConvergence(std::string("rom_integrate: ") + e.what(), e.residual(),
                                 static_cast<std::ptrdiff_t>(current));
        }
    };

    std::vector<Vector> start;
    if (const auto* pf = std::get_if<ProjectFom>(&init)) {
        if (!pf->trajectory) throw InvalidInput("rom_integrate: null trajectory");
        const auto& tr = *pf->trajectory;
        if (tr.states.size() < static_cast<std::size_t>(q) || std::abs(tr.dt - out.dt) > 1e-12 * out.dt)
            throw InvalidInput("rom_integrate: trajectory grid does not contain t_0..t_{q-1} on this step");
        for (int j = 0; j < q; ++j) start.push_back(rom.coordinates_of(tr.states[static_cast<std::size_t>(j)]));
    } else {
        const auto& bs = std::get<Bootstrap>(init);
        if (bs.initial_coords.size() != rom.r()) throw InvalidInput("rom_integrate: initial coords dimension mismatch");
        start = bdf::starting_values(q, dt, bs.initial_coords,
                                     [&](int order, double h, std::span<const Vector> hist, double t_new) {
                                         auto o = guarded(order, h, hist, t_new);
                                         out.bootstrap_iterations.push_back(o.iterations);
                                         return o.coords;
                                     });
    }

    auto record = [&](std::size_t j, const Vector& c) {
        if (j % sample_every == 0) {
            out.times.push_back(static_cast<double>(j / sample_every) * out.dt);
            out.coords.push_back(c);
        }
    };
    for (std::size_t j = 0; j < start.size() && j <= M; ++j) record(j, start[j]);
    std::vector<Vector> window = start;
    for (std::size_t n = static_cast<std::size_t>(q); n <= M; ++n) {
        current = n;
        std::vector<Vector> hist(window.rbegin(), window.rbegin() + q);
        auto o = guarded(q, dt, hist, static_cast<double>(n) * dt);
        out.newton_iterations.push_back(o.iterations);
        record(n, o.coords);
        window.erase(window.begin());
        window.push_back(std::move(o.coords));
    }
    return out;
}

}  // namespace

RomTrajectory rom_integrate(const RomSystem& rom, int q, double dt, double t_end, const RomInit& init,
                            const NewtonRule& rule) {
    const bdf::NewtonConfig cfg{rule.tolerance(dt, q), rule.max_iter, bdf::Predictor::local_extrapolation,
                                rule.stop};
    return integrate(rom, q, dt, t_end, init, cfg, 1, rule.describe());
}

RomTrajectory rom_reference(const RomSystem& rom, double dt, double t_end, const Vector& initial_coords,
                            std::size_t refinement, double newton_tol) {
    if (refinement == 0) throw InvalidInput("rom_reference: refinement must be positive");
    const bdf::NewtonConfig cfg{newton_tol, 30, bdf::Predictor::local_extrapolation};
    const double h = dt / static_cast<double>(refinement);
    return integrate(rom, 5, h, t_end, Bootstrap{initial_coords}, cfg, refinement,
                     "fixed " + mm::format17(newton_tol));
}

void write_rom_trajectory(const std::string& prefix, const RomSystem& rom, const RomTrajectory& traj) {
    fom::Trajectory t;
    t.dt = traj.dt;
    t.times = traj.times;
    t.n_components = 1;
    t.states = traj.coords;
    const auto& sp = rom.discretization().space();
    fom::write_trajectory(prefix, t, sp.degree(), sp.mesh().n_side(),
                          {"rom r " + std::to_string(traj.r) + " q " + std::to_string(traj.q) + " newton " +
                           traj.newton_rule});
    std::ofstream os(prefix + "_newton.csv");
    if (!os) throw InvalidInput("cannot write '" + prefix + "_newton.csv'");
    os << "step,newton_iterations\n";
    for (std::size_t k = 0; k < traj.newton_iterations.size(); ++k)
        os << k + static_cast<std::size_t>(traj.q) << ',' << traj.newton_iterations[k] << '\n';
}

}  // namespace podrom::rom
