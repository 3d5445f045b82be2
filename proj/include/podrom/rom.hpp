#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "podrom/bdf.hpp"
#include "podrom/fom.hpp"
#include "podrom/pod.hpp"

namespace podrom::rom {

/// Galerkin projection of a Discretization onto the first r modes of a basis.
/// Full states are lift + Phi c.
class RomSystem {
public:
    RomSystem(std::shared_ptr<const fom::Discretization> disc, const pod::PodBasis& basis, std::size_t r,
              Vector lift);

    std::size_t r() const noexcept { return r_; }
    const fom::Discretization& discretization() const noexcept { return *disc_; }
    const DenseMatrix& phi() const noexcept { return phi_; }                   ///< n x r
    const DenseMatrix& reduced_mass() const noexcept { return reduced_mass_; }  ///< Phi^T M Phi
    const DenseMatrix& reduced_stiffness() const noexcept { return reduced_stiffness_; }  ///< Phi^T A Phi
    const DenseMatrix& reduced_nu_stiffness() const noexcept { return reduced_nu_stiffness_; }
    const Vector& lift() const noexcept { return lift_; }

    /// Phi^T x
    Vector restrict(const Vector& x) const { return phi_.multiply_transposed(x); }
    /// Phi^T J Phi
    DenseMatrix restrict(const CsrMatrix& j) const;
    /// H10 (or basis-gram) coefficients of x - lift.
    Vector coordinates_of(const Vector& x) const;

    /// Projected part nu Phi^T A lift - Phi^T F(t) of the spatial residual that does not depend on c.
    Vector affine_term(double t) const;

private:
    std::shared_ptr<const fom::Discretization> disc_;
    std::size_t r_;
    DenseMatrix phi_;
    CsrMatrix gram_;
    DenseMatrix reduced_mass_, reduced_stiffness_, reduced_nu_stiffness_;
    Vector lift_;
    Vector lift_term_;
    bool has_forcing_;
};

/// Throws InvalidRank when r exceeds the basis dimension.
RomSystem rom_assemble(std::shared_ptr<const fom::Discretization> disc, const pod::PodBasis& basis, std::size_t r,
                       Vector lift);

Vector lift_to_nodal(const RomSystem& rom, const Vector& coords);

/// (d_q u_r^n, phi_k) + nu (grad u_r^n, grad phi_k) + (g(u_r^n), phi_k) - (f^n, phi_k).
/// `history` holds c^{n-1}..c^{n-q} (newest first).
Vector rom_residual(const RomSystem& rom, const bdf::BdfScheme& scheme, std::span<const Vector> history,
                    const Vector& candidate, double t_n, double dt);
/// (delta_0/dt) Phi^T M Phi + nu Phi^T A Phi + Phi^T g'(u_r) Phi.
DenseMatrix rom_jacobian(const RomSystem& rom, const bdf::BdfScheme& scheme, const Vector& candidate, double dt);

struct RomTrajectory {
    std::vector<double> times;
    std::vector<Vector> coords;
    double dt = 0.0;
    int q = 1;
    std::size_t r = 0;
    std::string newton_rule;
    /// Corrections per main step n = q..M (index 0 is step q).
    std::vector<std::size_t> newton_iterations;
    /// Corrections per step of the starting-value computation.
    std::vector<std::size_t> bootstrap_iterations;
};

/// Starting values u_r^j = P^r u_h(t_j), j < q, read from a full trajectory on the same grid.
struct ProjectFom {
    const fom::Trajectory* trajectory = nullptr;
};
/// Starting values from the reduced-step bootstrap of bdf::starting_values.
struct Bootstrap {
    Vector initial_coords;
};
using RomInit = std::variant<ProjectFom, Bootstrap>;

/// Newton tolerance: dt^q / 100 (`scaled`) or a fixed value, applied to the
/// Euclidean norm of the coordinate correction by default.
struct NewtonRule {
    std::optional<double> fixed;
    std::size_t max_iter = 20;
    bdf::StopRule stop = bdf::StopRule::increment;

    double tolerance(double dt, int q) const;
    std::string describe() const;
};

RomTrajectory rom_integrate(const RomSystem& rom, int q, double dt, double t_end, const RomInit& init,
                            const NewtonRule& rule = {});

/// ROM solved by BDF-5 at dt / refinement, sampled every `refinement` steps.
RomTrajectory rom_reference(const RomSystem& rom, double dt, double t_end, const Vector& initial_coords,
                            std::size_t refinement = 64, double newton_tol = 1e-13);

/// Trajectory text format with an extra header line and an iteration-count CSV.
void write_rom_trajectory(const std::string& prefix, const RomSystem& rom, const RomTrajectory& traj);

}  // namespace podrom::rom
