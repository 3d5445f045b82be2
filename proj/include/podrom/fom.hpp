#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "podrom/bdf.hpp"
#include "podrom/linalg.hpp"
#include "podrom/mesh_fem.hpp"

namespace podrom::fom {

/// u_t - nu Laplace(u) + g(u) = f for n_components coupled fields, with constant
/// Dirichlet values on the space's Dirichlet part and natural conditions elsewhere.
struct ReactionSystem {
    std::size_t n_components = 1;
    std::vector<double> diffusion;  ///< nu per component
    fem::PointwiseMap g;
    fem::PointwiseJacobian g_prime;
    /// f(component, t, x); empty means f = 0.
    std::function<double(std::size_t, double, fem::Point)> forcing;
    std::vector<double> dirichlet_values;  ///< per component

    /// Throws InvalidInput when sizes disagree or a diffusion coefficient is not positive.
    void validate() const;
};

/// Brusselator with diffusion in the form above:
///   g_u = -(1 + u^2 v - 4u),  g_v = -(3u - u^2 v),  u = 1, v = 3 on Gamma1.
ReactionSystem brusselator_system(double nu);
/// g = 0, f = 0, homogeneous Dirichlet values.
ReactionSystem heat_system(double nu);

/// Largest relative mismatch between g' and central differences of g at `samples`
/// random states drawn from [lo, hi]^nc.
double jacobian_consistency(const ReactionSystem& system, std::size_t samples, double lo, double hi,
                            unsigned seed = 7, double eps = 1e-6);

/// Block operators of a system on a space; states stack n_components blocks of n_dof values.
class Discretization {
public:
    Discretization(std::shared_ptr<const fem::FeSpace> space, ReactionSystem system);

    const fem::FeSpace& space() const noexcept { return *space_; }
    std::shared_ptr<const fem::FeSpace> space_ptr() const noexcept { return space_; }
    const ReactionSystem& system() const noexcept { return system_; }
    std::size_t n_components() const noexcept { return system_.n_components; }
    std::size_t size() const noexcept { return system_.n_components * space_->n_dof(); }

    const CsrMatrix& mass() const noexcept { return mass_; }                ///< block M
    const CsrMatrix& stiffness() const noexcept { return stiffness_; }      ///< block A (unit coefficient)
    const CsrMatrix& nu_stiffness() const noexcept { return nu_stiffness_; }  ///< block nu_c * A
    const std::vector<bool>& mask() const noexcept { return mask_; }
    /// Dirichlet values on constrained dofs, zero elsewhere.
    const Vector& boundary_lift() const noexcept { return lift_; }

    /// Overwrites constrained entries with the Dirichlet values.
    void impose_boundary(Vector& u) const;
    /// (f(t), phi_i) stacked; zero when the system has no forcing.
    Vector load(double t) const;
    /// nu A u + G(u) - F(t)
    Vector spatial_residual(const Vector& u, double t) const;
    /// d G / d u
    CsrMatrix reaction_jacobian(const Vector& u) const;
    /// mass_coeff M + nu A + dG/du(u) on the coupled block pattern.
    CsrMatrix newton_matrix(const Vector& u, double mass_coeff) const;

private:
    std::shared_ptr<const fem::FeSpace> space_;
    ReactionSystem system_;
    CsrMatrix mass_, stiffness_, nu_stiffness_;
    std::vector<bool> mask_;
    Vector lift_;
    std::vector<std::size_t> diagonal_positions_;  // block-diagonal entry k -> coupled pattern position
};

/// States on a uniform grid t_j = j dt, j = 0..M.
struct Trajectory {
    double dt = 0.0;
    std::vector<double> times;
    std::vector<Vector> states;
    std::size_t n_components = 1;
    std::shared_ptr<const fem::FeSpace> space;

    std::size_t intervals() const noexcept { return states.empty() ? 0 : states.size() - 1; }
    /// Throws InvalidInput if the grid or the state count is inconsistent.
    void validate() const;
};

struct FomOptions {
    bdf::NewtonConfig newton{1e-10, 25, bdf::Predictor::local_extrapolation};
    double krylov_tol = 1e-12;
    std::size_t krylov_max_iter = 5000;
};

/// Integrates with BDF-q on [0, t_end] with starting values from bdf::starting_values.
Trajectory fom_integrate(const Discretization& disc, const Vector& u0, double dt, double t_end, int q,
                         const FomOptions& options = {});

/// BDF-5 at step t_end / (256 M_out), Newton tolerance 1e-12, sampled on the M_out grid.
/// Stands in for a tight-tolerance variable-order integrator.
Trajectory reference_trajectory(const Discretization& disc, const Vector& u0, double t_end, std::size_t M_out,
                                std::size_t refinement = 256);

/// Header file `<prefix>.txt` plus one dense Matrix Market file per component
/// (`<prefix>_c<k>.mtx`, columns = time levels). Extra header lines are appended verbatim.
void write_trajectory(const std::string& prefix, const Trajectory& traj, int degree, std::size_t n_side,
                      const std::vector<std::string>& extra_header = {});
/// Reads back states, dt and times; the space pointer is left empty.
Trajectory read_trajectory(const std::string& prefix);

}  // namespace podrom::fom
