#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "podrom/fom.hpp"
#include "podrom/linalg.hpp"

namespace podrom::pod {

/// Choice of the first snapshot w0.
///  - initial: w0 = u_h(t_0)
///  - mean: w0 = time mean of the trajectory
///  - zero_after_mean: the mean is removed from every state first, which makes w0 = 0
enum class W0Mode { initial, mean, zero_after_mean };

enum class InnerProduct { h10, l2 };

const char* to_string(W0Mode m);
const char* to_string(InnerProduct ip);
W0Mode parse_w0_mode(const std::string& s);
InnerProduct parse_inner_product(const std::string& s);

/// y^1 = sqrt(N) w0, y^j = tau (u_h(t_{j-1}) - u_h(t_{j-2})) / dt for j = 2..N, N = M + 1.
struct SnapshotSet {
    std::vector<Vector> columns;
    double tau = 1.0;
    double dt = 0.0;
    W0Mode w0_mode = W0Mode::initial;
    Vector mean;  ///< subtracted mean (zero unless zero_after_mean)
    Vector w0;

    std::size_t count() const noexcept { return columns.size(); }
};

SnapshotSet build_snapshots(const fom::Trajectory& traj, double tau, W0Mode mode);

/// K_ij = (1/N) y_i^T gram y_j.
DenseMatrix correlation_matrix(const SnapshotSet& snaps, const CsrMatrix& gram);

struct RankCut {
    double tol = 1e-12;             ///< eigenvalues <= tol * lambda_1 are numerically zero
    std::optional<std::size_t> r;   ///< keep at most r modes
};

struct PodBasis {
    InnerProduct inner_product = InnerProduct::h10;
    Vector eigenvalues;  ///< the d_r retained ones, descending
    Vector spectrum;     ///< full spectrum of K, descending
    DenseMatrix modes;   ///< n x d_r, orthonormal columns in the gram inner product
    CsrMatrix gram;

    std::size_t dim() const noexcept { return eigenvalues.size(); }
    Vector mode(std::size_t k) const { return modes.column(k); }
    /// sum_{k > r} lambda_k over the retained eigenvalues.
    double tail(std::size_t r) const;
};

/// Modes phi_k = (N lambda_k)^{-1/2} sum_j v_k^j y^j, re-orthonormalized in the
/// gram inner product; the largest-magnitude entry of each mode is positive.
PodBasis pod_basis(const SnapshotSet& snaps, const DenseMatrix& K, const CsrMatrix& gram, InnerProduct ip,
                   const RankCut& cut = {});

struct Projection {
    Vector coefficients;
    Vector reconstruction;
};

/// Orthogonal projection onto span{phi_1..phi_r} in the basis inner product.
Projection project(const PodBasis& basis, std::size_t r, const Vector& v);
/// First r coefficients only.
Vector project_coefficients(const PodBasis& basis, std::size_t r, const Vector& v);

struct TailCheck {
    double lhs = 0.0;
    double rhs = 0.0;
};

/// lhs = (1/N) sum_j ||y^j - P^r y^j||_X^2 by explicit projection, rhs = sum_{k>r} lambda_k.
TailCheck tail_identity_check(const SnapshotSet& snaps, const PodBasis& basis, std::size_t r);

/// Same identity with w0 and the plain differences D u_h(t_j) separated:
/// ||(I-P^r) w0||^2 + tau^2 / ((M+1) dt^2) sum_j ||(I-P^r) D u_h(t_j)||^2.
TailCheck split_tail_identity_check(const fom::Trajectory& traj, const SnapshotSet& snaps, const PodBasis& basis,
                                    std::size_t r);

struct PointwiseReport {
    double max_l2 = 0.0;    ///< max_n ||u^n - P^r u^n||_0
    double max_h1 = 0.0;    ///< max_n ||grad(u^n - P^r u^n)||_0
    double bound_l2 = 0.0;  ///< (2 + 4 C T^2/tau^2) C_p^2 tail, C_p = 1/(pi sqrt 2); informational
    double bound_h1 = 0.0;  ///< (2 + 4 C T^2/tau^2) tail
    double c_tilde = 1.0;
};

/// Pointwise-in-time projection errors of the trajectory (mean removed when the
/// snapshots were mean-subtracted) against the squared-norm bounds. Bounds are
/// reported for squared norms; compare max_h1^2 <= bound_h1.
PointwiseReport pointwise_projection_report(const fom::Trajectory& traj, const SnapshotSet& snaps,
                                            const PodBasis& basis, const CsrMatrix& mass, std::size_t r);

/// `<prefix>_modes.mtx` (modes as columns) and `<prefix>_eigenvalues.txt`.
void write_basis(const std::string& prefix, const PodBasis& basis);
PodBasis read_basis(const std::string& prefix, CsrMatrix gram, InnerProduct ip);

/// Trajectory format with extra header lines for tau/w0_mode and `<prefix>_mean.mtx`.
void write_snapshots(const std::string& prefix, const SnapshotSet& snaps, std::size_t n_components, int degree,
                     std::size_t n_side);
SnapshotSet read_snapshots(const std::string& prefix);

}  // namespace podrom::pod
