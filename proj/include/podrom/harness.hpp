#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "podrom/fom.hpp"
#include "podrom/pod.hpp"
#include "podrom/rom.hpp"

namespace podrom::harness {

struct ErrorSummary {
    double max_l2 = 0.0;
    double max_h1 = 0.0;         ///< H1 seminorm
    double integrated_h1 = 0.0;  ///< sum_n dt nu |e^n|_1^2
};

/// Errors over indices first..M of two time-aligned nodal trajectories. Components
/// are stacked blocks; their squared norms add up. `nu` holds one coefficient per component.
ErrorSummary compare_trajectories(const fem::FeSpace& space, std::size_t n_components, const std::vector<Vector>& a,
                                  const std::vector<Vector>& b, double dt, const std::vector<double>& nu,
                                  std::size_t first = 0);

struct OrderEstimate {
    double slope = 0.0;            ///< least squares, log err against log dt
    std::vector<double> pairwise;  ///< log2(e_i / e_{i+1}) for consecutive halvings
};

/// Points are (dt, err) with dt decreasing by factors of two.
OrderEstimate estimate_order(const std::vector<std::pair<double, double>>& points);

enum class SystemKind { brusselator, heat, manufactured };

struct RunConfig {
    std::size_t n_side = 16;
    int degree = 2;
    SystemKind system = SystemKind::brusselator;
    double nu = 0.002;
    double T = 7.090636;
    std::size_t M = 1024;
    int q = 5;
    std::vector<std::size_t> r_grid{6, 10, 14, 18};
    std::vector<std::size_t> m_grid{64, 128, 256, 512, 1024};
    double tau = 1.0;
    pod::W0Mode w0_mode = pod::W0Mode::zero_after_mean;
    pod::InnerProduct inner_product = pod::InnerProduct::h10;
    rom::NewtonRule newton;
    std::size_t reference_refinement = 64;
    std::string out_dir = "podrom_out";
    unsigned seed = 7;

    /// Throws InvalidInput on a nonpositive parameter or q outside 1..5.
    void validate() const;
};

/// Flat `key = value` text with `#` comments. Unknown keys are rejected.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Everything derived from a RunConfig up to the basis.
struct Pipeline {
    RunConfig config;
    std::shared_ptr<const fem::FeSpace> space;
    std::shared_ptr<const fom::Discretization> disc;
    Vector u0;
    fom::Trajectory fom;
    pod::SnapshotSet snapshots;
    pod::PodBasis basis;
};

std::shared_ptr<const fom::Discretization> make_discretization(const RunConfig& cfg);
/// Perturbed equilibrium for the Brusselator, sin(pi x) sin(pi y) for the heat problems.
Vector initial_state(const fom::Discretization& disc, SystemKind kind);
/// FOM with BDF-q at T/M, snapshots, basis.
Pipeline run_pipeline(const RunConfig& cfg);

/// Rows of one convergence sweep at fixed r.
struct ConvergenceRow {
    int q = 1;
    std::size_t M = 0;
    ErrorSummary whole;     ///< over n = q..M
    ErrorSummary starting;  ///< over n = 1..q-1 (zero for q = 1)
    std::size_t newton_max = 0;
    double newton_mean = 0.0;
    std::size_t newton_mode = 0;
};

struct ConvergenceStudy {
    std::size_t r = 0;
    std::vector<ConvergenceRow> rows;
};

/// ROM runs for each q and M against one BDF-5 ROM reference at T / (M_max refinement).
ConvergenceStudy convergence_study(const Pipeline& p, std::size_t r, const std::vector<int>& qs,
                                   const std::vector<std::size_t>& ms);

/// Most frequent value (smallest on ties).
std::size_t mode_of(const std::vector<std::size_t>& v);

/// Table of ROM errors against P^r u_h(t_n) and projection errors, per r.
struct RTableRow {
    std::size_t r = 0;
    ErrorSummary rom_vs_projection;
    ErrorSummary rom_vs_fom;
    ErrorSummary projection;  ///< u_h - P^r u_h
};
std::vector<RTableRow> r_table(const Pipeline& p, int q);

struct CheckLine {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// BDF coefficient identities, POD tail identity and modal orthonormality on a
/// small Brusselator run.
std::vector<CheckLine> identity_checks(unsigned seed = 7);

/// `%.6g`
std::string sig6(double x);

}  // namespace podrom::harness
