// One PASS/FAIL line per acceptance criterion. Exit status 1 if any line fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <numbers>
#include <random>
#include <string>

#include "podrom/harness.hpp"

using namespace podrom;
using harness::sig6;

namespace {

int failures = 0;

struct Outcome {
    bool pass = false;
    std::string detail;
};

void run(int id, const char* name, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("%s criterion %d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
    std::fflush(stdout);
}

// ---------------------------------------------------------------------------

Outcome difference_form() {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    bool exact = true;
    double worst = 0.0;
    for (int q = 1; q <= 5; ++q) {
        const auto s = bdf::bdf_coefficients(q);
        const auto Q = static_cast<std::size_t>(q);
        bdf::Rational sum(0);
        for (const auto& d : s.delta) sum = sum + d;
        exact = exact && sum == bdf::Rational(0) && s.alpha[0] == s.delta[0] && s.alpha[Q - 1] == -s.delta[Q];
        for (std::size_t j = 1; j < Q; ++j) exact = exact && s.alpha[j] == s.alpha[j - 1] + s.delta[j];
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<Vector> seq(6, Vector(10));
            for (auto& v : seq)
                for (auto& x : v) x = unif(rng);
            const std::span<const Vector> head(seq.data(), Q + 1);
            const auto a = bdf::bdf_apply(s, head, 0.01);
            auto d = bdf::bdf_apply_as_differences(s, head, 0.01);
            axpy(-1.0, a, d);
            worst = std::max(worst, norm2(d) / norm2(a));
        }
    }
    return {exact && worst <= 1e-13,
            std::string("rational identities ") + (exact ? "exact" : "violated") + ", max relative gap " + sig6(worst)};
}

const harness::Pipeline& small_pipeline() {
    static const harness::Pipeline p = [] {
        harness::RunConfig cfg;
        cfg.M = 128;
        return harness::run_pipeline(cfg);
    }();
    return p;
}

Outcome tail_identity() {
    const auto& p = small_pipeline();
    const auto& mass = p.disc->mass();
    const auto l2_basis = pod::pod_basis(p.snapshots, pod::correlation_matrix(p.snapshots, mass), mass,
                                         pod::InnerProduct::l2);
    double h10 = 0.0, split = 0.0, l2 = 0.0;
    const double lam = p.basis.eigenvalues.front();
    for (std::size_t r = 1; r <= p.basis.dim(); ++r) {
        const auto a = pod::tail_identity_check(p.snapshots, p.basis, r);
        const auto b = pod::split_tail_identity_check(p.fom, p.snapshots, p.basis, r);
        h10 = std::max(h10, std::abs(a.lhs - a.rhs));
        split = std::max(split, std::abs(b.lhs - b.rhs));
    }
    const double lam_l2 = l2_basis.eigenvalues.front();
    for (std::size_t r = 1; r <= l2_basis.dim(); ++r) {
        const auto c = pod::tail_identity_check(p.snapshots, l2_basis, r);
        l2 = std::max(l2, std::abs(c.lhs - c.rhs));
    }
    const bool ok = h10 <= 1e-10 * lam && split <= 1e-10 * lam && l2 <= 1e-10 * lam_l2;
    return {ok, "d_r " + std::to_string(p.basis.dim()) + ", max |lhs-rhs|/lambda_1: H10 " + sig6(h10 / lam) +
                    ", split " + sig6(split / lam) + ", L2 (d_r " + std::to_string(l2_basis.dim()) + ") " +
                    sig6(l2 / lam_l2)};
}

Outcome pointwise_bound() {
    const auto& p = small_pipeline();
    const auto& gram = p.disc->stiffness();
    const auto init = pod::build_snapshots(p.fom, p.config.tau, pod::W0Mode::initial);
    const auto init_basis = pod::pod_basis(init, pod::correlation_matrix(init, gram), gram, pod::InnerProduct::h10);
    bool ok = true;
    std::string detail;
    auto check = [&](const char* label, const pod::SnapshotSet& s, const pod::PodBasis& b) {
        for (std::size_t r : {4u, 8u, 16u}) {
            const auto rep = pod::pointwise_projection_report(p.fom, s, b, p.disc->mass(), r);
            const double got = rep.max_h1 * rep.max_h1;
            ok = ok && got <= rep.bound_h1;
            detail += std::string(detail.empty() ? "" : ", ") + label + " r" + std::to_string(r) + " " + sig6(got) +
                      "<=" + sig6(rep.bound_h1);
        }
    };
    check("mean", p.snapshots, p.basis);
    check("initial", init, init_basis);
    return {ok, detail};
}

Outcome scalar_order() {
    // u' = -2u on [0, 1], exact starting values; each step solved in closed form.
    bool ok = true;
    std::string detail = "slopes";
    for (int q = 1; q <= 5; ++q) {
        const auto s = bdf::bdf_coefficients(q);
        std::vector<std::pair<double, double>> pts;
        for (int k = 4; k <= 9; ++k) {
            const std::size_t M = std::size_t{1} << k;
            const double dt = 1.0 / static_cast<double>(M);
            std::vector<double> u(M + 1);
            for (int j = 0; j < q; ++j) u[static_cast<std::size_t>(j)] = std::exp(-2.0 * j * dt);
            double err = 0.0;
            for (std::size_t n = static_cast<std::size_t>(q); n <= M; ++n) {
                double rhs = 0.0;
                for (int i = 1; i <= q; ++i) rhs -= s.delta_at(i) * u[n - static_cast<std::size_t>(i)];
                u[n] = rhs / (s.delta_at(0) + 2.0 * dt);
                err = std::max(err, std::abs(u[n] - std::exp(-2.0 * static_cast<double>(n) * dt)));
            }
            pts.emplace_back(dt, err);
        }
        const double slope = harness::estimate_order(pts).slope;
        ok = ok && std::abs(slope - q) <= 0.2;
        detail += " q" + std::to_string(q) + "=" + sig6(slope);
    }
    return {ok, detail};
}

// ---------------------------------------------------------------------------

const harness::Pipeline& desk_pipeline() {
    static const harness::Pipeline p = harness::run_pipeline(harness::RunConfig{});
    return p;
}

const harness::ConvergenceStudy& study() {
    static const harness::ConvergenceStudy s = [] {
        const auto& p = desk_pipeline();
        return harness::convergence_study(p, 10, {1, 2, 3, 4, 5}, p.config.m_grid);
    }();
    return s;
}

std::vector<const harness::ConvergenceRow*> rows_for(int q) {
    std::vector<const harness::ConvergenceRow*> out;
    for (const auto& row : study().rows)
        if (row.q == q) out.push_back(&row);
    return out;
}

Outcome temporal_order() {
    // Gated norm: (max_n ||e^n||_0^2 + sum_n dt nu |e^n|_1^2)^(1/2). Max L2, max H1 and the
    // integrated H1 part alone are printed, not gated.
    bool ok = true;
    std::string detail;
    auto pair = [](const std::vector<double>& v) { return sig6(v[v.size() - 2]) + "," + sig6(v.back()); };
    for (int q = 1; q <= 5; ++q) {
        std::vector<std::pair<double, double>> energy, l2, mh1, ih1;
        for (const auto* row : rows_for(q)) {
            const double dt = desk_pipeline().config.T / static_cast<double>(row->M);
            const auto& w = row->whole;
            energy.emplace_back(dt, std::sqrt(w.max_l2 * w.max_l2 + w.integrated_h1));
            l2.emplace_back(dt, w.max_l2);
            mh1.emplace_back(dt, w.max_h1);
            ih1.emplace_back(dt, std::sqrt(w.integrated_h1));
        }
        const double tol = q <= 3 ? 0.25 : 0.4;
        const auto e = harness::estimate_order(energy).pairwise;
        for (std::size_t k = e.size() - 2; k < e.size(); ++k) ok = ok && std::abs(e[k] - q) <= tol;
        detail += std::string(detail.empty() ? "" : "; ") + "q" + std::to_string(q) + " " + pair(e) + " (L2 " +
                  pair(harness::estimate_order(l2).pairwise) + ", maxH1 " + pair(harness::estimate_order(mh1).pairwise) +
                  ", intH1 " + pair(harness::estimate_order(ih1).pairwise) + ")";
    }
    return {ok, detail};
}

Outcome r_refinement() {
    const auto& p = desk_pipeline();
    const auto rows = harness::r_table(p, 5);
    bool mono = true;
    for (std::size_t k = 1; k < rows.size(); ++k)
        mono = mono && rows[k].rom_vs_projection.max_l2 <= rows[k - 1].rom_vs_projection.max_l2 &&
               rows[k].rom_vs_projection.max_h1 <= rows[k - 1].rom_vs_projection.max_h1;
    bool tracks = true;
    std::string detail;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& row = rows[k];
        const double rl2 = row.rom_vs_fom.max_l2 / row.projection.max_l2;
        const double rh1 = row.rom_vs_fom.max_h1 / row.projection.max_h1;
        if (k + 2 >= rows.size()) tracks = tracks && rl2 <= 5.0 && rh1 <= 5.0;
        detail += std::string(detail.empty() ? "" : "; ") + "r" + std::to_string(row.r) + " L2 " +
                  sig6(row.rom_vs_projection.max_l2) + " H1 " + sig6(row.rom_vs_projection.max_h1) + " ratio " +
                  sig6(rl2) + "," + sig6(rh1);
    }
    return {mono && tracks, std::string(mono ? "nonincreasing" : "NOT nonincreasing") + ", " +
                                (tracks ? "tracks projection" : "does NOT track projection within 5x") + ": " +
                                detail};
}

Outcome starting_values() {
    bool ok = true;
    double worst = 0.0;
    for (int q = 2; q <= 5; ++q)
        for (const auto* row : rows_for(q)) {
            ok = ok && row->starting.max_l2 < row->whole.max_l2 && row->starting.max_h1 < row->whole.max_h1;
            worst = std::max({worst, row->starting.max_l2 / row->whole.max_l2,
                              row->starting.max_h1 / row->whole.max_h1});
        }
    return {ok, "largest starting/whole ratio " + sig6(worst)};
}

Outcome newton_counts() {
    bool ok = true;
    std::size_t most = 0;
    double lo = 1e9, hi = 0.0;
    std::vector<std::size_t> modes;
    for (const auto& row : study().rows) {
        ok = ok && row.newton_max <= 6 && row.newton_mode >= 2 && row.newton_mode <= 4 && row.newton_mean >= 2.0 &&
             row.newton_mean <= 4.0;
        most = std::max(most, row.newton_max);
        lo = std::min(lo, row.newton_mean);
        hi = std::max(hi, row.newton_mean);
        modes.push_back(row.newton_mode);
    }
    return {ok, "rule " + desk_pipeline().config.newton.describe() + ", max " + std::to_string(most) +
                    ", modal count " + std::to_string(harness::mode_of(modes)) + ", mean in [" + sig6(lo) + ", " +
                    sig6(hi) + "]"};
}

Outcome spatial_order() {
    using std::numbers::pi;
    const double T = 0.5;
    std::vector<std::pair<double, double>> pts;
    std::string detail;
    for (std::size_t n : {8u, 16u, 32u}) {
        harness::RunConfig cfg;
        cfg.system = harness::SystemKind::manufactured;
        cfg.n_side = n;
        cfg.nu = 0.5;
        const auto disc = harness::make_discretization(cfg);
        fom::FomOptions tight;
        tight.newton.tol = 1e-13;
        const auto tr = fom::fom_integrate(*disc, harness::initial_state(*disc, cfg.system), T / 64, T, 5, tight);
        const double err = fem::l2_error(disc->space(), tr.states.back(), [&](fem::Point p) {
            return std::exp(-T) * std::cos(pi * p.x / 2) * std::cos(pi * p.y / 2);
        });
        pts.emplace_back(1.0 / static_cast<double>(n), err);
        detail += "n" + std::to_string(n) + " " + sig6(err) + " ";
    }
    const auto est = harness::estimate_order(pts);
    return {est.slope >= 2.7, detail + "slope " + sig6(est.slope) + " pairwise " + sig6(est.pairwise[0]) + "," +
                                  sig6(est.pairwise[1])};
}

Outcome equilibrium() {
    harness::RunConfig cfg;
    const auto disc = harness::make_discretization(cfg);
    Vector eq(disc->size(), 3.0);
    std::fill(eq.begin(), eq.begin() + static_cast<std::ptrdiff_t>(disc->space().n_dof()), 1.0);
    double worst = 0.0;
    for (int q = 1; q <= 5; ++q) {
        const auto tr = fom::fom_integrate(*disc, eq, cfg.T / 1024, 20 * cfg.T / 1024, q);
        for (const auto& u : tr.states)
            for (std::size_t i = 0; i < u.size(); ++i) worst = std::max(worst, std::abs(u[i] - eq[i]));
    }
    return {worst <= 1e-10, "max deviation " + sig6(worst)};
}

}  // namespace

int main() {
    run(1, "difference form of the BDF derivative", difference_form);
    run(2, "POD tail identity", tail_identity);
    run(3, "pointwise projection bound", pointwise_bound);
    run(4, "scalar BDF order", scalar_order);
    run(5, "reduced-model temporal order", temporal_order);
    run(6, "monotone r refinement", r_refinement);
    run(7, "starting values below whole-period error", starting_values);
    run(8, "Newton iteration counts", newton_counts);
    run(9, "FEM spatial order", spatial_order);
    run(10, "Brusselator equilibrium", equilibrium);
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
