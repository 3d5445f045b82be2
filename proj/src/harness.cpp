#include "podrom/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "podrom/error.hpp"

namespace podrom::harness {

ErrorSummary compare_trajectories(const fem::FeSpace& space, std::size_t n_components, const std::vector<Vector>& a,
                                  const std::vector<Vector>& b, double dt, const std::vector<double>& nu,
                                  std::size_t first) {
    if (a.size() != b.size()) throw InvalidInput("compare_trajectories: grid mismatch");
    if (nu.size() != n_components) throw InvalidInput("compare_trajectories: one nu per component expected");
    const std::size_t n = space.n_dof();
    ErrorSummary s;
    for (std::size_t k = first; k < a.size(); ++k) {
        if (a[k].size() != n * n_components || b[k].size() != n * n_components)
            throw InvalidInput("compare_trajectories: state dimension mismatch");
        double l2 = 0.0, h1 = 0.0, weighted = 0.0;
        Vector e(n);
        for (std::size_t c = 0; c < n_components; ++c) {
            for (std::size_t i = 0; i < n; ++i) e[i] = a[k][c * n + i] - b[k][c * n + i];
            const auto nr = fem::norms(space, e);
            l2 += nr.l2 * nr.l2;
            h1 += nr.h1_semi * nr.h1_semi;
            weighted += nu[c] * nr.h1_semi * nr.h1_semi;
        }
        s.max_l2 = std::max(s.max_l2, std::sqrt(l2));
        s.max_h1 = std::max(s.max_h1, std::sqrt(h1));
        s.integrated_h1 += dt * weighted;
    }
    return s;
}

OrderEstimate estimate_order(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3) throw InvalidInput("estimate_order: at least three points required");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [dt, err] : points) {
        if (!(dt > 0.0) || !(err > 0.0)) throw InvalidInput("estimate_order: steps and errors must be positive");
        const double x = std::log(dt), y = std::log(err);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(points.size());
    OrderEstimate est;
    est.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    for (std::size_t i = 0; i + 1 < points.size(); ++i)
        est.pairwise.push_back(std::log2(points[i].second / points[i + 1].second));
    return est;
}

// ---------------------------------------------------------------------------

void RunConfig::validate() const {
    if (n_side == 0) throw InvalidInput("config: n_side must be positive");
    if (degree != 1 && degree != 2) throw InvalidInput("config: degree must be 1 or 2");
    if (!(nu > 0.0) || !(T > 0.0) || !(tau > 0.0)) throw InvalidInput("config: nu, T and tau must be positive");
    if (M == 0) throw InvalidInput("config: M must be positive");
    if (q < 1 || q > 5) throw InvalidInput("config: q must lie in 1..5");
    if (r_grid.empty() || m_grid.empty()) throw InvalidInput("config: empty r or M grid");
    for (auto r : r_grid)
        if (r == 0) throw InvalidInput("config: r values must be positive");
    for (auto m : m_grid)
        if (m == 0) throw InvalidInput("config: M values must be positive");
    if (newton.fixed && !(*newton.fixed > 0.0)) throw InvalidInput("config: newton tolerance must be positive");
    if (reference_refinement == 0) throw InvalidInput("config: reference_refinement must be positive");
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_real(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != v.size() || v.empty()) throw InvalidInput("config: '" + key + "' expects a number, got '" + v + "'");
    return x;
}

std::size_t to_count(const std::string& key, const std::string& v) {
    const double x = to_real(key, v);
    if (x < 0 || x != std::floor(x)) throw InvalidInput("config: '" + key + "' expects a nonnegative integer");
    return static_cast<std::size_t>(x);
}

std::vector<std::size_t> to_list(const std::string& key, const std::string& v) {
    std::vector<std::size_t> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_count(key, trim(item)));
    return out;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidInput("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key == "n_side") cfg.n_side = to_count(key, val);
        else if (key == "degree") cfg.degree = static_cast<int>(to_count(key, val));
        else if (key == "system") {
            if (val == "brusselator") cfg.system = SystemKind::brusselator;
            else if (val == "heat") cfg.system = SystemKind::heat;
            else if (val == "manufactured") cfg.system = SystemKind::manufactured;
            else throw InvalidInput("config: unknown system '" + val + "'");
        } else if (key == "nu") cfg.nu = to_real(key, val);
        else if (key == "T") cfg.T = to_real(key, val);
        else if (key == "M") cfg.M = to_count(key, val);
        else if (key == "q") cfg.q = static_cast<int>(to_count(key, val));
        else if (key == "r_grid") cfg.r_grid = to_list(key, val);
        else if (key == "m_grid") cfg.m_grid = to_list(key, val);
        else if (key == "tau") cfg.tau = to_real(key, val);
        else if (key == "w0_mode") cfg.w0_mode = pod::parse_w0_mode(val);
        else if (key == "inner_product") cfg.inner_product = pod::parse_inner_product(val);
        else if (key == "newton_rule") {
            if (val == "scaled") cfg.newton.fixed.reset();
            else cfg.newton.fixed = to_real(key, val);
        } else if (key == "newton_max_iter") cfg.newton.max_iter = to_count(key, val);
        else if (key == "reference_refinement") cfg.reference_refinement = to_count(key, val);
        else if (key == "out_dir") cfg.out_dir = val;
        else if (key == "seed") cfg.seed = static_cast<unsigned>(to_count(key, val));
        else throw InvalidInput("config: unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InvalidInput("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

// ---------------------------------------------------------------------------

std::shared_ptr<const fom::Discretization> make_discretization(const RunConfig& cfg) {
    using std::numbers::pi;
    const auto part = cfg.system == SystemKind::heat ? fem::DirichletPart::whole_boundary : fem::DirichletPart::gamma1;
    auto space = std::make_shared<const fem::FeSpace>(fem::TriMesh::build(cfg.n_side), cfg.degree, part);
    fom::ReactionSystem sys;
    switch (cfg.system) {
        case SystemKind::brusselator: sys = fom::brusselator_system(cfg.nu); break;
        case SystemKind::heat: sys = fom::heat_system(cfg.nu); break;
        case SystemKind::manufactured: {
            // u = exp(-t) cos(pi x/2) cos(pi y/2): zero on x = 1 and y = 1, zero flux on x = 0 and y = 0.
            sys = fom::heat_system(cfg.nu);
            const double nu = cfg.nu;
            sys.forcing = [nu](std::size_t, double t, fem::Point p) {
                return (-1.0 + nu * pi * pi / 2.0) * std::exp(-t) * std::cos(pi * p.x / 2) * std::cos(pi * p.y / 2);
            };
            break;
        }
    }
    return std::make_shared<const fom::Discretization>(space, std::move(sys));
}

Vector initial_state(const fom::Discretization& disc, SystemKind kind) {
    using std::numbers::pi;
    const auto& sp = disc.space();
    Vector u;
    switch (kind) {
        case SystemKind::brusselator: {
            const auto a = fem::interpolate(sp, [](fem::Point p) {
                return 1.0 + 0.1 * std::sin(pi * p.x) * std::sin(pi * p.y);
            });
            u = a;
            u.resize(2 * sp.n_dof(), 3.0);
            break;
        }
        case SystemKind::heat:
            u = fem::interpolate(sp, [](fem::Point p) { return std::sin(pi * p.x) * std::sin(pi * p.y); });
            break;
        case SystemKind::manufactured:
            u = fem::interpolate(sp, [](fem::Point p) { return std::cos(pi * p.x / 2) * std::cos(pi * p.y / 2); });
            break;
    }
    disc.impose_boundary(u);
    return u;
}

Pipeline run_pipeline(const RunConfig& cfg) {
    cfg.validate();
    Pipeline p;
    p.config = cfg;
    p.disc = make_discretization(cfg);
    p.space = p.disc->space_ptr();
    p.u0 = initial_state(*p.disc, cfg.system);
    p.fom = fom::fom_integrate(*p.disc, p.u0, cfg.T / static_cast<double>(cfg.M), cfg.T, cfg.q);
    p.snapshots = pod::build_snapshots(p.fom, cfg.tau, cfg.w0_mode);
    const CsrMatrix& gram = cfg.inner_product == pod::InnerProduct::h10 ? p.disc->stiffness() : p.disc->mass();
    const auto K = pod::correlation_matrix(p.snapshots, gram);
    p.basis = pod::pod_basis(p.snapshots, K, gram, cfg.inner_product);
    return p;
}

namespace {

Vector rom_lift(const Pipeline& p) {
    if (p.config.w0_mode == pod::W0Mode::zero_after_mean) return p.snapshots.mean;
    for (double v : p.disc->system().dirichlet_values)
        if (v != 0.0)
            throw InvalidInput("reduced model with nonzero Dirichlet data needs w0_mode = zero_after_mean");
    return Vector(p.disc->size(), 0.0);
}

std::vector<Vector> nodal(const rom::RomSystem& rs, const std::vector<Vector>& coords) {
    std::vector<Vector> out;
    out.reserve(coords.size());
    for (const auto& c : coords) out.push_back(rom::lift_to_nodal(rs, c));
    return out;
}

}  // namespace

std::size_t mode_of(const std::vector<std::size_t>& v) {
    std::map<std::size_t, std::size_t> hist;
    for (auto x : v) ++hist[x];
    std::size_t best = 0, count = 0;
    for (const auto& [x, c] : hist)
        if (c > count) best = x, count = c;
    return best;
}

ConvergenceStudy convergence_study(const Pipeline& p, std::size_t r, const std::vector<int>& qs,
                                   const std::vector<std::size_t>& ms) {
    if (ms.empty() || qs.empty()) throw InvalidInput("convergence_study: empty sweep");
    const auto& cfg = p.config;
    const std::size_t m_max = *std::max_element(ms.begin(), ms.end());
    for (auto m : ms)
        if (m_max % m != 0) throw InvalidInput("convergence_study: every M must divide the largest M");
    const rom::RomSystem rs(p.disc, p.basis, r, rom_lift(p));
    const Vector c0 = rs.coordinates_of(p.u0);
    const auto ref = rom::rom_reference(rs, cfg.T / static_cast<double>(m_max), cfg.T, c0, cfg.reference_refinement);
    const auto ref_nodal = nodal(rs, ref.coords);

    ConvergenceStudy study;
    study.r = r;
    const auto& nu = p.disc->system().diffusion;
    for (int q : qs) {
        for (auto m : ms) {
            const double dt = cfg.T / static_cast<double>(m);
            const auto run = rom::rom_integrate(rs, q, dt, cfg.T, rom::Bootstrap{c0}, cfg.newton);
            const auto got = nodal(rs, run.coords);
            std::vector<Vector> want;
            const std::size_t stride = m_max / m;
            for (std::size_t j = 0; j <= m; ++j) want.push_back(ref_nodal[j * stride]);
            ConvergenceRow row;
            row.q = q;
            row.M = m;
            row.whole = compare_trajectories(*p.space, p.disc->n_components(), got, want, dt, nu,
                                             static_cast<std::size_t>(q));
            if (q > 1) {
                const std::vector<Vector> gs(got.begin() + 1, got.begin() + q), ws(want.begin() + 1, want.begin() + q);
                row.starting = compare_trajectories(*p.space, p.disc->n_components(), gs, ws, dt, nu);
            }
            const auto& its = run.newton_iterations;
            row.newton_max = its.empty() ? 0 : *std::max_element(its.begin(), its.end());
            double sum = 0.0;
            for (auto k : its) sum += static_cast<double>(k);
            row.newton_mean = its.empty() ? 0.0 : sum / static_cast<double>(its.size());
            row.newton_mode = mode_of(its);
            study.rows.push_back(row);
        }
    }
    return study;
}

std::vector<RTableRow> r_table(const Pipeline& p, int q) {
    const auto& cfg = p.config;
    const double dt = p.fom.dt;
    const auto& nu = p.disc->system().diffusion;
    const auto nc = p.disc->n_components();
    std::vector<RTableRow> rows;
    for (auto r : cfg.r_grid) {
        const rom::RomSystem rs(p.disc, p.basis, r, rom_lift(p));
        const auto run = rom::rom_integrate(rs, q, dt, cfg.T, rom::ProjectFom{&p.fom}, cfg.newton);
        const auto got = nodal(rs, run.coords);
        std::vector<Vector> projected;
        for (const auto& u : p.fom.states) projected.push_back(rom::lift_to_nodal(rs, rs.coordinates_of(u)));
        RTableRow row;
        row.r = r;
        const auto first = static_cast<std::size_t>(q);
        row.rom_vs_projection = compare_trajectories(*p.space, nc, got, projected, dt, nu, first);
        row.rom_vs_fom = compare_trajectories(*p.space, nc, got, p.fom.states, dt, nu, first);
        row.projection = compare_trajectories(*p.space, nc, projected, p.fom.states, dt, nu, first);
        rows.push_back(row);
    }
    return rows;
}

std::vector<CheckLine> identity_checks(unsigned seed) {
    std::vector<CheckLine> out;
    auto line = [&](std::string name, bool pass, double value) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3e", value);
        out.push_back({std::move(name), pass, buf});
    };

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int q = 1; q <= 5; ++q) {
        const auto s = bdf::bdf_coefficients(q);
        bdf::Rational sum(0);
        for (const auto& d : s.delta) sum = sum + d;
        bool rec = s.alpha[0] == s.delta[0] && s.alpha[static_cast<std::size_t>(q) - 1] == -s.delta.back();
        for (int j = 1; j < q; ++j)
            rec = rec && s.alpha[static_cast<std::size_t>(j)] ==
                             s.alpha[static_cast<std::size_t>(j) - 1] + s.delta[static_cast<std::size_t>(j)];
        line("bdf" + std::to_string(q) + " exact coefficient identities", sum == bdf::Rational(0) && rec, 0.0);
        double worst = 0.0;
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<Vector> seq(static_cast<std::size_t>(q) + 1, Vector(10));
            for (auto& v : seq)
                for (auto& x : v) x = unif(rng);
            const auto a = bdf::bdf_apply(s, seq, 0.01);
            const auto b = bdf::bdf_apply_as_differences(s, seq, 0.01);
            Vector d = a;
            axpy(-1.0, b, d);
            worst = std::max(worst, norm2(d) / std::max(norm2(a), 1e-300));
        }
        line("bdf" + std::to_string(q) + " difference form", worst <= 1e-13, worst);
    }

    RunConfig cfg;
    cfg.n_side = 8;
    cfg.M = 32;
    cfg.q = 2;
    const auto p = run_pipeline(cfg);
    const double lam1 = p.basis.eigenvalues.front();
    double tail_err = 0.0;
    for (std::size_t r = 1; r <= p.basis.dim(); ++r) {
        const auto t = pod::tail_identity_check(p.snapshots, p.basis, r);
        tail_err = std::max(tail_err, std::abs(t.lhs - t.rhs));
    }
    line("pod tail identity", tail_err <= 1e-10 * lam1, tail_err / lam1);

    const rom::RomSystem rs(p.disc, p.basis, p.basis.dim(), p.snapshots.mean);
    double orth = 0.0;
    const auto& st = rs.reduced_stiffness();
    for (std::size_t i = 0; i < st.rows(); ++i)
        for (std::size_t j = 0; j < st.cols(); ++j) orth = std::max(orth, std::abs(st(i, j) - (i == j ? 1.0 : 0.0)));
    line("mode orthonormality", orth <= 1e-10, orth);
    return out;
}

std::string sig6(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

}  // namespace podrom::harness
