// podrom command line: full-order solves, POD bases, reduced runs and error tables.
//
//   podrom <subcommand> [--config FILE] [--out DIR] [--q N|A..B] [--r N] [--M N] [--which NAME]
//
// Exit codes: 0 success, 1 pipeline failure, 2 usage error.

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "podrom/error.hpp"
#include "podrom/harness.hpp"
#include "podrom/matrix_market.hpp"

namespace fs = std::filesystem;
using namespace podrom;

namespace {

struct Usage : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string config;
    std::string out;
    std::string q;
    std::size_t r = 0;
    std::size_t M = 0;
    std::string which = "all";
};

std::vector<int> parse_q_list(const std::string& s, int fallback) {
    if (s.empty()) return {fallback};
    std::vector<int> qs;
    try {
        if (auto dots = s.find(".."); dots != std::string::npos) {
            const int a = std::stoi(s.substr(0, dots)), b = std::stoi(s.substr(dots + 2));
            for (int q = a; q <= b; ++q) qs.push_back(q);
        } else {
            std::stringstream ss(s);
            std::string item;
            while (std::getline(ss, item, ',')) qs.push_back(std::stoi(item));
        }
    } catch (const std::exception&) {
        throw Usage("--q expects N, A..B or a comma list");
    }
    if (qs.empty()) throw Usage("--q expects N, A..B or a comma list");
    for (int q : qs)
        if (q < 1 || q > 5) throw Usage("--q values must lie in 1..5");
    return qs;
}

harness::RunConfig effective_config(const Options& o) {
    harness::RunConfig cfg;
    try {
        if (!o.config.empty()) cfg = harness::load_config(o.config);
    } catch (const InvalidInput& e) {
        throw Usage(e.what());
    }
    if (!o.out.empty()) cfg.out_dir = o.out;
    if (o.M) cfg.M = o.M;
    if (!o.q.empty()) cfg.q = parse_q_list(o.q, cfg.q).front();
    if (o.r) cfg.r_grid = {o.r};
    try {
        cfg.validate();
    } catch (const InvalidInput& e) {
        throw Usage(e.what());
    }
    fs::create_directories(cfg.out_dir);
    return cfg;
}

std::ofstream open_out(const harness::RunConfig& cfg, const std::string& name) {
    std::ofstream os(fs::path(cfg.out_dir) / name);
    if (!os) throw InvalidInput("cannot write '" + name + "' in " + cfg.out_dir);
    return os;
}

void note(const std::string& msg) { std::cerr << "podrom: " << msg << '\n'; }

harness::Pipeline pipeline(const harness::RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    auto p = harness::run_pipeline(cfg);
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    note("full-order run and basis: " + harness::sig6(sec) + " s, d_r = " + std::to_string(p.basis.dim()));
    return p;
}

using harness::sig6;

int cmd_mesh(const Options& o) {
    const auto cfg = effective_config(o);
    auto os = open_out(cfg, "mesh.txt");
    fem::TriMesh::build(cfg.n_side).write(os);
    return 0;
}

int cmd_fom(const Options& o) {
    const auto cfg = effective_config(o);
    const auto disc = harness::make_discretization(cfg);
    const auto u0 = harness::initial_state(*disc, cfg.system);
    const auto traj = fom::fom_integrate(*disc, u0, cfg.T / static_cast<double>(cfg.M), cfg.T, cfg.q);
    fom::write_trajectory((fs::path(cfg.out_dir) / "fom").string(), traj, cfg.degree, cfg.n_side,
                          {"q " + std::to_string(cfg.q)});
    return 0;
}

int cmd_pod(const Options& o) {
    const auto cfg = effective_config(o);
    const auto p = pipeline(cfg);
    const auto dir = fs::path(cfg.out_dir);
    pod::write_basis((dir / "basis").string(), p.basis);
    pod::write_snapshots((dir / "snapshots").string(), p.snapshots, p.disc->n_components(), cfg.degree, cfg.n_side);
    auto os = open_out(cfg, "eigenvalues.csv");
    os << "# inner product " << pod::to_string(cfg.inner_product) << ", w0 " << pod::to_string(cfg.w0_mode) << '\n';
    os << "k,lambda,tail\n";
    for (std::size_t k = 0; k < p.basis.dim(); ++k)
        os << k + 1 << ',' << mm::format17(p.basis.eigenvalues[k]) << ',' << mm::format17(p.basis.tail(k + 1)) << '\n';
    return 0;
}

int cmd_rom(const Options& o) {
    const auto cfg = effective_config(o);
    const auto p = pipeline(cfg);
    const std::size_t r = cfg.r_grid.front();
    const rom::RomSystem rs(p.disc, p.basis, r,
                            cfg.w0_mode == pod::W0Mode::zero_after_mean ? p.snapshots.mean : Vector{});
    const auto run = rom::rom_integrate(rs, cfg.q, p.fom.dt, cfg.T, rom::Bootstrap{rs.coordinates_of(p.u0)},
                                        cfg.newton);
    const std::string name = "rom_r" + std::to_string(r) + "_q" + std::to_string(cfg.q) + "_M" +
                             std::to_string(cfg.M);
    rom::write_rom_trajectory((fs::path(cfg.out_dir) / name).string(), rs, run);
    auto log = open_out(cfg, name + ".log");
    log << "newton rule " << run.newton_rule << '\n';
    for (std::size_t k = 0; k < run.newton_iterations.size(); ++k)
        log << "step " << k + static_cast<std::size_t>(cfg.q) << " newton " << run.newton_iterations[k] << '\n';
    return 0;
}

void write_r_table(const harness::RunConfig& cfg, const std::vector<harness::RTableRow>& rows, int q) {
    auto os = open_out(cfg, "errors_q" + std::to_string(q) + ".csv");
    os << "# reduced solution against P^r u_h and u_h, and projection error u_h - P^r u_h; q = " << q
       << ", M = " << cfg.M << ", max over q <= n <= M\n";
    os << "r,rom_proj_l2,rom_proj_h1,rom_proj_int_h1,rom_fom_l2,rom_fom_h1,proj_l2,proj_h1\n";
    for (const auto& row : rows)
        os << row.r << ',' << sig6(row.rom_vs_projection.max_l2) << ',' << sig6(row.rom_vs_projection.max_h1) << ','
           << sig6(row.rom_vs_projection.integrated_h1) << ',' << sig6(row.rom_vs_fom.max_l2) << ','
           << sig6(row.rom_vs_fom.max_h1) << ',' << sig6(row.projection.max_l2) << ',' << sig6(row.projection.max_h1)
           << '\n';
}

int cmd_errors(const Options& o) {
    const auto cfg = effective_config(o);
    const auto p = pipeline(cfg);
    write_r_table(cfg, harness::r_table(p, cfg.q), cfg.q);
    return 0;
}

void write_convergence(const harness::RunConfig& cfg, const harness::ConvergenceStudy& st) {
    const std::string tag = "_r" + std::to_string(st.r);
    auto os = open_out(cfg, "convergence" + tag + ".csv");
    os << "# reduced BDF-q against the BDF-5 reduced reference at T/(M_max*" << cfg.reference_refinement
       << "), r = " << st.r << '\n';
    os << "q,M,max_l2,max_h1,int_h1,start_l2,start_h1,newton_max,newton_mean,newton_mode\n";
    for (const auto& row : st.rows)
        os << row.q << ',' << row.M << ',' << sig6(row.whole.max_l2) << ',' << sig6(row.whole.max_h1) << ','
           << sig6(row.whole.integrated_h1) << ',' << sig6(row.starting.max_l2) << ','
           << sig6(row.starting.max_h1) << ',' << row.newton_max << ',' << sig6(row.newton_mean) << ','
           << row.newton_mode << '\n';

    auto ss = open_out(cfg, "convergence" + tag + "_slopes.csv");
    ss << "q,norm,lsq_slope,pairwise\n";
    for (int q = 1; q <= 5; ++q) {
        std::vector<std::pair<double, double>> l2, h1;
        for (const auto& row : st.rows)
            if (row.q == q) {
                l2.emplace_back(cfg.T / static_cast<double>(row.M), row.whole.max_l2);
                h1.emplace_back(cfg.T / static_cast<double>(row.M), row.whole.max_h1);
            }
        if (l2.size() < 3) continue;
        for (auto [name, pts] : {std::pair{"l2", &l2}, std::pair{"h1", &h1}}) {
            const auto est = harness::estimate_order(*pts);
            ss << q << ',' << name << ',' << sig6(est.slope) << ',';
            for (std::size_t k = 0; k < est.pairwise.size(); ++k) ss << (k ? ";" : "") << sig6(est.pairwise[k]);
            ss << '\n';
        }
    }
}

int cmd_convergence(const Options& o) {
    const auto cfg = effective_config(o);
    const auto qs = parse_q_list(o.q, cfg.q);
    const auto p = pipeline(cfg);
    const std::size_t r = o.r ? o.r : 10;
    write_convergence(cfg, harness::convergence_study(p, r, qs, cfg.m_grid));
    return 0;
}

int cmd_tables(const Options& o) {
    const auto cfg = effective_config(o);
    const auto& w = o.which;
    if (w != "all" && w != "r" && w != "q" && w != "starting-values")
        throw Usage("--which expects all, r, q or starting-values");
    const auto p = pipeline(cfg);
    if (w == "all" || w == "r") {
        const auto rows = harness::r_table(p, 5);
        for (int norm = 0; norm < 2; ++norm) {
            auto os = open_out(cfg, norm == 0 ? "table_r_l2.csv" : "table_r_h1.csv");
            os << "# max over q <= n <= M of the " << (norm == 0 ? "L2" : "H1-seminorm")
               << " error of the reduced solution against P^r u_h, q = 5, M = " << cfg.M << '\n';
            os << "r,q5\n";
            for (const auto& row : rows)
                os << row.r << ',' << sig6(norm == 0 ? row.rom_vs_projection.max_l2 : row.rom_vs_projection.max_h1)
                   << '\n';
        }
    }
    if (w == "all" || w == "q" || w == "starting-values") {
        const std::size_t r = o.r ? o.r : 10;
        const std::vector<int> qs = w == "starting-values" ? std::vector<int>{2, 3, 4, 5}
                                                           : std::vector<int>{1, 2, 3, 4, 5};
        const auto st = harness::convergence_study(p, r, qs, cfg.m_grid);
        auto table = [&](const std::string& file, const std::string& comment, auto pick) {
            auto os = open_out(cfg, file);
            os << "# " << comment << ", r = " << r << '\n' << "M";
            for (int q : qs) os << ",q" << q;
            os << '\n';
            for (auto m : cfg.m_grid) {
                os << m;
                for (int q : qs)
                    for (const auto& row : st.rows)
                        if (row.q == q && row.M == m) os << ',' << sig6(pick(row));
                os << '\n';
            }
        };
        if (w != "starting-values")
            table("table_q_l2.csv",
                  "max over q <= n <= M of the L2 error against the reduced reference; the source caption says L2 "
                  "while its column formula carries no norm subscript, L2 is used",
                  [](const harness::ConvergenceRow& row) { return row.whole.max_l2; });
        if (w != "q") {
            table("table_start_l2.csv", "max over 1 <= n <= q-1 of the L2 error at the starting values",
                  [](const harness::ConvergenceRow& row) { return row.starting.max_l2; });
            table("table_start_h1.csv", "max over 1 <= n <= q-1 of the H1-seminorm error at the starting values",
                  [](const harness::ConvergenceRow& row) { return row.starting.max_h1; });
        }
    }
    return 0;
}

int cmd_check(const Options&) {
    bool ok = true;
    for (const auto& line : harness::identity_checks()) {
        std::cout << (line.pass ? "PASS " : "FAIL ") << line.name << " (" << line.detail << ")\n";
        ok = ok && line.pass;
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    if (const char* env = std::getenv("PODROM_THREADS")) {
        // Runs are sequential, so any positive cap is honoured.
        char* end = nullptr;
        const long n = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || n < 1) {
            std::cerr << "podrom: PODROM_THREADS must be a positive integer\n";
            return 2;
        }
    }

    CLI::App app{"POD reduced-order models for reaction-diffusion systems"};
    app.require_subcommand(1);
    Options o;
    const std::vector<std::pair<std::string, std::string>> subs{
        {"mesh", "write the triangulation"},
        {"fom", "full-order trajectory"},
        {"pod", "full-order run and POD basis"},
        {"rom", "reduced trajectory with Newton counts"},
        {"errors", "reduced against projected full-order errors over the r grid"},
        {"convergence", "temporal convergence sweep over the M grid"},
        {"tables", "error tables over r, q and starting values"},
        {"check", "coefficient, tail and orthonormality identities"}};
    for (const auto& [name, help] : subs) {
        auto* s = app.add_subcommand(name, help);
        s->add_option("--config", o.config, "key = value file");
        s->add_option("--out", o.out, "output directory");
        s->add_option("--q", o.q, "BDF order, A..B or list for convergence");
        s->add_option("--r", o.r, "reduced dimension");
        s->add_option("--M", o.M, "number of time steps");
        if (name == "tables") s->add_option("--which", o.which, "all, r, q or starting-values");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const std::string cmd = app.get_subcommands().front()->get_name();
    try {
        if (cmd == "mesh") return cmd_mesh(o);
        if (cmd == "fom") return cmd_fom(o);
        if (cmd == "pod") return cmd_pod(o);
        if (cmd == "rom") return cmd_rom(o);
        if (cmd == "errors") return cmd_errors(o);
        if (cmd == "convergence") return cmd_convergence(o);
        if (cmd == "tables") return cmd_tables(o);
        return cmd_check(o);
    } catch (const Usage& e) {
        std::cerr << "podrom: " << e.what() << '\n';
        return 2;
    } catch (const NonConvergence& e) {
        std::cerr << "podrom: " << e.what() << " (step " << e.step() << ", residual " << e.residual() << ")\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "podrom: " << e.what() << '\n';
        return 1;
    }
}
