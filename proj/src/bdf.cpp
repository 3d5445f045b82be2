#include "podrom/bdf.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "podrom/error.hpp"

namespace podrom::bdf {

Rational::Rational(std::int64_t n, std::int64_t d) {
    if (d == 0) throw InvalidInput("Rational: zero denominator");
    if (d < 0) {
        n = -n;
        d = -d;
    }
    const auto g = std::gcd(n, d);
    num = g ? n / g : 0;
    den = g ? d / g : 1;
}

Rational operator+(Rational a, Rational b) { return {a.num * b.den + b.num * a.den, a.den * b.den}; }
Rational operator-(Rational a, Rational b) { return {a.num * b.den - b.num * a.den, a.den * b.den}; }
Rational operator*(Rational a, Rational b) { return {a.num * b.num, a.den * b.den}; }

namespace {

std::int64_t binomial(int n, int k) {
    std::int64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

void check_states(const BdfScheme& s, std::span<const Vector> states, double dt) {
    if (states.size() != static_cast<std::size_t>(s.q) + 1)
        throw InvalidInput("bdf_apply: expected q+1 states, got " + std::to_string(states.size()));
    if (!(dt > 0.0)) throw InvalidInput("bdf_apply: dt must be positive");
    for (const auto& v : states)
        if (v.size() != states[0].size()) throw InvalidInput("bdf_apply: dimension mismatch");
}

}  // namespace

BdfScheme bdf_coefficients(int q) {
    if (q < 1 || q > 5) throw UnsupportedOrder("BDF order " + std::to_string(q) + " unsupported (1..5)");
    static constexpr double eta_table[] = {0.0, 0.0, 0.0769, 0.2878, 0.8097};
    BdfScheme s;
    s.q = q;
    s.eta = eta_table[q - 1];
    s.delta.assign(static_cast<std::size_t>(q) + 1, Rational(0));
    for (int l = 1; l <= q; ++l)
        for (int i = 0; i <= l; ++i) {
            const std::int64_t sign = (i % 2 == 0) ? 1 : -1;
            s.delta[static_cast<std::size_t>(i)] = s.delta[static_cast<std::size_t>(i)] + Rational(sign * binomial(l, i), l);
        }
    s.alpha.resize(static_cast<std::size_t>(q));
    Rational partial(0);
    for (int j = 0; j < q - 1; ++j) {
        partial = partial + s.delta[static_cast<std::size_t>(j)];
        s.alpha[static_cast<std::size_t>(j)] = partial;
    }
    s.alpha[static_cast<std::size_t>(q) - 1] = -s.delta[static_cast<std::size_t>(q)];
    return s;
}

Vector bdf_apply(const BdfScheme& s, std::span<const Vector> states, double dt) {
    check_states(s, states, dt);
    Vector out(states[0].size(), 0.0);
    for (int i = 0; i <= s.q; ++i) axpy(s.delta_at(i) / dt, states[static_cast<std::size_t>(i)], out);
    return out;
}

Vector bdf_apply_as_differences(const BdfScheme& s, std::span<const Vector> states, double dt) {
    check_states(s, states, dt);
    const std::size_t n = states[0].size();
    Vector out(n, 0.0);
    for (int j = 0; j < s.q; ++j) {
        const double a = s.alpha_at(j) / dt;
        const auto& newer = states[static_cast<std::size_t>(j)];
        const auto& older = states[static_cast<std::size_t>(j) + 1];
        for (std::size_t k = 0; k < n; ++k) out[k] += a * (newer[k] - older[k]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Starting values

namespace {

void append_plan(int q, double dt, std::size_t base_divisor, std::vector<BootstrapStage>& out) {
    if (q == 1) return;
    if (q == 2) {
        out.push_back({1, dt, 1, base_divisor});
        return;
    }
    const double target = std::pow(dt, static_cast<double>(q) / static_cast<double>(q - 1));
    const auto k = static_cast<std::size_t>(std::ceil(dt / target - 1e-9));
    const double h = dt / static_cast<double>(k);
    append_plan(q - 1, h, base_divisor * k, out);
    out.push_back({q - 1, h, static_cast<std::size_t>(q - 1) * k - static_cast<std::size_t>(q - 2), base_divisor * k});
}

}  // namespace

std::vector<BootstrapStage> bootstrap_plan(int q, double dt) {
    if (q < 1 || q > 5) throw UnsupportedOrder("bootstrap_plan: order " + std::to_string(q) + " unsupported");
    if (!(dt > 0.0) || !(dt < 1.0)) throw InvalidInput("bootstrap_plan: dt must lie in (0, 1)");
    std::vector<BootstrapStage> plan;
    append_plan(q, dt, 1, plan);
    // Recompute steps from the outer dt so every stage lands exactly on the grid.
    for (auto& st : plan) st.step = dt / static_cast<double>(st.divisor);
    return plan;
}

std::vector<Vector> starting_values(int q, double dt, const Vector& u0, const Stepper& stepper) {
    const auto plan = bootstrap_plan(q, dt);
    std::vector<Vector> grid{u0};
    std::size_t divisor = plan.empty() ? 1 : plan.front().divisor;
    for (const auto& stage : plan) {
        if (stage.divisor != divisor) {
            const std::size_t stride = divisor / stage.divisor;
            std::vector<Vector> coarse;
            for (std::size_t i = 0; i < grid.size(); i += stride) coarse.push_back(std::move(grid[i]));
            grid = std::move(coarse);
            divisor = stage.divisor;
        }
        for (std::size_t c = 0; c < stage.count; ++c) {
            std::vector<Vector> hist;
            for (int k = 0; k < stage.order; ++k) hist.push_back(grid[grid.size() - 1 - static_cast<std::size_t>(k)]);
            const double t_new = static_cast<double>(grid.size()) * dt / static_cast<double>(divisor);
            grid.push_back(stepper(stage.order, stage.step, hist, t_new));
        }
    }
    std::vector<Vector> out;
    for (int j = 0; j < q; ++j) out.push_back(grid.at(static_cast<std::size_t>(j) * divisor));
    return out;
}

// ---------------------------------------------------------------------------
// History and Newton

void History::push(long index, Vector state) {
    if (!states_.empty() && index != newest_ + 1) throw InvalidInput("History: time indices must be consecutive");
    if (!states_.empty() && state.size() != states_.front().size()) throw InvalidInput("History: dimension mismatch");
    newest_ = index;
    states_.push_front(std::move(state));
    while (states_.size() > depth_) states_.pop_back();
}

Vector extrapolate(const History& h) {
    if (h.size() == 0) throw InvalidInput("extrapolate: empty history");
    const int k = static_cast<int>(h.size());
    Vector out(h.state(0).size(), 0.0);
    for (int j = 1; j <= k; ++j) {
        const double c = ((j % 2 == 1) ? 1.0 : -1.0) * static_cast<double>(binomial(k, j));
        axpy(c, h.state(static_cast<std::size_t>(j) - 1), out);
    }
    return out;
}

StepResult implicit_step(const History& history, const ResidualFn& residual, const CorrectionFn& correction,
                         const NewtonConfig& cfg) {
    if (!(cfg.tol > 0.0) || cfg.max_iter < 1) throw InvalidInput("NewtonConfig: tol > 0 and max_iter >= 1 required");
    if (history.size() == 0) throw InvalidInput("implicit_step: empty history");
    Vector x = cfg.predictor == Predictor::local_extrapolation ? extrapolate(history) : history.state(0);
    const double eps = std::numeric_limits<double>::epsilon();
    bool done = false;
    for (std::size_t it = 0;; ++it) {
        const Vector r = residual(x);
        const double rn = norm2(r);
        if (!std::isfinite(rn)) throw NonConvergence("Newton: non-finite residual", rn);
        if (it >= 1 && (done || (cfg.stop == StopRule::residual && rn <= cfg.tol))) return {std::move(x), it, rn};
        if (it == cfg.max_iter) throw NonConvergence("Newton: max_iter exceeded", rn);
        const Vector d = correction(x, r);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] -= d[i];
        const double dn = norm2(d);
        done = dn <= 16.0 * eps * std::max(norm2(x), eps) || (cfg.stop == StopRule::increment && dn <= cfg.tol);
        if (done && cfg.stop == StopRule::increment) return {std::move(x), it + 1, rn};
    }
}

StepResult implicit_step(const History& history, const ResidualFn& residual, const JacobianFn& jacobian,
                         const NewtonConfig& cfg) {
    return implicit_step(
        history, residual, [&](const Vector& x, const Vector& r) { return dense_lu_solve(jacobian(x), r); }, cfg);
}

}  // namespace podrom::bdf
