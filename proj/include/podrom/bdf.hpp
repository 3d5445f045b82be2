#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "podrom/linalg.hpp"

namespace podrom::bdf {

/// Exact rational with a positive, reduced denominator.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Rational() = default;
    Rational(std::int64_t n, std::int64_t d = 1);

    double to_double() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
    friend Rational operator+(Rational a, Rational b);
    friend Rational operator-(Rational a, Rational b);
    friend Rational operator*(Rational a, Rational b);
    friend Rational operator-(Rational a) { return {-a.num, a.den}; }
    friend bool operator==(const Rational&, const Rational&) = default;
};

/// Coefficients of the q-step backward differentiation formula
///   d_q u^n = (1/dt) sum_{i=0}^{q} delta_i u^{n-i}
/// and the weights of its rewrite as first differences
///   d_q u^n = (1/dt) sum_{j=0}^{q-1} alpha_j (u^{n-j} - u^{n-j-1}).
struct BdfScheme {
    int q = 1;
    std::vector<Rational> delta;  ///< q+1 entries
    std::vector<Rational> alpha;  ///< q entries
    double eta = 0.0;             ///< Nevanlinna-Odeh multiplier, 4 significant digits

    double delta_at(int i) const { return delta.at(static_cast<std::size_t>(i)).to_double(); }
    double alpha_at(int j) const { return alpha.at(static_cast<std::size_t>(j)).to_double(); }
};

/// delta from the expansion of sum_{l=1}^{q} (1/l)(1 - z)^l. Throws UnsupportedOrder outside 1..5.
BdfScheme bdf_coefficients(int q);

/// `states` holds u^n, u^{n-1}, ..., u^{n-q} (newest first).
Vector bdf_apply(const BdfScheme& scheme, std::span<const Vector> states, double dt);
Vector bdf_apply_as_differences(const BdfScheme& scheme, std::span<const Vector> states, double dt);

/// One stage of a starting-value computation: `count` steps of the order-`order`
/// formula with step `step` = dt / `divisor`, continuing from the previous stage.
struct BootstrapStage {
    int order = 1;
    double step = 0.0;
    std::size_t count = 0;
    std::size_t divisor = 1;

    bool operator==(const BootstrapStage&) const = default;
};

/// Stages that produce u^1..u^{q-1} on the grid of step dt. For q >= 3 the
/// order-(q-1) formula runs at dt' = dt / ceil(dt / dt^{q/(q-1)}), itself
/// started recursively; for q = 2 a single backward Euler step is used.
std::vector<BootstrapStage> bootstrap_plan(int q, double dt);

/// Advances one step of the given order. `history` is newest first (order states),
/// `t_new` the time of the state being computed.
using Stepper = std::function<Vector(int order, double step, std::span<const Vector> history, double t_new)>;

/// Executes bootstrap_plan(q, dt) from u0; returns u^0..u^{q-1}.
std::vector<Vector> starting_values(int q, double dt, const Vector& u0, const Stepper& stepper);

/// The most recent `depth` states with consecutive time indices.
class History {
public:
    explicit History(std::size_t depth) : depth_(depth) {}

    /// Appends the state at `index`; it must follow the newest stored index.
    void push(long index, Vector state);
    std::size_t depth() const noexcept { return depth_; }
    std::size_t size() const noexcept { return states_.size(); }
    /// 0 = newest.
    const Vector& state(std::size_t age) const { return states_.at(age); }
    long newest_index() const noexcept { return newest_; }
    std::vector<Vector> newest_first() const { return {states_.begin(), states_.end()}; }

private:
    std::size_t depth_;
    long newest_ = -1;
    std::deque<Vector> states_;  // front = newest
};

enum class Predictor { previous, local_extrapolation };

/// residual: stop when ||F(x)||_2 <= tol. increment: stop when the last correction has ||dx||_2 <= tol.
enum class StopRule { residual, increment };

struct NewtonConfig {
    double tol = 1e-10;
    std::size_t max_iter = 20;
    Predictor predictor = Predictor::local_extrapolation;
    StopRule stop = StopRule::residual;
};

struct StepResult {
    Vector solution;
    std::size_t newton_iterations = 0;
    double residual_norm = 0.0;  ///< at the last point where F was evaluated
};

using ResidualFn = std::function<Vector(const Vector& candidate)>;
using JacobianFn = std::function<DenseMatrix(const Vector& candidate)>;
/// Returns J(candidate)^{-1} residual.
using CorrectionFn = std::function<Vector(const Vector& candidate, const Vector& residual)>;

/// Degree-(k-1) extrapolation through the k stored states to the next time level.
Vector extrapolate(const History& history);

/// Newton iteration for the implicit BDF equation residual(u^n) = 0.
///
/// At least one correction is always applied, and the count returned is the
/// number of corrections. Convergence follows cfg.stop, or a correction at
/// roundoff level relative to the iterate (tolerance below the attainable floor).
StepResult implicit_step(const History& history, const ResidualFn& residual, const CorrectionFn& correction,
                         const NewtonConfig& cfg);
StepResult implicit_step(const History& history, const ResidualFn& residual, const JacobianFn& jacobian,
                         const NewtonConfig& cfg);

}  // namespace podrom::bdf
