#ifndef ARMSIM_INTEGRATE_HPP
#define ARMSIM_INTEGRATE_HPP

#include <chrono>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "errors.hpp"

namespace armsim {

/// Explicit-Euler stability limit dt_exp = 2 / lambda_max for the scalar heat
/// problem, with lambda_max = 4 fo / dx*^2.
inline double max_stable_dt(double fo, double dx_star) {
    if (!(fo > 0.0) || !(dx_star > 0.0)) {
        throw ConfigError("stability limit needs positive fo and dx");
    }
    return dx_star * dx_star / (2.0 * fo);
}

/// Super-time-step bound for s stages: dt_super <= (s^2 + s)/2 * dt_exp.
inline double super_time_step(int n_stages, double dt_exp) {
    if (n_stages < 1) throw ConfigError("stage count must be >= 1");
    const double s = static_cast<double>(n_stages);
    return 0.5 * (s * s + s) * dt_exp;
}

/// Smallest stage count whose super-step bound covers dt_super.
/// Throws when the cap cannot reach it, naming the achievable limit.
inline int rkl1_required_stages(double dt_super, double dt_exp, int max_stages = 1000) {
    if (!(dt_super > 0.0) || !(dt_exp > 0.0)) {
        throw ConfigError("stage selection needs positive dt_super and dt_exp");
    }
    // s^2 + s - 2 dt_super/dt_exp >= 0
    const double q = 2.0 * dt_super / dt_exp;
    int s = static_cast<int>(std::ceil(0.5 * (-1.0 + std::sqrt(1.0 + 4.0 * q))));
    if (s < 1) s = 1;
    while (super_time_step(s, dt_exp) < dt_super) ++s; // round-off guard
    if (s > max_stages) {
        throw ConfigError("requested step " + std::to_string(dt_super) +
                          " exceeds the reachable super-step " +
                          std::to_string(super_time_step(max_stages, dt_exp)) + " at the " +
                          std::to_string(max_stages) + "-stage cap");
    }
    return s;
}

/// A chosen super-step: stage count plus the step it advances.
struct StsSpec {
    int n_stages = 1;
    double dt_super = 0.0;

    void validate(double dt_exp) const {
        if (n_stages < 1) throw ConfigError("stage count must be >= 1");
        if (!(dt_super > 0.0)) throw ConfigError("super-step must be positive");
        if (dt_super > super_time_step(n_stages, dt_exp) * (1.0 + 1e-12)) {
            throw ConfigError("super-step " + std::to_string(dt_super) +
                              " exceeds the " + std::to_string(n_stages) + "-stage bound " +
                              std::to_string(super_time_step(n_stages, dt_exp)));
        }
    }
};

// State-vector operations for the steppers. Overload these for new state types.
inline void state_lincomb(Field& out, double a, const Field& x, double b, const Field& y,
                          double c, const Field& f) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x[i] + b * y[i] + c * f[i];
}
inline void state_axpy(Field& out, const Field& x, double c, const Field& f) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + c * f[i];
}
inline bool state_finite(const Field& f) { return all_finite(f); }

/// One forward-Euler step. The caller owns stability: dt should not exceed
/// the explicit limit when that matters.
template <class State, class Rhs>
State euler_step(Rhs&& rhs, const State& state, double t, double dt) {
    State f = state;
    rhs(state, t, f);
    State out = state;
    state_axpy(out, state, dt, f);
    if (!state_finite(out)) throw DivergedError("non-finite state after Euler step at t=" + std::to_string(t));
    return out;
}

/// One RKL1 super-step of `n_stages` stages over dt_super. The right-hand
/// side is evaluated with time frozen at the macro-step start for every
/// stage. Stage recurrence:
///   Y_0 = u,  Y_1 = Y_0 + mu1_t dt F(Y_0)
///   Y_j = mu_j Y_{j-1} + nu_j Y_{j-2} + mut_j dt F(Y_{j-1}),  j = 2..s
/// with mu_j = (2j-1)/j, nu_j = (1-j)/j, mut_j = mu_j * 2/(s^2+s).
template <class State, class Rhs>
State rkl1_step(Rhs&& rhs, const State& state, double t, double dt_super, int n_stages) {
    if (n_stages < 1) throw ConfigError("stage count must be >= 1");
    const double s = static_cast<double>(n_stages);
    const double mu1_t = 2.0 / (s * s + s);

    State f = state;
    rhs(state, t, f);
    State y_prev2 = state;           // Y_0
    State y_prev = state;            // Y_1
    state_axpy(y_prev, state, mu1_t * dt_super, f);
    if (!state_finite(y_prev)) {
        throw DivergedError("non-finite state in stage 1 of " + std::to_string(n_stages) +
                            " at t=" + std::to_string(t));
    }
    if (n_stages == 1) return y_prev;

    State y_cur = state;
    for (int j = 2; j <= n_stages; ++j) {
        const double jd = static_cast<double>(j);
        const double mu_j = (2.0 * jd - 1.0) / jd;
        const double nu_j = (1.0 - jd) / jd;
        const double mut_j = mu_j * 2.0 / (s * s + s);
        rhs(y_prev, t, f);
        state_lincomb(y_cur, mu_j, y_prev, nu_j, y_prev2, mut_j * dt_super, f);
        if (!state_finite(y_cur)) {
            throw DivergedError("non-finite state in stage " + std::to_string(j) + " of " +
                                std::to_string(n_stages) + " at t=" + std::to_string(t));
        }
        std::swap(y_prev2, y_prev);
        std::swap(y_prev, y_cur);
    }
    return y_prev;
}

enum class StepperKind { Euler, Rkl1 };

/// Stepper choice for a run. dt_exp_star is the explicit limit of the problem
/// being integrated; Rkl1 picks its stage count from it per macro step.
struct StepperSpec {
    StepperKind kind = StepperKind::Rkl1;
    double dt_exp_star = 0.0;
    int max_stages = 1000;
};

/// Time series of states at snapshot instants.
template <class State>
struct Trajectory {
    std::vector<double> times;
    std::vector<State> states;
    double wall_time_s = 0.0;

    const State& at(std::size_t i) const { return states[i]; }
    std::size_t size() const { return times.size(); }
};

struct NoHook {
    template <class State>
    void operator()(State&, double) const {}
};

/// March from t0 to t_end in macro steps of dt_macro (last step shortened to
/// land on t_end exactly), snapshotting every `output_stride` steps plus the
/// final state. `post_step` runs on the initial state and after every step;
/// Dirichlet problems use it to pin boundary nodes to their signals.
template <class State, class Rhs, class Hook = NoHook>
Trajectory<State> integrate(Rhs&& rhs, State initial, double t0, double t_end, double dt_macro,
                            const StepperSpec& stepper, std::size_t output_stride = 1,
                            Hook&& post_step = Hook{}) {
    if (!(t_end >= t0)) throw ConfigError("integration span must be non-negative");
    if (!(dt_macro > 0.0)) throw ConfigError("macro step must be positive");
    if (output_stride == 0) throw ConfigError("output stride must be >= 1");

    int n_stages = 1;
    if (stepper.kind == StepperKind::Rkl1) {
        n_stages = rkl1_required_stages(dt_macro, stepper.dt_exp_star, stepper.max_stages);
    }

    Trajectory<State> traj;
    const auto t_begin = std::chrono::steady_clock::now();

    post_step(initial, t0);
    traj.times.push_back(t0);
    traj.states.push_back(initial);
    if (t_end == t0) {
        traj.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
        return traj;
    }

    const double span = t_end - t0;
    auto n_steps = static_cast<std::size_t>(std::ceil(span / dt_macro - 1e-12));
    State state = std::move(initial);
    for (std::size_t i = 0; i < n_steps; ++i) {
        const double t_cur = t0 + static_cast<double>(i) * dt_macro;
        const double t_next = (i + 1 == n_steps) ? t_end : t0 + static_cast<double>(i + 1) * dt_macro;
        const double dt = t_next - t_cur;
        if (stepper.kind == StepperKind::Euler) {
            state = euler_step(rhs, state, t_cur, dt);
        } else {
            // A shortened final step keeps the nominal stage count; smaller
            // steps only move further inside the stability region.
            state = rkl1_step(rhs, state, t_cur, dt, n_stages);
        }
        post_step(state, t_next);
        if ((i + 1) % output_stride == 0 || i + 1 == n_steps) {
            traj.times.push_back(t_next);
            traj.states.push_back(state);
        }
    }
    traj.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
    return traj;
}

} // namespace armsim

#endif
