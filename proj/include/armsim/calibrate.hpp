#ifndef ARMSIM_CALIBRATE_HPP
#define ARMSIM_CALIBRATE_HPP

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "analysis.hpp"
#include "core.hpp"
#include "empirical.hpp"
#include "errors.hpp"
#include "integrate.hpp"
#include "physics_heat.hpp"
#include "physics_hm.hpp"
#include "signal.hpp"

namespace armsim {

/// Objective value assigned to a run that blows up, large enough that the
/// optimizer retreats but still finite.
inline constexpr double kDivergedPenalty = 1e6;

struct LmOptions {
    double lambda0 = 1e-3;
    double lambda_up = 10.0;
    double lambda_down = 0.1;
    double lambda_cap = 1e14;
    double rel_obj_tol = 1e-8;
    double step_tol = 1e-10;
    std::size_t max_iters = 100;
    double param_bound = 1e3;
    double fd_rel = 1e-6;
    double fd_abs = 1e-8;
};

struct LmReport {
    std::vector<double> params;
    double objective = kDivergedPenalty; ///< 2-norm of the final residual
    std::size_t n_iters = 0;
    bool converged = false;
    bool bounds_hit = false;
    double grad_inf = std::numeric_limits<double>::infinity();
    std::string stop_reason = "not_run";
    std::vector<double> accepted_objectives; ///< monotone by construction
};

namespace detail {

/// Gaussian elimination with partial pivoting; false on a singular system.
inline bool solve_dense(std::vector<std::vector<double>> a, std::vector<double> b,
                        std::vector<double>& x) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        }
        if (std::abs(a[piv][col]) < 1e-300) return false;
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    x.assign(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
        x[i] = s / a[i][i];
    }
    for (double v : x) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

inline double norm2(const std::vector<double>& r) {
    double s = 0.0;
    for (double v : r) s += v * v;
    return std::sqrt(s);
}

/// Deterministic per-cell seed derived from the base seed (splitmix-style).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (a + 1) + 0xbf58476d1ce4e5b9ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace detail

/// Damped Gauss-Newton on a residual vector. `residual_fn(p)` returns the
/// per-sample residuals; a DivergedError or ConfigError from it marks the
/// trial point as untenable (penalty objective). Frozen parameters (mask
/// false) are never moved. Steps are projected onto |p_k| <= param_bound.
template <class ResidualFn>
LmReport levenberg_marquardt(ResidualFn&& residual_fn, const std::vector<double>& start,
                             const LmOptions& opt = {}, const std::vector<char>& free_mask = {}) {
    const std::size_t n_params = start.size();
    std::vector<char> mask = free_mask.empty() ? std::vector<char>(n_params, 1) : free_mask;
    if (mask.size() != n_params) throw ConfigError("free mask length does not match parameters");

    LmReport rep;
    rep.params = start;
    for (std::size_t k = 0; k < n_params; ++k) {
        if (std::abs(rep.params[k]) > opt.param_bound) {
            rep.params[k] = std::clamp(rep.params[k], -opt.param_bound, opt.param_bound);
            rep.bounds_hit = true;
        }
    }

    auto eval = [&](const std::vector<double>& p, std::vector<double>& r) -> double {
        try {
            r = residual_fn(p);
        } catch (const DivergedError&) {
            r.clear();
            return kDivergedPenalty;
        } catch (const ConfigError&) {
            r.clear();
            return kDivergedPenalty;
        }
        const double nrm = detail::norm2(r);
        return std::isfinite(nrm) ? nrm : kDivergedPenalty;
    };

    std::vector<double> r;
    double obj = eval(rep.params, r);
    rep.objective = obj;
    rep.accepted_objectives.push_back(obj);
    if (r.empty()) {
        rep.stop_reason = "diverged_start";
        return rep;
    }
    const std::size_t m = r.size();

    double lambda = opt.lambda0;
    std::vector<std::size_t> free_idx;
    for (std::size_t k = 0; k < n_params; ++k) {
        if (mask[k]) free_idx.push_back(k);
    }
    if (free_idx.empty()) {
        rep.converged = true;
        rep.stop_reason = "all_frozen";
        return rep;
    }
    const std::size_t nf = free_idx.size();

    for (rep.n_iters = 1; rep.n_iters <= opt.max_iters; ++rep.n_iters) {
        // Forward-difference Jacobian over the free parameters. A diverged
        // probe contributes a zero column; damping covers that direction.
        std::vector<std::vector<double>> jac(m, std::vector<double>(nf, 0.0));
        for (std::size_t c = 0; c < nf; ++c) {
            const std::size_t k = free_idx[c];
            const double h = std::max(opt.fd_rel * std::abs(rep.params[k]), opt.fd_abs);
            std::vector<double> probe = rep.params;
            probe[k] += h;
            std::vector<double> r_probe;
            if (eval(probe, r_probe) >= kDivergedPenalty || r_probe.size() != m) continue;
            for (std::size_t i = 0; i < m; ++i) jac[i][c] = (r_probe[i] - r[i]) / h;
        }

        std::vector<std::vector<double>> jtj(nf, std::vector<double>(nf, 0.0));
        std::vector<double> jtr(nf, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t a = 0; a < nf; ++a) {
                jtr[a] += jac[i][a] * r[i];
                for (std::size_t b = a; b < nf; ++b) jtj[a][b] += jac[i][a] * jac[i][b];
            }
        }
        for (std::size_t a = 0; a < nf; ++a) {
            for (std::size_t b = 0; b < a; ++b) jtj[a][b] = jtj[b][a];
        }
        rep.grad_inf = 0.0;
        for (double g : jtr) rep.grad_inf = std::max(rep.grad_inf, std::abs(g));

        bool accepted = false;
        while (lambda <= opt.lambda_cap) {
            auto damped = jtj;
            for (std::size_t a = 0; a < nf; ++a) damped[a][a] = jtj[a][a] + lambda;
            std::vector<double> delta;
            if (!detail::solve_dense(damped, jtr, delta)) {
                lambda *= opt.lambda_up;
                continue;
            }
            std::vector<double> trial = rep.params;
            double step_norm = 0.0;
            bool projected = false;
            for (std::size_t c = 0; c < nf; ++c) {
                const std::size_t k = free_idx[c];
                trial[k] -= delta[c];
                if (std::abs(trial[k]) > opt.param_bound) {
                    trial[k] = std::clamp(trial[k], -opt.param_bound, opt.param_bound);
                    projected = true;
                }
                const double moved = trial[k] - rep.params[k];
                step_norm += moved * moved;
            }
            step_norm = std::sqrt(step_norm);

            std::vector<double> r_trial;
            const double obj_trial = eval(trial, r_trial);
            if (obj_trial < obj && !r_trial.empty()) {
                const double rel_drop = (obj - obj_trial) / std::max(obj, 1e-300);
                rep.params = std::move(trial);
                r = std::move(r_trial);
                obj = obj_trial;
                rep.objective = obj;
                rep.accepted_objectives.push_back(obj);
                rep.bounds_hit = rep.bounds_hit || projected;
                lambda *= opt.lambda_down;
                accepted = true;
                if (rel_drop < opt.rel_obj_tol) {
                    rep.converged = true;
                    rep.stop_reason = "rel_objective";
                    return rep;
                }
                if (step_norm < opt.step_tol) {
                    rep.converged = true;
                    rep.stop_reason = "step_norm";
                    return rep;
                }
                break;
            }
            lambda *= opt.lambda_up;
            if (step_norm < opt.step_tol) {
                rep.converged = true;
                rep.stop_reason = "step_norm";
                return rep;
            }
        }
        if (!accepted) {
            rep.stop_reason = "stalled";
            return rep;
        }
    }
    rep.n_iters = opt.max_iters;
    rep.stop_reason = "max_iters";
    return rep;
}

/// Documented initial-guess set: one fixed base point per kind plus seeded
/// uniform draws from a per-kind box (kept well inside the +-1e3 bounds so
/// the exponential profiles start finite).
inline std::vector<std::vector<double>> default_starts(FluctuationKind kind, std::size_t n_starts,
                                                       std::uint64_t seed) {
    std::vector<std::vector<double>> starts;
    std::vector<double> base;
    std::vector<std::pair<double, double>> box;
    switch (kind) {
        case FluctuationKind::HeatI:
            base = {0.01, 1.0};
            box = {{-0.5, 0.5}, {0.5, 5.0}};
            break;
        case FluctuationKind::HeatII:
        case FluctuationKind::HmUII:
            base = {0.0, 1.0};
            box = {{-1.0, 1.0}, {0.5, 5.0}};
            break;
        case FluctuationKind::HmV:
        case FluctuationKind::HmUI:
            base = {0.01, 0.01, 0.01, 0.5};
            box = {{-0.1, 0.1}, {-0.1, 0.1}, {-0.1, 0.1}, {0.1, 2.0}};
            break;
        case FluctuationKind::HmUIII:
            base = {0.01, 0.0, 1.0, -0.01, 0.0, 1.0};
            box = {{-0.1, 0.1}, {0.0, 0.0}, {0.5, 5.0}, {-0.1, 0.1}, {0.0, 0.0}, {0.5, 5.0}};
            break;
    }
    starts.push_back(base);
    std::mt19937_64 rng(seed);
    while (starts.size() < n_starts) {
        std::vector<double> draw(base.size());
        for (std::size_t k = 0; k < base.size(); ++k) {
            std::uniform_real_distribution<double> dist(box[k].first, box[k].second);
            draw[k] = (box[k].first == box[k].second) ? box[k].first : dist(rng);
        }
        starts.push_back(std::move(draw));
    }
    return starts;
}

/// Free-parameter mask: positions held fixed during calibration (the two
/// exponential centers of the six-parameter profile stay at zero).
inline std::vector<char> free_mask_for(FluctuationKind kind) {
    std::vector<char> mask(param_count(kind), 1);
    if (kind == FluctuationKind::HmUIII) {
        mask[1] = 0;
        mask[4] = 0;
    }
    return mask;
}

struct HeatCalibrationProblem {
    HeatConfig config;           ///< native-signal configuration
    Field initial;
    Trajectory<Field> reference; ///< complete-model run covering at least t1
    std::vector<double> tau_list;
    std::vector<FluctuationKind> kinds;
    double t1_star = 120.0;
    double dt_macro_star = 1.0;
    int max_stages = 1000;
    std::size_t output_stride = 1;
    std::uint64_t seed = 1;
    unsigned jobs = 1;
    std::size_t n_starts = 5;
    double multistart_early_stop = 1e-12;
    std::vector<std::size_t> sensor_nodes; ///< empty = full field
    LmOptions lm;
};

struct HmKindPair {
    FluctuationKind u_kind = FluctuationKind::HmUII;
    FluctuationKind v_kind = FluctuationKind::HmV;
};

struct HmCalibrationProblem {
    HmConfig config;
    HmState initial;
    Trajectory<HmState> reference;
    std::vector<double> tau_list;
    std::vector<HmKindPair> pairs;
    double t1_star = 240.0;
    double dt_macro_star = 1.0;
    int max_stages = 1000;
    std::size_t output_stride = 1;
    std::uint64_t seed = 1;
    unsigned jobs = 1;
    std::size_t n_starts = 5;
    double multistart_early_stop = 1e-12;
    std::vector<std::size_t> sensor_nodes;
    LmOptions lm;
};

/// One (tau, candidate) entry of the calibration table.
struct CalibrationCell {
    double tau_star = 0.0;
    std::string label;
    std::vector<double> params;
    double eps2 = kDivergedPenalty;   ///< heat: residual norm; HM: weighted sum
    double eps2_u = 0.0;
    double eps2_v = 0.0;
    std::size_t n_iters = 0;
    bool converged = false;
    bool bounds_hit = false;
    double wall_arm_s = 0.0;
    double arm_s_per_day = 0.0;
    double rho_cpu_pct = 0.0;
};

struct CalibrationResult {
    std::vector<CalibrationCell> cells;
    double cm_s_per_day = 0.0;
    double wall_total_s = 0.0;
};

namespace detail {

inline std::vector<std::size_t> reference_window(const std::vector<double>& times, double t1) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] <= t1 + 1e-9) idx.push_back(i);
    }
    if (idx.size() < 2) throw ConfigError("reference trajectory has too few instants before t1");
    return idx;
}

inline std::vector<std::size_t> node_selection(const std::vector<std::size_t>& sensors,
                                               std::size_t n_nodes) {
    if (sensors.empty()) {
        std::vector<std::size_t> all(n_nodes);
        for (std::size_t j = 0; j < n_nodes; ++j) all[j] = j;
        return all;
    }
    for (std::size_t j : sensors) {
        if (j >= n_nodes) throw ConfigError("sensor node index out of range");
    }
    return sensors;
}

/// Run cell jobs in parallel; each cell writes only its own slot.
template <class Fn>
void run_cells(std::size_t n_cells, unsigned jobs, Fn&& fn) {
    if (jobs <= 1 || n_cells <= 1) {
        for (std::size_t i = 0; i < n_cells; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    const unsigned n_threads = std::min<unsigned>(jobs, static_cast<unsigned>(n_cells));
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n_cells) return;
                fn(i);
            }
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace detail

/// Residual of the reconstructed reduced solution against the reference at
/// the reference instants up to t1, ordered time-major then node.
inline std::vector<double> heat_arm_residual(const HeatCalibrationProblem& prob,
                                             const HeatConfig& avg_cfg, double tau,
                                             const std::vector<double>& params,
                                             FluctuationKind kind,
                                             const std::vector<std::size_t>& window,
                                             const std::vector<std::size_t>& nodes,
                                             double* wall_s = nullptr) {
    FluctuationModel model{kind, params, tau};
    model.validate();
    HeatArmRhs rhs(avg_cfg, model);
    StepperSpec stepper{StepperKind::Rkl1, avg_cfg.dt_exp(), prob.max_stages};
    const auto traj = integrate(rhs, prob.initial, 0.0, prob.t1_star, prob.dt_macro_star, stepper,
                                prob.output_stride);
    if (wall_s) *wall_s = traj.wall_time_s;
    std::vector<double> r;
    r.reserve(window.size() * nodes.size());
    for (std::size_t i : window) {
        const double t = prob.reference.times[i];
        const Field bar = detail::interp_state(traj, std::clamp(t, traj.times.front(), traj.times.back()));
        const Field recon = reconstruct(bar, model, avg_cfg.grid, t);
        for (std::size_t j : nodes) r.push_back(prob.reference.states[i][j] - recon[j]);
    }
    return r;
}

inline HeatConfig averaged_heat_config(const HeatConfig& cfg, double tau) {
    HeatConfig avg = cfg;
    AveragingSpec spec{tau};
    avg.bc.left_temp = block_average(cfg.bc.left_temp, spec);
    avg.bc.right_temp = block_average(cfg.bc.right_temp, spec);
    if (cfg.alpha != 0.0) avg.bc.radiation = block_average(cfg.bc.radiation, spec);
    return avg;
}

inline CalibrationResult offline_calibrate(const HeatCalibrationProblem& prob) {
    if (prob.tau_list.empty() || prob.kinds.empty()) {
        throw ConfigError("calibration needs at least one tau and one candidate");
    }
    if (prob.reference.size() == 0) throw ConfigError("calibration needs a reference trajectory");
    if (prob.reference.times.back() + 1e-9 < prob.t1_star) {
        throw ConfigError("reference trajectory ends before the offline horizon");
    }
    const auto t_begin = std::chrono::steady_clock::now();
    const auto window = detail::reference_window(prob.reference.times, prob.t1_star);
    const auto nodes = detail::node_selection(prob.sensor_nodes, prob.config.grid.n_nodes);

    const std::size_t n_cells = prob.tau_list.size() * prob.kinds.size();
    CalibrationResult result;
    result.cells.resize(n_cells);
    const double ref_days = (prob.reference.times.back() - prob.reference.times.front()) / 24.0;
    result.cm_s_per_day = cpu_per_day(prob.reference.wall_time_s, ref_days);

    detail::run_cells(n_cells, prob.jobs, [&](std::size_t cell_idx) {
        const std::size_t ti = cell_idx / prob.kinds.size();
        const std::size_t ki = cell_idx % prob.kinds.size();
        const double tau = prob.tau_list[ti];
        const FluctuationKind kind = prob.kinds[ki];
        const HeatConfig avg_cfg = averaged_heat_config(prob.config, tau);
        const auto mask = free_mask_for(kind);

        CalibrationCell cell;
        cell.tau_star = tau;
        cell.label = to_string(kind);
        const auto starts = default_starts(kind, prob.n_starts, detail::mix_seed(prob.seed, ti, ki));
        LmReport best;
        bool have_best = false;
        for (const auto& start : starts) {
            auto residual = [&](const std::vector<double>& p) {
                return heat_arm_residual(prob, avg_cfg, tau, p, kind, window, nodes);
            };
            LmReport rep = levenberg_marquardt(residual, start, prob.lm, mask);
            if (!have_best || rep.objective < best.objective) {
                best = std::move(rep);
                have_best = true;
            }
            if (best.objective < prob.multistart_early_stop) break;
        }
        cell.params = best.params;
        cell.eps2 = best.objective;
        cell.n_iters = best.n_iters;
        cell.converged = best.converged && best.objective < kDivergedPenalty;
        cell.bounds_hit = best.bounds_hit;
        if (cell.converged) {
            try {
                heat_arm_residual(prob, avg_cfg, tau, best.params, kind, window, nodes,
                                  &cell.wall_arm_s);
                cell.arm_s_per_day = cpu_per_day(cell.wall_arm_s, prob.t1_star / 24.0);
                if (result.cm_s_per_day > 0.0) {
                    cell.rho_cpu_pct = 100.0 * cell.arm_s_per_day / result.cm_s_per_day;
                }
            } catch (const DivergedError&) {
                cell.converged = false;
            }
        }
        result.cells[cell_idx] = std::move(cell);
    });
    result.wall_total_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
    return result;
}

inline HmConfig averaged_hm_config(const HmConfig& cfg, double tau) {
    HmConfig avg = cfg;
    AveragingSpec spec{tau};
    avg.bc.left_temp = block_average(cfg.bc.left_temp, spec);
    avg.bc.right_temp = block_average(cfg.bc.right_temp, spec);
    avg.bc.left_moist = block_average(cfg.bc.left_moist, spec);
    avg.bc.right_moist = block_average(cfg.bc.right_moist, spec);
    return avg;
}

/// Scaling weights 1/(max - min) of each reference field over the window.
struct HmWeights {
    double u = 1.0;
    double v = 1.0;
};

inline HmWeights hm_weights(const Trajectory<HmState>& ref, const std::vector<std::size_t>& window,
                            const std::vector<std::size_t>& nodes) {
    double u_lo = std::numeric_limits<double>::infinity(), u_hi = -u_lo;
    double v_lo = u_lo, v_hi = -u_lo;
    for (std::size_t i : window) {
        for (std::size_t j : nodes) {
            u_lo = std::min(u_lo, ref.states[i].u[j]);
            u_hi = std::max(u_hi, ref.states[i].u[j]);
            v_lo = std::min(v_lo, ref.states[i].v[j]);
            v_hi = std::max(v_hi, ref.states[i].v[j]);
        }
    }
    if (!(u_hi > u_lo) || !(v_hi > v_lo)) {
        throw ConfigError("reference field range is zero; scaling weights undefined");
    }
    return {1.0 / (u_hi - u_lo), 1.0 / (v_hi - v_lo)};
}

/// Joint residual: weighted temperature block then weighted moisture block.
/// The parameter vector is the u-model parameters followed by the v-model's.
inline std::vector<double> hm_arm_residual(const HmCalibrationProblem& prob,
                                           const HmConfig& avg_cfg, double tau,
                                           const std::vector<double>& params, HmKindPair pair,
                                           const HmWeights& w,
                                           const std::vector<std::size_t>& window,
                                           const std::vector<std::size_t>& nodes,
                                           double* eps_u = nullptr, double* eps_v = nullptr,
                                           double* wall_s = nullptr) {
    const std::size_t nu = param_count(pair.u_kind);
    const std::size_t nv = param_count(pair.v_kind);
    if (params.size() != nu + nv) throw ConfigError("joint parameter vector has wrong length");
    FluctuationModel u_model{pair.u_kind, {params.begin(), params.begin() + nu}, tau};
    FluctuationModel v_model{pair.v_kind, {params.begin() + nu, params.end()}, tau};
    u_model.validate();
    v_model.validate();
    HmArmRhs rhs(avg_cfg, v_model, u_model);
    HmDirichletPin pin{&avg_cfg};
    StepperSpec stepper{StepperKind::Rkl1, avg_cfg.dt_exp(), prob.max_stages};
    const auto traj = integrate(rhs, prob.initial, 0.0, prob.t1_star, prob.dt_macro_star, stepper,
                                prob.output_stride, pin);
    if (wall_s) *wall_s = traj.wall_time_s;

    const auto flat = split_hm(traj);
    std::vector<double> r;
    r.reserve(2 * window.size() * nodes.size());
    double su = 0.0, sv = 0.0;
    std::vector<double> r_v;
    r_v.reserve(window.size() * nodes.size());
    for (std::size_t i : window) {
        const double t = prob.reference.times[i];
        const double tc = std::clamp(t, traj.times.front(), traj.times.back());
        const Field bar_u = detail::interp_state(flat.u, tc);
        const Field bar_v = detail::interp_state(flat.v, tc);
        const Field recon_u = reconstruct(bar_u, u_model, avg_cfg.grid, t);
        const Field recon_v = reconstruct(bar_v, v_model, avg_cfg.grid, t);
        for (std::size_t j : nodes) {
            const double du = prob.reference.states[i].u[j] - recon_u[j];
            const double dv = prob.reference.states[i].v[j] - recon_v[j];
            su += du * du;
            sv += dv * dv;
            r.push_back(w.u * du);
            r_v.push_back(w.v * dv);
        }
    }
    r.insert(r.end(), r_v.begin(), r_v.end());
    if (eps_u) *eps_u = std::sqrt(su);
    if (eps_v) *eps_v = std::sqrt(sv);
    return r;
}

inline CalibrationResult offline_calibrate(const HmCalibrationProblem& prob) {
    if (prob.tau_list.empty() || prob.pairs.empty()) {
        throw ConfigError("calibration needs at least one tau and one candidate pair");
    }
    if (prob.reference.size() == 0) throw ConfigError("calibration needs a reference trajectory");
    if (prob.reference.times.back() + 1e-9 < prob.t1_star) {
        throw ConfigError("reference trajectory ends before the offline horizon");
    }
    const auto t_begin = std::chrono::steady_clock::now();
    const auto window = detail::reference_window(prob.reference.times, prob.t1_star);
    const auto nodes = detail::node_selection(prob.sensor_nodes, prob.config.grid.n_nodes);
    const HmWeights w = hm_weights(prob.reference, window, nodes);

    const std::size_t n_cells = prob.tau_list.size() * prob.pairs.size();
    CalibrationResult result;
    result.cells.resize(n_cells);
    const double ref_days = (prob.reference.times.back() - prob.reference.times.front()) / 24.0;
    result.cm_s_per_day = cpu_per_day(prob.reference.wall_time_s, ref_days);

    detail::run_cells(n_cells, prob.jobs, [&](std::size_t cell_idx) {
        const std::size_t ti = cell_idx / prob.pairs.size();
        const std::size_t ki = cell_idx % prob.pairs.size();
        const double tau = prob.tau_list[ti];
        const HmKindPair pair = prob.pairs[ki];
        const HmConfig avg_cfg = averaged_hm_config(prob.config, tau);

        const std::size_t nu = param_count(pair.u_kind);
        auto mask_u = free_mask_for(pair.u_kind);
        auto mask_v = free_mask_for(pair.v_kind);
        std::vector<char> mask = mask_u;
        mask.insert(mask.end(), mask_v.begin(), mask_v.end());

        const auto starts_u =
            default_starts(pair.u_kind, prob.n_starts, detail::mix_seed(prob.seed, ti, 2 * ki));
        const auto starts_v =
            default_starts(pair.v_kind, prob.n_starts, detail::mix_seed(prob.seed, ti, 2 * ki + 1));

        CalibrationCell cell;
        cell.tau_star = tau;
        cell.label = std::string(to_string(pair.u_kind)) + "+" + to_string(pair.v_kind);
        LmReport best;
        bool have_best = false;
        for (std::size_t s = 0; s < prob.n_starts; ++s) {
            std::vector<double> start = starts_u[s];
            start.insert(start.end(), starts_v[s].begin(), starts_v[s].end());
            auto residual = [&](const std::vector<double>& p) {
                return hm_arm_residual(prob, avg_cfg, tau, p, pair, w, window, nodes);
            };
            LmReport rep = levenberg_marquardt(residual, start, prob.lm, mask);
            if (!have_best || rep.objective < best.objective) {
                best = std::move(rep);
                have_best = true;
            }
            if (best.objective < prob.multistart_early_stop) break;
        }
        cell.params = best.params;
        cell.n_iters = best.n_iters;
        cell.converged = best.converged && best.objective < kDivergedPenalty;
        cell.bounds_hit = best.bounds_hit;
        if (cell.converged) {
            try {
                double eu = 0.0, ev = 0.0, wall = 0.0;
                hm_arm_residual(prob, avg_cfg, tau, best.params, pair, w, window, nodes, &eu, &ev,
                                &wall);
                cell.eps2_u = eu;
                cell.eps2_v = ev;
                cell.eps2 = w.u * eu + w.v * ev;
                cell.wall_arm_s = wall;
                cell.arm_s_per_day = cpu_per_day(wall, prob.t1_star / 24.0);
                if (result.cm_s_per_day > 0.0) {
                    cell.rho_cpu_pct = 100.0 * cell.arm_s_per_day / result.cm_s_per_day;
                }
            } catch (const DivergedError&) {
                cell.converged = false;
                cell.eps2 = kDivergedPenalty;
            }
        } else {
            cell.eps2 = best.objective;
        }
        result.cells[cell_idx] = std::move(cell);
    });
    result.wall_total_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
    return result;
}

} // namespace armsim

#endif
