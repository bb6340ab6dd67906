#ifndef ARMSIM_RUN_HPP
#define ARMSIM_RUN_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "analysis.hpp"
#include "calibrate.hpp"
#include "config.hpp"
#include "core.hpp"
#include "csv.hpp"
#include "errors.hpp"
#include "integrate.hpp"
#include "physics_heat.hpp"
#include "physics_hm.hpp"
#include "signal.hpp"

namespace armsim {

namespace detail {

inline void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
}

inline std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

inline std::string col_name(const std::string& prefix, std::size_t j) {
    std::string idx = std::to_string(j);
    while (idx.size() < 3) idx.insert(idx.begin(), '0');
    return prefix + "_" + idx;
}

/// One column per node, values redimensionalized for plotting.
inline void write_field_csv(const std::string& path, const Trajectory<Field>& traj,
                            const ReferenceScales& scales, ValueKind kind,
                            const std::string& prefix) {
    if (traj.size() == 0) throw IoError("empty trajectory cannot be serialized");
    const std::size_t n = traj.states.front().size();
    CsvTable t;
    t.header.push_back("time_hours");
    for (std::size_t j = 0; j < n; ++j) t.header.push_back(col_name(prefix, j));
    for (std::size_t i = 0; i < traj.size(); ++i) {
        std::vector<std::string> row;
        row.reserve(n + 1);
        row.push_back(g17(t_star_to_hours(traj.times[i], scales)));
        for (std::size_t j = 0; j < n; ++j) {
            row.push_back(g17(redimensionalize(traj.states[i][j], kind, scales)));
        }
        t.rows.push_back(std::move(row));
    }
    write_csv(path, t);
}

inline void write_series_csv(const std::string& path, const std::vector<std::string>& header,
                             const std::vector<std::vector<double>>& columns) {
    CsvTable t;
    t.header = header;
    const std::size_t n = columns.empty() ? 0 : columns.front().size();
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::string> row;
        row.reserve(columns.size());
        for (const auto& col : columns) row.push_back(g17(col[i]));
        t.rows.push_back(std::move(row));
    }
    write_csv(path, t);
}

inline void write_loads_csv(const std::string& path, const std::vector<double>& times_hours,
                            const std::vector<double>& flux_wm2) {
    if (times_hours.size() < 2) return; // nothing to integrate
    const auto loads = conduction_loads(times_hours, flux_wm2);
    CsvTable t;
    t.header = {"t_start_hours", "t_end_hours", "energy_j_m2"};
    for (const auto& w : loads) {
        t.rows.push_back({g17(w.t_start_hours), g17(w.t_end_hours), g17(w.energy_j_m2)});
    }
    write_csv(path, t);
}

inline void write_bands_csv(const std::string& path, const std::vector<double>& times_hours,
                            const UncertaintyBand& band) {
    CsvTable t;
    t.header = {"time_hours", "value", "lower", "upper"};
    for (std::size_t i = 0; i < times_hours.size(); ++i) {
        t.rows.push_back(
            {g17(times_hours[i]), g17(band.value[i]), g17(band.lower[i]), g17(band.upper[i])});
    }
    write_csv(path, t);
}

inline void write_distribution_csv(const std::string& path, const Distribution& dist) {
    CsvTable t;
    t.header = {"bin_center", "density"};
    for (std::size_t i = 0; i < dist.bin_centers.size(); ++i) {
        t.rows.push_back({g17(dist.bin_centers[i]), g17(dist.density[i])});
    }
    write_csv(path, t);
}

/// Physical spatial gradient of a dimensionless field at one node, in
/// (value unit)/m: central difference inside, one-sided at the faces.
inline double node_gradient(const Field& f, std::size_t j, const SpaceGrid& grid,
                            double value_scale, double length_m) {
    const std::size_t n = grid.n_nodes;
    double g_star;
    if (j == 0) {
        g_star = (f[1] - f[0]) / grid.dx_star;
    } else if (j == n - 1) {
        g_star = (f[n - 1] - f[n - 2]) / grid.dx_star;
    } else {
        g_star = (f[j + 1] - f[j - 1]) / (2.0 * grid.dx_star);
    }
    return g_star * value_scale / length_m;
}

inline std::string params_to_string(const std::vector<double>& p) {
    std::string out;
    for (double v : p) out += (out.empty() ? "" : ",") + g17(v);
    return out;
}

} // namespace detail

using MetaPairs = std::vector<std::pair<std::string, std::string>>;

namespace detail {

inline void append_common_meta(MetaPairs& meta, const BuiltRun& run, int n_stages) {
    meta.emplace_back("problem", run.problem == ProblemKind::Heat ? "heat" : "hm");
    meta.emplace_back("model", run.model == ModelKind::Cm ? "cm" : "arm");
    meta.emplace_back("seed", std::to_string(run.seed));
    meta.emplace_back("n_nodes", std::to_string(run.problem == ProblemKind::Heat
                                                    ? run.heat.grid.n_nodes
                                                    : run.hm.grid.n_nodes));
    meta.emplace_back("dt_hours", g17(t_star_to_hours(run.dt_star, run.scales)));
    meta.emplace_back("horizon_hours", g17(t_star_to_hours(run.horizon_star, run.scales)));
    meta.emplace_back("stepper", run.stepper == StepperKind::Rkl1 ? "rkl1" : "euler");
    meta.emplace_back("n_stages", std::to_string(n_stages));
    meta.emplace_back("dt_super_star", g17(run.dt_star));
    const double dt_exp = run.problem == ProblemKind::Heat ? run.heat.dt_exp() : run.hm.dt_exp();
    meta.emplace_back("dt_exp_star", g17(dt_exp));
    meta.emplace_back("scales.length_m", g17(run.scales.length_ref_m));
    meta.emplace_back("scales.time_s", g17(run.scales.t_ref_s));
    meta.emplace_back("scales.temp_k", g17(run.scales.temp_ref_k));
    if (run.problem == ProblemKind::Heat) {
        meta.emplace_back("fo_t", g17(run.heat.fo_t));
        meta.emplace_back("bi_left", g17(run.heat.bi_left));
        meta.emplace_back("bi_right", g17(run.heat.bi_right));
    } else {
        meta.emplace_back("scales.moisture_ref", g17(run.scales.moisture_ref));
        meta.emplace_back("fo_t", g17(run.hm.fo_t));
        meta.emplace_back("fo_m", g17(run.hm.fo_m));
        meta.emplace_back("gamma", g17(run.hm.gamma));
        meta.emplace_back("delta", g17(run.hm.delta));
        meta.emplace_back("groups_derived", "1"); // from scales, not direct inputs
    }
    if (run.model == ModelKind::Arm) {
        meta.emplace_back("tau_hours", g17(t_star_to_hours(run.tau_star, run.scales)));
        if (run.problem == ProblemKind::Heat) {
            meta.emplace_back("candidate", to_string(run.arm_u.kind));
            meta.emplace_back("params", params_to_string(run.arm_u.params));
        } else {
            meta.emplace_back("candidate",
                              candidate_label(HmKindPair{run.arm_u.kind, run.arm_v.kind}));
            meta.emplace_back("u_params", params_to_string(run.arm_u.params));
            meta.emplace_back("v_params", params_to_string(run.arm_v.params));
        }
    }
}

} // namespace detail

/// Run the configured model, write the trajectory, flux, final-state and
/// analysis files plus a metadata sidecar. Wall time goes to the sidecar
/// only, so every CSV is reproducible byte for byte from config + seed.
inline void run_simulate(const BuiltRun& run) {
    const int n_stages = validate_run_stability(run);
    if (run.model == ModelKind::Arm) validate_run_averaging(run, run.tau_star);
    detail::ensure_dir(run.out_dir);

    MetaPairs meta;
    detail::append_common_meta(meta, run, n_stages);

    if (run.problem == ProblemKind::Heat) {
        const StepperSpec spec{run.stepper, run.heat.dt_exp(), run.max_stages};
        Trajectory<Field> traj;
        if (run.model == ModelKind::Cm) {
            HeatCmRhs rhs(run.heat);
            traj = integrate(rhs, run.heat_initial, 0.0, run.horizon_star, run.dt_star, spec,
                             run.output_stride);
        } else {
            FluctuationModel model{run.arm_u.kind, run.arm_u.params, run.tau_star};
            model.validate();
            const HeatConfig avg = averaged_heat_config(run.heat, run.tau_star);
            HeatArmRhs rhs(avg, model);
            const auto bar = integrate(rhs, run.heat_initial, 0.0, run.horizon_star, run.dt_star,
                                       spec, run.output_stride);
            traj.times = bar.times;
            traj.wall_time_s = bar.wall_time_s;
            traj.states.reserve(bar.size());
            for (std::size_t i = 0; i < bar.size(); ++i) {
                traj.states.push_back(
                    reconstruct(bar.states[i], model, run.heat.grid, bar.times[i]));
            }
        }

        std::vector<double> hours(traj.size()), flux(traj.size());
        for (std::size_t i = 0; i < traj.size(); ++i) {
            hours[i] = t_star_to_hours(traj.times[i], run.scales);
            flux[i] = heat_flux_wm2(run.heat, traj.states[i], run.scales);
        }

        detail::write_field_csv(detail::join_path(run.out_dir, "trajectory.csv"), traj, run.scales,
                                ValueKind::Celsius, "temp_c");
        detail::write_series_csv(detail::join_path(run.out_dir, "flux.csv"),
                                 {"time_hours", "j_q_wm2"}, {hours, flux});
        {
            CsvTable t;
            t.header = {"x_star", "temp_c"};
            const Field& last = traj.states.back();
            for (std::size_t j = 0; j < last.size(); ++j) {
                t.rows.push_back(
                    {g17(run.heat.grid.x(j)),
                     g17(redimensionalize(last[j], ValueKind::Celsius, run.scales))});
            }
            write_csv(detail::join_path(run.out_dir, "final_state.csv"), t);
        }
        detail::write_loads_csv(detail::join_path(run.out_dir, "loads.csv"), hours, flux);
        meta.emplace_back("wall_time_s", g17(traj.wall_time_s));
    } else {
        const StepperSpec spec{run.stepper, run.hm.dt_exp(), run.max_stages};
        Trajectory<HmState> traj;
        if (run.model == ModelKind::Cm) {
            HmCmRhs rhs(run.hm);
            HmDirichletPin pin{&run.hm};
            traj = integrate(rhs, run.hm_initial, 0.0, run.horizon_star, run.dt_star, spec,
                             run.output_stride, pin);
        } else {
            FluctuationModel u_model{run.arm_u.kind, run.arm_u.params, run.tau_star};
            FluctuationModel v_model{run.arm_v.kind, run.arm_v.params, run.tau_star};
            u_model.validate();
            v_model.validate();
            const HmConfig avg = averaged_hm_config(run.hm, run.tau_star);
            HmArmRhs rhs(avg, v_model, u_model);
            HmDirichletPin pin{&avg};
            const auto bar = integrate(rhs, run.hm_initial, 0.0, run.horizon_star, run.dt_star,
                                       spec, run.output_stride, pin);
            traj.times = bar.times;
            traj.wall_time_s = bar.wall_time_s;
            traj.states.reserve(bar.size());
            for (std::size_t i = 0; i < bar.size(); ++i) {
                traj.states.push_back(
                    reconstruct_hm(bar.states[i], v_model, u_model, run.hm.grid, bar.times[i]));
            }
        }

        const std::size_t n = run.hm.grid.n_nodes;
        std::vector<double> hours(traj.size());
        std::vector<double> jq(traj.size()), jm(traj.size()), jqm(traj.size()), dt_k(traj.size());
        for (std::size_t i = 0; i < traj.size(); ++i) {
            hours[i] = t_star_to_hours(traj.times[i], run.scales);
            const SurfaceFlux f = total_flux(run.hm, traj.states[i], run.scales);
            jq[i] = f.j_q;
            jm[i] = f.j_m;
            jqm[i] = f.j_qm;
            dt_k[i] = (traj.states[i].u[0] - traj.states[i].u[n - 1]) * run.scales.temp_ref_k;
        }

        const auto split = split_hm(traj);
        detail::write_field_csv(detail::join_path(run.out_dir, "trajectory_u.csv"), split.u,
                                run.scales, ValueKind::Celsius, "temp_c");
        detail::write_field_csv(detail::join_path(run.out_dir, "trajectory_v.csv"), split.v,
                                run.scales, ValueKind::Moisture, "theta");
        detail::write_series_csv(detail::join_path(run.out_dir, "flux.csv"),
                                 {"time_hours", "j_q_wm2", "j_m_wm2", "j_qm_wm2"},
                                 {hours, jq, jm, jqm});
        {
            CsvTable t;
            t.header = {"x_star", "temp_c", "theta"};
            const HmState& last = traj.states.back();
            for (std::size_t j = 0; j < n; ++j) {
                t.rows.push_back(
                    {g17(run.hm.grid.x(j)),
                     g17(redimensionalize(last.u[j], ValueKind::Celsius, run.scales)),
                     g17(redimensionalize(last.v[j], ValueKind::Moisture, run.scales))});
            }
            write_csv(detail::join_path(run.out_dir, "final_state.csv"), t);
        }
        detail::write_loads_csv(detail::join_path(run.out_dir, "loads.csv"), hours, jqm);
        if (hours.size() >= 2) {
            const auto windows = thermal_resistance_effective(hours, dt_k, jqm);
            CsvTable t;
            t.header = {"t_start_hours", "t_end_hours", "r_m2k_w", "valid"};
            for (const auto& w : windows) {
                t.rows.push_back({g17(w.t_start_hours), g17(w.t_end_hours), g17(w.r_m2k_w),
                                  w.valid ? "1" : "0"});
            }
            write_csv(detail::join_path(run.out_dir, "resistance.csv"), t);
            meta.emplace_back("r0_m2k_w",
                              g17(design_resistance(run.scales.length_ref_m,
                                                    run.scales.k_ref * run.hm.k_poly(0.0))));
        }

        // Sensor-plane series: uncertainty bands and value distributions.
        const std::size_t js = run.sensor_node;
        std::vector<double> temp_c(traj.size()), theta(traj.size());
        std::vector<double> grad_t(traj.size()), grad_th(traj.size());
        for (std::size_t i = 0; i < traj.size(); ++i) {
            temp_c[i] = redimensionalize(traj.states[i].u[js], ValueKind::Celsius, run.scales);
            theta[i] = redimensionalize(traj.states[i].v[js], ValueKind::Moisture, run.scales);
            grad_t[i] = detail::node_gradient(traj.states[i].u, js, run.hm.grid,
                                              run.scales.temp_ref_k, run.scales.length_ref_m);
            grad_th[i] = detail::node_gradient(traj.states[i].v, js, run.hm.grid,
                                               run.scales.moisture_ref, run.scales.length_ref_m);
        }
        detail::write_bands_csv(
            detail::join_path(run.out_dir, "uncertainty_u.csv"), hours,
            measurement_uncertainty(temp_c, grad_t, MeasuredKind::TemperatureC, run.uncertainty));
        detail::write_bands_csv(detail::join_path(run.out_dir, "uncertainty_v.csv"), hours,
                                measurement_uncertainty(theta, grad_th,
                                                        MeasuredKind::MoistureContent,
                                                        run.uncertainty));
        const Distribution dist_u = distribution_fn(temp_c);
        const Distribution dist_v = distribution_fn(theta);
        detail::write_distribution_csv(detail::join_path(run.out_dir, "distribution_u.csv"),
                                       dist_u);
        detail::write_distribution_csv(detail::join_path(run.out_dir, "distribution_v.csv"),
                                       dist_v);
        meta.emplace_back("sensor_node", std::to_string(js));
        if (dist_u.degenerate) meta.emplace_back("distribution_u_degenerate", "1");
        if (dist_v.degenerate) meta.emplace_back("distribution_v_degenerate", "1");
        meta.emplace_back("wall_time_s", g17(traj.wall_time_s));
    }

    write_sidecar(detail::join_path(run.out_dir, "metadata.txt"), meta);
}

/// Offline parameter fit over the configured tau list and candidates. The
/// table carries parameters and objectives; timings live in the sidecar.
/// Returns false when no cell converged.
inline bool run_calibrate(const BuiltRun& run) {
    validate_run_stability(run);
    for (double tau : run.calib_tau_star) validate_run_averaging(run, tau);
    detail::ensure_dir(run.out_dir);

    CalibrationResult result;
    std::size_t max_params = 0;

    if (run.problem == ProblemKind::Heat) {
        HeatCalibrationProblem prob;
        prob.config = run.heat;
        prob.initial = run.heat_initial;
        const StepperSpec spec{run.stepper, run.heat.dt_exp(), run.max_stages};
        HeatCmRhs rhs(run.heat);
        prob.reference = integrate(rhs, run.heat_initial, 0.0, run.t1_star, run.dt_star, spec, 1);
        prob.tau_list = run.calib_tau_star;
        prob.kinds = run.calib_kinds;
        prob.t1_star = run.t1_star;
        prob.dt_macro_star = run.dt_star;
        prob.max_stages = run.max_stages;
        prob.seed = run.seed;
        prob.jobs = run.jobs;
        prob.n_starts = run.n_starts;
        prob.sensor_nodes = run.calib_sensor_nodes;
        result = offline_calibrate(prob);
        for (FluctuationKind k : run.calib_kinds) {
            max_params = std::max(max_params, param_count(k));
        }
    } else {
        HmCalibrationProblem prob;
        prob.config = run.hm;
        prob.initial = run.hm_initial;
        const StepperSpec spec{run.stepper, run.hm.dt_exp(), run.max_stages};
        HmCmRhs rhs(run.hm);
        HmDirichletPin pin{&run.hm};
        prob.reference =
            integrate(rhs, run.hm_initial, 0.0, run.t1_star, run.dt_star, spec, 1, pin);
        prob.tau_list = run.calib_tau_star;
        prob.pairs = run.calib_pairs;
        prob.t1_star = run.t1_star;
        prob.dt_macro_star = run.dt_star;
        prob.max_stages = run.max_stages;
        prob.seed = run.seed;
        prob.jobs = run.jobs;
        prob.n_starts = run.n_starts;
        prob.sensor_nodes = run.calib_sensor_nodes;
        result = offline_calibrate(prob);
        for (const HmKindPair& p : run.calib_pairs) {
            max_params = std::max(max_params, param_count(p.u_kind) + param_count(p.v_kind));
        }
    }

    CsvTable t;
    t.header = {"tau_hours", "candidate", "converged", "bounds_hit",
                "iterations", "eps2",      "eps2_u",    "eps2_v"};
    for (std::size_t p = 0; p < max_params; ++p) t.header.push_back("param_" + std::to_string(p));
    for (const auto& cell : result.cells) {
        std::vector<std::string> row;
        row.push_back(g17(t_star_to_hours(cell.tau_star, run.scales)));
        row.push_back(cell.label);
        row.push_back(cell.converged ? "1" : "0");
        row.push_back(cell.bounds_hit ? "1" : "0");
        row.push_back(std::to_string(cell.n_iters));
        row.push_back(g17(cell.eps2));
        if (run.problem == ProblemKind::Hm) {
            row.push_back(g17(cell.eps2_u));
            row.push_back(g17(cell.eps2_v));
        } else {
            row.push_back("");
            row.push_back("");
        }
        for (std::size_t p = 0; p < max_params; ++p) {
            row.push_back(p < cell.params.size() ? g17(cell.params[p]) : "");
        }
        t.rows.push_back(std::move(row));
    }
    write_csv(detail::join_path(run.out_dir, "calibration.csv"), t);

    MetaPairs meta;
    meta.emplace_back("problem", run.problem == ProblemKind::Heat ? "heat" : "hm");
    meta.emplace_back("seed", std::to_string(run.seed));
    meta.emplace_back("jobs", std::to_string(run.jobs));
    meta.emplace_back("n_starts", std::to_string(run.n_starts));
    meta.emplace_back("t1_hours", g17(t_star_to_hours(run.t1_star, run.scales)));
    meta.emplace_back("dt_hours", g17(t_star_to_hours(run.dt_star, run.scales)));
    meta.emplace_back("cm_s_per_day", g17(result.cm_s_per_day));
    meta.emplace_back("wall_total_s", g17(result.wall_total_s));
    for (const auto& cell : result.cells) {
        const std::string base =
            cell.label + ".tau" + g17(t_star_to_hours(cell.tau_star, run.scales));
        meta.emplace_back(base + ".wall_arm_s", g17(cell.wall_arm_s));
        meta.emplace_back(base + ".arm_s_per_day", g17(cell.arm_s_per_day));
        meta.emplace_back(base + ".rho_cpu_pct", g17(cell.rho_cpu_pct));
    }
    write_sidecar(detail::join_path(run.out_dir, "calibration_meta.txt"), meta);

    for (const auto& cell : result.cells) {
        if (cell.converged) return true;
    }
    return false;
}

namespace detail {

struct CompareRow {
    double tau_hours = 0.0;
    double dt_hours = 0.0;
    std::string field;
    double eps_inf = 0.0;
    double eta_inf = 0.0;
    double eta_inf_pct = 0.0;
};

struct ComparePoint {
    std::vector<CompareRow> rows;
    int n_stages = 0;
    std::size_t n_macro_steps = 0;
    double wall_arm_s = 0.0;
};

} // namespace detail

/// Sweep (tau, dt), run the averaged model against one complete-model
/// reference, and emit the error table plus a deterministic cost table;
/// measured wall times go to the sidecar.
inline void run_compare(const BuiltRun& run) {
    validate_run_stability(run);
    const double dt_exp = run.problem == ProblemKind::Heat ? run.heat.dt_exp() : run.hm.dt_exp();
    for (double tau : run.sweep_tau_star) validate_run_averaging(run, tau);
    for (double dt : run.sweep_dt_star) {
        if (run.stepper == StepperKind::Rkl1) {
            rkl1_required_stages(dt, dt_exp, run.max_stages); // throws past the stage cap
        } else if (dt > dt_exp * (1.0 + 1e-12)) {
            throw ConfigError("explicit step " + g17(dt) + " exceeds the stable limit " +
                              g17(dt_exp));
        }
    }
    detail::ensure_dir(run.out_dir);

    const double simulated_days = t_star_to_hours(run.horizon_star, run.scales) / 24.0;
    const std::size_t n_points = run.sweep_tau_star.size() * run.sweep_dt_star.size();
    std::vector<detail::ComparePoint> points(n_points);
    double wall_cm_s = 0.0;

    if (run.problem == ProblemKind::Heat) {
        const StepperSpec spec{run.stepper, run.heat.dt_exp(), run.max_stages};
        HeatCmRhs rhs(run.heat);
        const auto ref = integrate(rhs, run.heat_initial, 0.0, run.horizon_star, run.dt_star, spec,
                                   run.output_stride);
        wall_cm_s = ref.wall_time_s;
        std::vector<double> ref_flux(ref.size());
        for (std::size_t i = 0; i < ref.size(); ++i) {
            ref_flux[i] = heat_flux_wm2(run.heat, ref.states[i], run.scales);
        }
        std::vector<double> x_star(run.heat.grid.n_nodes);
        for (std::size_t j = 0; j < x_star.size(); ++j) x_star[j] = run.heat.grid.x(j);

        detail::run_cells(n_points, run.jobs, [&](std::size_t idx) {
            const std::size_t ti = idx / run.sweep_dt_star.size();
            const std::size_t di = idx % run.sweep_dt_star.size();
            const double tau = run.sweep_tau_star[ti];
            const double dt = run.sweep_dt_star[di];
            const double tau_h = t_star_to_hours(tau, run.scales);
            const double dt_h = t_star_to_hours(dt, run.scales);

            std::vector<double> params = run.arm_u.params;
            if (!run.params_file.empty()) {
                params = lookup_calibrated_params(run.params_file, to_string(run.arm_u.kind),
                                                  tau_h);
            }
            FluctuationModel model{run.arm_u.kind, params, tau};
            model.validate();
            const HeatConfig avg = averaged_heat_config(run.heat, tau);
            HeatArmRhs arm_rhs(avg, model);
            const auto bar = integrate(arm_rhs, run.heat_initial, 0.0, run.horizon_star, dt, spec,
                                       run.output_stride);
            Trajectory<Field> recon;
            recon.times = bar.times;
            recon.states.reserve(bar.size());
            std::vector<double> flux(bar.size());
            for (std::size_t i = 0; i < bar.size(); ++i) {
                recon.states.push_back(
                    reconstruct(bar.states[i], model, run.heat.grid, bar.times[i]));
                flux[i] = heat_flux_wm2(run.heat, recon.states.back(), run.scales);
            }

            detail::ComparePoint& pt = points[idx];
            const ErrorReport rep_u = compare_trajectories(ref, recon, x_star);
            pt.rows.push_back({tau_h, dt_h, "u", rep_u.eps_inf, rep_u.eta_inf, rep_u.eta_inf_pct});
            const ErrorReport rep_f = compare_series(ref.times, ref_flux, recon.times, flux);
            pt.rows.push_back(
                {tau_h, dt_h, "flux_q", rep_f.eps_inf, rep_f.eta_inf, rep_f.eta_inf_pct});
            pt.n_stages = run.stepper == StepperKind::Rkl1
                              ? rkl1_required_stages(dt, run.heat.dt_exp(), run.max_stages)
                              : 1;
            pt.n_macro_steps =
                static_cast<std::size_t>(std::ceil(run.horizon_star / dt - 1e-12));
            pt.wall_arm_s = bar.wall_time_s;
        });
    } else {
        const StepperSpec spec{run.stepper, run.hm.dt_exp(), run.max_stages};
        HmCmRhs rhs(run.hm);
        HmDirichletPin pin{&run.hm};
        const auto ref = integrate(rhs, run.hm_initial, 0.0, run.horizon_star, run.dt_star, spec,
                                   run.output_stride, pin);
        wall_cm_s = ref.wall_time_s;
        const auto ref_split = split_hm(ref);
        std::vector<double> ref_flux(ref.size());
        for (std::size_t i = 0; i < ref.size(); ++i) {
            ref_flux[i] = total_flux(run.hm, ref.states[i], run.scales).j_qm;
        }
        std::vector<double> x_star(run.hm.grid.n_nodes);
        for (std::size_t j = 0; j < x_star.size(); ++j) x_star[j] = run.hm.grid.x(j);

        detail::run_cells(n_points, run.jobs, [&](std::size_t idx) {
            const std::size_t ti = idx / run.sweep_dt_star.size();
            const std::size_t di = idx % run.sweep_dt_star.size();
            const double tau = run.sweep_tau_star[ti];
            const double dt = run.sweep_dt_star[di];
            const double tau_h = t_star_to_hours(tau, run.scales);
            const double dt_h = t_star_to_hours(dt, run.scales);

            std::vector<double> u_params = run.arm_u.params;
            std::vector<double> v_params = run.arm_v.params;
            const HmKindPair pair{run.arm_u.kind, run.arm_v.kind};
            if (!run.params_file.empty()) {
                const auto joint =
                    lookup_calibrated_params(run.params_file, candidate_label(pair), tau_h);
                const std::size_t nu = param_count(pair.u_kind);
                if (joint.size() != nu + param_count(pair.v_kind)) {
                    throw ConfigError("calibration table row for '" + candidate_label(pair) +
                                      "' has wrong parameter count");
                }
                u_params.assign(joint.begin(), joint.begin() + nu);
                v_params.assign(joint.begin() + nu, joint.end());
            }
            FluctuationModel u_model{pair.u_kind, u_params, tau};
            FluctuationModel v_model{pair.v_kind, v_params, tau};
            u_model.validate();
            v_model.validate();
            const HmConfig avg = averaged_hm_config(run.hm, tau);
            HmArmRhs arm_rhs(avg, v_model, u_model);
            HmDirichletPin arm_pin{&avg};
            const auto bar = integrate(arm_rhs, run.hm_initial, 0.0, run.horizon_star, dt, spec,
                                       run.output_stride, arm_pin);
            Trajectory<HmState> recon;
            recon.times = bar.times;
            recon.states.reserve(bar.size());
            std::vector<double> flux(bar.size());
            for (std::size_t i = 0; i < bar.size(); ++i) {
                recon.states.push_back(
                    reconstruct_hm(bar.states[i], v_model, u_model, run.hm.grid, bar.times[i]));
                flux[i] = total_flux(run.hm, recon.states.back(), run.scales).j_qm;
            }
            const auto recon_split = split_hm(recon);

            detail::ComparePoint& pt = points[idx];
            const ErrorReport rep_u = compare_trajectories(ref_split.u, recon_split.u, x_star);
            pt.rows.push_back({tau_h, dt_h, "u", rep_u.eps_inf, rep_u.eta_inf, rep_u.eta_inf_pct});
            const ErrorReport rep_v = compare_trajectories(ref_split.v, recon_split.v, x_star);
            pt.rows.push_back({tau_h, dt_h, "v", rep_v.eps_inf, rep_v.eta_inf, rep_v.eta_inf_pct});
            const ErrorReport rep_f = compare_series(ref.times, ref_flux, recon.times, flux);
            pt.rows.push_back(
                {tau_h, dt_h, "flux_qm", rep_f.eps_inf, rep_f.eta_inf, rep_f.eta_inf_pct});
            pt.n_stages = run.stepper == StepperKind::Rkl1
                              ? rkl1_required_stages(dt, run.hm.dt_exp(), run.max_stages)
                              : 1;
            pt.n_macro_steps =
                static_cast<std::size_t>(std::ceil(run.horizon_star / dt - 1e-12));
            pt.wall_arm_s = bar.wall_time_s;
        });
    }

    CsvTable err;
    err.header = {"tau_hours", "dt_hours", "field", "eps_inf", "eta_inf", "eta_inf_pct"};
    CsvTable cost;
    cost.header = {"tau_hours", "dt_hours", "n_stages", "n_macro_steps"};
    MetaPairs meta;
    meta.emplace_back("problem", run.problem == ProblemKind::Heat ? "heat" : "hm");
    meta.emplace_back("seed", std::to_string(run.seed));
    meta.emplace_back("simulated_days", g17(simulated_days));
    meta.emplace_back("wall_cm_s", g17(wall_cm_s));
    meta.emplace_back("cm_s_per_day", g17(cpu_per_day(wall_cm_s, simulated_days)));
    for (const auto& pt : points) {
        for (const auto& r : pt.rows) {
            err.rows.push_back({g17(r.tau_hours), g17(r.dt_hours), r.field, g17(r.eps_inf),
                                g17(r.eta_inf), g17(r.eta_inf_pct)});
        }
        const auto& first = pt.rows.front();
        cost.rows.push_back({g17(first.tau_hours), g17(first.dt_hours),
                             std::to_string(pt.n_stages), std::to_string(pt.n_macro_steps)});
        const std::string base = "tau" + g17(first.tau_hours) + ".dt" + g17(first.dt_hours);
        meta.emplace_back(base + ".wall_arm_s", g17(pt.wall_arm_s));
        meta.emplace_back(base + ".arm_s_per_day", g17(cpu_per_day(pt.wall_arm_s, simulated_days)));
        meta.emplace_back(base + ".rho_cpu_pct", g17(rho_cpu(pt.wall_arm_s, wall_cm_s)));
    }
    write_csv(detail::join_path(run.out_dir, "error_report.csv"), err);
    write_csv(detail::join_path(run.out_dir, "cpu_report.csv"), cost);
    write_sidecar(detail::join_path(run.out_dir, "compare_meta.txt"), meta);
}

} // namespace armsim

#endif
