// Acceptance gate: one check per shipped claim, each with a pinned tolerance
// and a wall-clock budget. Prints one PASS/FAIL line per criterion and exits
// with the number of failures.
#include <armsim/armsim.hpp>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace armsim;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* pattern, ...) {
    char buf[512];
    va_list args;
    va_start(args, pattern);
    std::vsnprintf(buf, sizeof(buf), pattern, args);
    va_end(args);
    return buf;
}

unsigned hw_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "armsim_acceptance" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// ---------------------------------------------------------------- criterion 1

Outcome check_preset_groups() {
    const auto out = scratch("c1");
    KvMap m = preset_heat();
    m["out"] = out.string();
    run_simulate(build_run(m));

    std::ifstream meta(out / "metadata.txt");
    if (!meta) return {false, "metadata sidecar missing"};
    std::string line;
    double fo = 0.0;
    bool found = false;
    while (std::getline(meta, line)) {
        if (line.rfind("fo_t = ", 0) == 0) {
            fo = std::strtod(line.c_str() + 7, nullptr);
            found = true;
        }
    }
    if (!found) return {false, "metadata lacks fo_t"};
    const double target = 5.1e-2;
    const double rel = std::abs(fo - target) / target;
    const bool exact = std::abs(fo - 5.085e-2) < 1e-15;
    return {exact && rel < 5e-3,
            fmt("metadata fo_t = %.6g, expected 5.085e-2, %.3f%% from 5.1e-2", fo, 100.0 * rel)};
}

// ---------------------------------------------------------------- criterion 2

Outcome check_one_stage_degeneracy() {
    const BuiltRun run = build_run(preset_heat());
    HeatCmRhs rhs(run.heat);
    std::mt19937_64 gen(20240215);
    std::uniform_real_distribution<double> box(0.8, 1.2);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        Field u(run.heat.grid.n_nodes);
        for (double& x : u) x = box(gen);
        const double t0 = 0.25 * static_cast<double>(trial);
        const Field a = euler_step(rhs, u, t0, 1e-3);
        const Field b = rkl1_step(rhs, u, t0, 1e-3, 1);
        for (std::size_t j = 0; j < u.size(); ++j) {
            const double scale = std::max({1.0, std::abs(a[j]), std::abs(b[j])});
            worst = std::max(worst, std::abs(a[j] - b[j]) / scale);
        }
    }
    return {worst <= 1e-15, fmt("max relative gap over 10 random states = %.2e", worst)};
}

// ---------------------------------------------------------------- criterion 3

HeatConfig linear_heat_config() {
    HeatConfig cfg;
    cfg.grid = SpaceGrid(101);
    cfg.fo_t = 0.05085;
    cfg.bi_left = 2.65;
    cfg.bi_right = 1.42;
    cfg.c_poly = PropertyPolynomial{1.0, 0.0, 0.0};
    cfg.k_poly = PropertyPolynomial{1.0, 0.0, 0.0};
    cfg.bc.left_temp = constant_signal(0.0, 1.0e9);
    cfg.bc.right_temp = constant_signal(0.0, 1.0e9);
    return cfg;
}

Outcome check_stability_edges() {
    const HeatConfig cfg = linear_heat_config();
    HeatCmRhs rhs(cfg);
    const std::size_t n = cfg.grid.n_nodes;

    // With zero ambient signals the semi-discrete operator is linear, so its
    // sharpest decay rate comes straight out of power iteration.
    Field v(n);
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> box(-1.0, 1.0);
    for (double& x : v) x = box(gen);
    double lambda = 0.0;
    Field av(n);
    for (int it = 0; it < 3000; ++it) {
        rhs(v, 0.0, av);
        double num = 0.0, den = 0.0, norm = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            num += v[j] * av[j];
            den += v[j] * v[j];
            norm = std::max(norm, std::abs(av[j]));
        }
        lambda = num / den;
        for (std::size_t j = 0; j < n; ++j) v[j] = av[j] / norm;
    }
    const double dt_edge = 2.0 / std::abs(lambda);

    auto euler_bounded = [&](double dt) {
        Field u(n);
        std::mt19937_64 g2(11);
        for (double& x : u) x = 0.5 * box(g2);
        try {
            for (int s = 0; s < 1000; ++s) {
                u = euler_step(rhs, u, 0.0, dt);
                for (double x : u) {
                    if (!(std::abs(x) < 1e3)) return false;
                }
            }
        } catch (const DivergedError&) {
            return false;
        }
        return true;
    };

    const bool below_ok = euler_bounded(0.99 * dt_edge);
    const bool above_diverges = !euler_bounded(1.01 * dt_edge);

    bool super_ok = true;
    for (int stages : {2, 5, 10}) {
        const double dt_super = dt_edge * 0.5 * static_cast<double>(stages * (stages + 1));
        Field u(n);
        std::mt19937_64 g3(13);
        for (double& x : u) x = 0.5 * box(g3);
        try {
            for (int s = 0; s < 1000 && super_ok; ++s) {
                u = rkl1_step(rhs, u, 0.0, dt_super, stages);
                for (double x : u) {
                    if (!(std::abs(x) < 10.0)) super_ok = false;
                }
            }
        } catch (const DivergedError&) {
            super_ok = false;
        }
    }
    return {below_ok && above_diverges && super_ok,
            fmt("spectral edge dt = %.4e: 0.99x bounded %d, 1.01x divergent %d, "
                "super steps at the bound stable for 2/5/10 stages %d",
                dt_edge, below_ok ? 1 : 0, above_diverges ? 1 : 0, super_ok ? 1 : 0)};
}

// ---------------------------------------------------------------- criterion 4

Outcome check_steady_profile() {
    HeatConfig cfg = linear_heat_config();
    const double u_left = 1.05, u_right = 0.95;
    cfg.bc.left_temp = constant_signal(u_left, 1.0e9);
    cfg.bc.right_temp = constant_signal(u_right, 1.0e9);

    HeatCmRhs rhs(cfg);
    const StepperSpec spec{StepperKind::Rkl1, cfg.dt_exp(), 1000};
    const Field init(cfg.grid.n_nodes, 1.0);
    const auto traj = integrate(rhs, init, 0.0, 400.0, 1.0, spec, 400);

    // Robin exchange on both faces with constant conductivity: the steady
    // profile is the line u = a + b x fixed by the two flux balances.
    const double k = 1.0;
    const double b = cfg.bi_right * (u_right - u_left) /
                     (k + k * cfg.bi_right / cfg.bi_left + cfg.bi_right);
    const double a = u_left + k * b / cfg.bi_left;
    double worst = 0.0;
    const Field& last = traj.states.back();
    for (std::size_t j = 0; j < last.size(); ++j) {
        worst = std::max(worst, std::abs(last[j] - (a + b * cfg.grid.x(j))));
    }
    return {worst < 1e-6, fmt("max nodal gap to the closed-form line = %.2e", worst)};
}

// ---------------------------------------------------------------- criterion 5

double trapezoid_mean(const std::function<double(double)>& f, double period, int n) {
    double sum = 0.5 * (f(0.0) + f(period));
    for (int i = 1; i < n; ++i) {
        sum += f(period * static_cast<double>(i) / static_cast<double>(n));
    }
    return sum / static_cast<double>(n);
}

Outcome check_candidate_averages() {
    const double tau = 12.0;
    const std::vector<FluctuationModel> models = {
        {FluctuationKind::HeatI, {0.3, 0.8}, tau},
        {FluctuationKind::HeatII, {0.2, 0.5}, tau},
        {FluctuationKind::HmV, {0.1, -0.2, 0.15, 0.35}, tau},
        {FluctuationKind::HmUI, {0.05, 0.12, -0.08, 0.5}, tau},
        {FluctuationKind::HmUII, {0.4, 0.9}, tau},
        {FluctuationKind::HmUIII, {0.2, 0.1, 0.6, -0.1, 0.8, 0.4}, tau},
    };
    const int n_quad = 10000;
    const double hx = 1e-5;
    const double ht = 1e-5 * tau;
    double worst_mean = 0.0, worst_product = 0.0;

    for (const auto& m : models) {
        for (int i = 0; i <= 10; ++i) {
            const double x = static_cast<double>(i) / 10.0;
            const double mean =
                trapezoid_mean([&](double t) { return m.eval(x, t); }, tau, n_quad);
            worst_mean = std::max(worst_mean, std::abs(mean));

            const double q_dx = trapezoid_mean(
                [&](double t) {
                    return m.eval(x, t) * (m.eval(x + hx, t) - m.eval(x - hx, t)) / (2.0 * hx);
                },
                tau, n_quad);
            worst_product = std::max(worst_product, std::abs(q_dx - avg_self_dx(m, x)));

            const double q_dt = trapezoid_mean(
                [&](double t) {
                    return m.eval(x, t) * (m.eval(x, t + ht) - m.eval(x, t - ht)) / (2.0 * ht);
                },
                tau, n_quad);
            worst_product = std::max(worst_product, std::abs(q_dt - avg_self_dt(m, x)));
        }
    }

    const FluctuationModel& va = models[2];
    const FluctuationModel& ub = models[4];
    for (int i = 0; i <= 10; ++i) {
        const double x = static_cast<double>(i) / 10.0;
        const double q_cross = trapezoid_mean(
            [&](double t) {
                return va.eval(x, t) * (ub.eval(x + hx, t) - ub.eval(x - hx, t)) / (2.0 * hx);
            },
            tau, n_quad);
        worst_product = std::max(worst_product, std::abs(q_cross - avg_cross_dx(va, ub, x)));
        const double q_cross_dt = trapezoid_mean(
            [&](double t) {
                return va.eval(x, t) * (ub.eval(x, t + ht) - ub.eval(x, t - ht)) / (2.0 * ht);
            },
            tau, n_quad);
        worst_product = std::max(worst_product, std::abs(q_cross_dt - avg_cross_dt(va, ub, x)));
    }

    return {worst_mean < 1e-12 && worst_product < 1e-8,
            fmt("max |period mean| = %.2e, max closed-form vs quadrature gap = %.2e", worst_mean,
                worst_product)};
}

// ---------------------------------------------------------------- criterion 6

Outcome check_calibration_recovery() {
    // Single-field recovery from data generated by the reduced model itself.
    HeatConfig cfg;
    cfg.grid = SpaceGrid(51);
    cfg.fo_t = 0.05;
    cfg.bi_left = 2.65;
    cfg.bi_right = 1.42;
    cfg.c_poly = PropertyPolynomial{0.2, 0.1, 0.0};
    cfg.k_poly = PropertyPolynomial{0.051, 0.01, 0.0};
    cfg.admissible_lo = 0.5;
    cfg.admissible_hi = 1.5;
    cfg.bc.left_temp = sinusoid_signal(1.0, 0.05, 24.0, 0.0, 400.0);
    cfg.bc.right_temp = constant_signal(1.0, 400.0);

    const double tau_h = 12.0;
    const std::vector<double> truth_h = {0.2, 3.0};
    const FluctuationModel truth(FluctuationKind::HeatII, truth_h, tau_h);

    HeatCalibrationProblem prob;
    prob.config = cfg;
    prob.initial = Field(51, 1.0);
    prob.tau_list = {tau_h};
    prob.kinds = {FluctuationKind::HeatII};
    prob.t1_star = 48.0;
    prob.dt_macro_star = 1.0;
    prob.n_starts = 3;
    prob.seed = 91;
    prob.jobs = 1;
    {
        const HeatConfig avg = averaged_heat_config(cfg, tau_h);
        const HeatArmRhs rhs(avg, truth);
        const StepperSpec spec{StepperKind::Rkl1, avg.dt_exp(), 1000};
        const auto bar = integrate(rhs, prob.initial, 0.0, prob.t1_star, 1.0, spec, 1);
        prob.reference.times = bar.times;
        prob.reference.wall_time_s = std::max(bar.wall_time_s, 1e-9);
        for (std::size_t i = 0; i < bar.size(); ++i) {
            prob.reference.states.push_back(
                reconstruct(bar.states[i], truth, cfg.grid, bar.times[i]));
        }
    }
    const CalibrationResult heat_res = offline_calibrate(prob);
    double heat_gap = 1e30;
    if (heat_res.cells.size() == 1 && heat_res.cells[0].converged) {
        heat_gap = 0.0;
        for (std::size_t k = 0; k < truth_h.size(); ++k) {
            heat_gap = std::max(heat_gap, std::abs(heat_res.cells[0].params[k] - truth_h[k]));
        }
    }

    // Joint recovery for the coupled pair.
    HmConfig hm;
    hm.grid = SpaceGrid(51);
    hm.fo_m = 0.004;
    hm.fo_t = 0.0214;
    hm.gamma = 0.566;
    hm.delta = 2.94e-14;
    hm.d_poly = PropertyPolynomial{1.0, 0.0127, 0.18868};
    hm.c_poly = PropertyPolynomial{1.0, 1.9788, 0.0};
    hm.k_poly = PropertyPolynomial{1.0, 4.4167, 0.0};
    hm.bc.left_temp = sinusoid_signal(1.0, 0.02, 24.0, 0.0, 400.0);
    hm.bc.right_temp = constant_signal(1.0, 400.0);
    hm.bc.left_moist = sinusoid_signal(1.0, 0.01, 24.0, 0.0, 400.0);
    hm.bc.right_moist = constant_signal(1.0, 400.0);

    const double tau_hm = 6.0;
    const std::vector<double> truth_u = {0.2, 3.0};
    const std::vector<double> truth_v = {0.012, -0.01, 0.006, 0.35};
    const FluctuationModel u_truth(FluctuationKind::HmUII, truth_u, tau_hm);
    const FluctuationModel v_truth(FluctuationKind::HmV, truth_v, tau_hm);

    HmCalibrationProblem hprob;
    hprob.config = hm;
    hprob.initial.u = Field(51, 1.0);
    hprob.initial.v = Field(51, 1.0);
    hprob.tau_list = {tau_hm};
    hprob.pairs = {HmKindPair{FluctuationKind::HmUII, FluctuationKind::HmV}};
    hprob.t1_star = 48.0;
    hprob.dt_macro_star = 1.0;
    hprob.n_starts = 3;
    hprob.seed = 91;
    hprob.jobs = 1;
    {
        const HmConfig avg = averaged_hm_config(hm, tau_hm);
        const HmArmRhs rhs(avg, v_truth, u_truth);
        const HmDirichletPin pin{&avg};
        const StepperSpec spec{StepperKind::Rkl1, avg.dt_exp(), 1000};
        const auto bar = integrate(rhs, hprob.initial, 0.0, hprob.t1_star, 1.0, spec, 1, pin);
        hprob.reference.times = bar.times;
        hprob.reference.wall_time_s = std::max(bar.wall_time_s, 1e-9);
        for (std::size_t i = 0; i < bar.size(); ++i) {
            hprob.reference.states.push_back(
                reconstruct_hm(bar.states[i], v_truth, u_truth, hm.grid, bar.times[i]));
        }
    }
    const CalibrationResult hm_res = offline_calibrate(hprob);
    double hm_gap = 1e30;
    if (hm_res.cells.size() == 1 && hm_res.cells[0].converged) {
        std::vector<double> truth_joint = truth_u;
        truth_joint.insert(truth_joint.end(), truth_v.begin(), truth_v.end());
        hm_gap = 0.0;
        for (std::size_t k = 0; k < truth_joint.size(); ++k) {
            hm_gap = std::max(hm_gap, std::abs(hm_res.cells[0].params[k] - truth_joint[k]));
        }
    }

    return {heat_gap < 1e-3 && hm_gap < 1e-3,
            fmt("recovered parameter gaps: single-field %.2e, coupled pair %.2e "
                "(threshold 1e-3)",
                heat_gap, hm_gap)};
}

// ---------------------------------------------------------------- criterion 7

Outcome check_fit_error_trend() {
    const BuiltRun run = build_run(preset_heat());
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
    prob.seed = run.seed;
    prob.jobs = hw_jobs();
    prob.n_starts = run.n_starts;
    const CalibrationResult res = offline_calibrate(prob);

    std::vector<double> best(prob.tau_list.size(), 1e30);
    for (const auto& cell : res.cells) {
        if (!cell.converged) continue;
        for (std::size_t t = 0; t < prob.tau_list.size(); ++t) {
            if (cell.tau_star == prob.tau_list[t]) best[t] = std::min(best[t], cell.eps2);
        }
    }
    bool increasing = true;
    std::string values;
    for (std::size_t t = 0; t < best.size(); ++t) {
        if (best[t] >= 1e29) increasing = false;
        if (t > 0 && !(best[t] > best[t - 1])) increasing = false;
        values += (t ? ", " : "") + fmt("%.4g", best[t]);
    }
    return {increasing, "best fit error over growing windows: " + values};
}

// ---------------------------------------------------------------- criterion 8

Outcome check_decoupling() {
    HmConfig cfg;
    cfg.grid = SpaceGrid(101);
    cfg.fo_m = 0.004;
    cfg.fo_t = 0.0214;
    cfg.gamma = 0.0;
    cfg.delta = 0.0;
    cfg.d_poly = PropertyPolynomial{0.8, 0.0, 0.0};
    cfg.c_poly = PropertyPolynomial{1.2, 0.0, 0.0};
    cfg.k_poly = PropertyPolynomial{0.9, 0.0, 0.0};
    cfg.bc.left_temp = sinusoid_signal(1.0, 0.03, 3.7, 0.0, 10.0);
    cfg.bc.right_temp = sinusoid_signal(1.0, 0.02, 3.0, 0.5, 10.0);
    cfg.bc.left_moist = sinusoid_signal(1.0, 0.01, 2.5, 0.0, 10.0);
    cfg.bc.right_moist = sinusoid_signal(1.0, 0.015, 4.0, 1.0, 10.0);

    const std::size_t n = cfg.grid.n_nodes;
    const double dx2 = cfg.grid.dx_star * cfg.grid.dx_star;
    const double dt = 0.4 * cfg.dt_exp();

    HmState coupled;
    coupled.u.resize(n);
    coupled.v.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double x = cfg.grid.x(j);
        coupled.u[j] = 1.0 + 0.1 * std::sin(3.14159265358979 * x);
        coupled.v[j] = 1.0 - 0.05 * x;
    }
    Field su = coupled.u, sv = coupled.v;

    HmCmRhs rhs(cfg);
    HmDirichletPin pin{&cfg};
    pin(coupled, 0.0);
    su[0] = coupled.u[0];
    su[n - 1] = coupled.u[n - 1];
    sv[0] = coupled.v[0];
    sv[n - 1] = coupled.v[n - 1];

    const double alpha_u = cfg.fo_t * 0.9 / 1.2; // k* / c* with both constant
    const double alpha_v = cfg.fo_m * 0.8;
    double worst = 0.0;
    for (int step = 0; step < 1000; ++step) {
        const double t_next = dt * static_cast<double>(step + 1);
        coupled = euler_step(rhs, coupled, dt * static_cast<double>(step), dt);
        pin(coupled, t_next);

        Field nu = su, nv = sv;
        for (std::size_t j = 1; j + 1 < n; ++j) {
            nu[j] = su[j] + dt * alpha_u * (su[j + 1] - 2.0 * su[j] + su[j - 1]) / dx2;
            nv[j] = sv[j] + dt * alpha_v * (sv[j + 1] - 2.0 * sv[j] + sv[j - 1]) / dx2;
        }
        nu[0] = cfg.bc.left_temp.sample(t_next);
        nu[n - 1] = cfg.bc.right_temp.sample(t_next);
        nv[0] = cfg.bc.left_moist.sample(t_next);
        nv[n - 1] = cfg.bc.right_moist.sample(t_next);
        su = nu;
        sv = nv;

        for (std::size_t j = 0; j < n; ++j) {
            worst = std::max(worst, std::abs(coupled.u[j] - su[j]));
            worst = std::max(worst, std::abs(coupled.v[j] - sv[j]));
        }
        if (worst > 1e-12) break;
    }
    return {worst <= 1e-12,
            fmt("max per-step gap to independent scalar marches = %.2e over 1000 steps", worst)};
}

// ---------------------------------------------------------------- criterion 9

Outcome check_coupled_tolerance() {
    const BuiltRun run = build_run(preset_re_wall());
    const double tau = 6.0;
    const StepperSpec spec{run.stepper, run.hm.dt_exp(), run.max_stages};

    // Fit the preset's candidate pair on the opening stretch first.
    HmCalibrationProblem prob;
    prob.config = run.hm;
    prob.initial = run.hm_initial;
    {
        HmCmRhs rhs(run.hm);
        HmDirichletPin pin{&run.hm};
        prob.reference =
            integrate(rhs, run.hm_initial, 0.0, run.t1_star, run.dt_star, spec, 1, pin);
    }
    prob.tau_list = {tau};
    prob.pairs = {HmKindPair{run.arm_u.kind, run.arm_v.kind}};
    prob.t1_star = run.t1_star;
    prob.dt_macro_star = run.dt_star;
    prob.n_starts = 3;
    prob.seed = run.seed;
    prob.jobs = hw_jobs();
    const CalibrationResult res = offline_calibrate(prob);
    if (res.cells.size() != 1 || !res.cells[0].converged) {
        return {false, "calibration of the candidate pair did not converge"};
    }
    const std::size_t nu = param_count(run.arm_u.kind);
    const std::vector<double> u_params(res.cells[0].params.begin(),
                                       res.cells[0].params.begin() + nu);
    const std::vector<double> v_params(res.cells[0].params.begin() + nu,
                                       res.cells[0].params.end());

    const double horizon = 720.0; // 30 days
    HmCmRhs rhs(run.hm);
    HmDirichletPin pin{&run.hm};
    const auto ref = integrate(rhs, run.hm_initial, 0.0, horizon, 1.0, spec, 1, pin);
    const auto ref_split = split_hm(ref);
    std::vector<double> x_star(run.hm.grid.n_nodes);
    for (std::size_t j = 0; j < x_star.size(); ++j) x_star[j] = run.hm.grid.x(j);

    const FluctuationModel u_model(run.arm_u.kind, u_params, tau);
    const FluctuationModel v_model(run.arm_v.kind, v_params, tau);
    const HmConfig avg = averaged_hm_config(run.hm, tau);
    HmArmRhs arm(avg, v_model, u_model);
    HmDirichletPin apin{&avg};

    double max_u = 0.0, max_v = 0.0;
    for (int dt_h = 1; dt_h <= 5; ++dt_h) {
        const auto bar = integrate(arm, run.hm_initial, 0.0, horizon,
                                   static_cast<double>(dt_h), spec, 1, apin);
        Trajectory<HmState> recon;
        recon.times = bar.times;
        for (std::size_t i = 0; i < bar.size(); ++i) {
            recon.states.push_back(
                reconstruct_hm(bar.states[i], v_model, u_model, run.hm.grid, bar.times[i]));
        }
        const auto recon_split = split_hm(recon);
        max_u = std::max(max_u,
                         compare_trajectories(ref_split.u, recon_split.u, x_star).eta_inf_pct);
        max_v = std::max(max_v,
                         compare_trajectories(ref_split.v, recon_split.v, x_star).eta_inf_pct);
    }
    return {max_u < 2.0 && max_v < 2.0,
            fmt("30-day sweep, steps 1..5 h: max relative error u = %.3f%%, v = %.3f%% "
                "(threshold 2%%)",
                max_u, max_v)};
}

// --------------------------------------------------------------- criterion 10

Outcome check_wall_time_ratio() {
    // Same macro step for both models, so the averaged model carries the same
    // stage count plus its source terms. Best-of-three timings.
    double rho_heat = 0.0, rho_hm = 0.0;
    {
        KvMap m = preset_heat();
        m["time.horizon_hours"] = "720";
        const BuiltRun run = build_run(m);
        const StepperSpec spec{run.stepper, run.heat.dt_exp(), run.max_stages};
        HeatCmRhs cm(run.heat);
        const FluctuationModel model(run.arm_u.kind, run.arm_u.params, run.tau_star);
        const HeatConfig avg = averaged_heat_config(run.heat, run.tau_star);
        HeatArmRhs arm(avg, model);
        double wall_cm = 1e30, wall_arm = 1e30;
        for (int rep = 0; rep < 3; ++rep) {
            wall_cm = std::min(
                wall_cm,
                integrate(cm, run.heat_initial, 0.0, 720.0, 1.0, spec, 24).wall_time_s);
            wall_arm = std::min(
                wall_arm,
                integrate(arm, run.heat_initial, 0.0, 720.0, 1.0, spec, 24).wall_time_s);
        }
        rho_heat = 100.0 * wall_arm / wall_cm;
    }
    {
        const BuiltRun run = build_run(preset_re_wall());
        const StepperSpec spec{run.stepper, run.hm.dt_exp(), run.max_stages};
        HmCmRhs cm(run.hm);
        HmDirichletPin pin{&run.hm};
        const FluctuationModel u_model(run.arm_u.kind, run.arm_u.params, run.tau_star);
        const FluctuationModel v_model(run.arm_v.kind, run.arm_v.params, run.tau_star);
        const HmConfig avg = averaged_hm_config(run.hm, run.tau_star);
        HmArmRhs arm(avg, v_model, u_model);
        HmDirichletPin apin{&avg};
        double wall_cm = 1e30, wall_arm = 1e30;
        for (int rep = 0; rep < 3; ++rep) {
            wall_cm = std::min(
                wall_cm,
                integrate(cm, run.hm_initial, 0.0, 720.0, 1.0, spec, 24, pin).wall_time_s);
            wall_arm = std::min(
                wall_arm,
                integrate(arm, run.hm_initial, 0.0, 720.0, 1.0, spec, 24, apin).wall_time_s);
        }
        rho_hm = 100.0 * wall_arm / wall_cm;
    }
    return {rho_heat < 100.0 && rho_hm < 100.0,
            fmt("equal-step wall-time ratio averaged/complete: single-field %.1f%%, "
                "coupled %.1f%% (must both be under 100%%)",
                rho_heat, rho_hm)};
}

// --------------------------------------------------------------- criterion 11

Outcome check_resistance() {
    const double r0 = design_resistance(0.3, 0.6);
    const bool exact = (r0 == 0.5);

    ReferenceScales sc;
    sc.length_ref_m = 0.3;
    sc.t_ref_s = 3600.0;
    sc.temp_ref_k = 300.15;
    sc.moisture_ref = 0.53;
    sc.c_ref = 1730.0 * 648.0;
    sc.k_ref = 0.6;
    sc.d_theta_ref = 1.0e-7;

    HmConfig cfg;
    cfg.grid = SpaceGrid(101);
    cfg.fo_m = fourier_number_mass(sc);
    cfg.fo_t = fourier_number(sc);
    cfg.gamma = 0.0;
    cfg.delta = 0.0;
    cfg.d_poly = PropertyPolynomial{1.0, 0.0, 0.0};
    cfg.c_poly = PropertyPolynomial{1.0, 1.9788, 0.0};
    cfg.k_poly = PropertyPolynomial{1.0, 0.0, 0.0};
    cfg.k_tm_phys = 4.0e-18;
    cfg.constants.latent_heat = 2.5e6;
    cfg.bc.left_temp = constant_signal(1.05, 1.0e9);
    cfg.bc.right_temp = constant_signal(0.95, 1.0e9);
    cfg.bc.left_moist = constant_signal(1.0, 1.0e9);
    cfg.bc.right_moist = constant_signal(1.0, 1.0e9);

    HmCmRhs rhs(cfg);
    HmDirichletPin pin{&cfg};
    const StepperSpec spec{StepperKind::Rkl1, cfg.dt_exp(), 1000};
    HmState init;
    init.u.assign(101, 1.0);
    init.v.assign(101, 1.0);
    const auto traj = integrate(rhs, init, 0.0, 720.0, 1.0, spec, 1, pin);

    std::vector<double> hours(traj.size()), dt_k(traj.size()), jqm(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        hours[i] = traj.times[i]; // t_ref is one hour
        dt_k[i] = (traj.states[i].u.front() - traj.states[i].u.back()) * sc.temp_ref_k;
        jqm[i] = total_flux(cfg, traj.states[i], sc).j_qm;
    }
    const auto windows = thermal_resistance_effective(hours, dt_k, jqm);
    double r_eff = 0.0;
    bool valid = false;
    for (const auto& w : windows) {
        if (w.valid) {
            r_eff = w.r_m2k_w;
            valid = true;
        }
    }
    const double rel = valid ? std::abs(r_eff - r0) / r0 : 1.0;
    return {exact && valid && rel < 1e-2,
            fmt("standard value %.3f (exact %d), steady effective value %.4f, gap %.3f%%", r0,
                exact ? 1 : 0, r_eff, 100.0 * rel)};
}

// --------------------------------------------------------------- criterion 12

Outcome check_uncertainty() {
    UncertaintySpec spec;
    const auto temp = measurement_uncertainty({20.0}, {0.0}, MeasuredKind::TemperatureC, spec);
    const auto moist =
        measurement_uncertainty({0.4}, {0.0}, MeasuredKind::MoistureContent, spec);
    const double gap_t = std::abs(temp.sigma[0] - 0.3);
    const double gap_m = std::abs(moist.sigma[0] - 0.01);

    UncertaintySpec near = spec, far = spec;
    near.placement_dx_m = 5.0e-3;
    far.placement_dx_m = 2.0e-2;
    const auto band_near =
        measurement_uncertainty({20.0}, {100.0}, MeasuredKind::TemperatureC, near);
    const auto band_far =
        measurement_uncertainty({20.0}, {100.0}, MeasuredKind::TemperatureC, far);
    const bool monotone = band_far.sigma[0] > band_near.sigma[0];

    return {gap_t < 1e-12 && gap_m < 1e-12 && monotone,
            fmt("sigma gaps: temperature %.1e, moisture %.1e; larger placement error widens "
                "the band: %d",
                gap_t, gap_m, monotone ? 1 : 0)};
}

} // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double limit_s;
        std::function<Outcome()> fn;
    };
    const std::vector<Criterion> criteria = {
        {1, "preset diffusion group echo", 1.0, check_preset_groups},
        {2, "one-stage super step equals the explicit step", 1.0, check_one_stage_degeneracy},
        {3, "stability edges of both steppers", 10.0, check_stability_edges},
        {4, "steady profile against the closed form", 30.0, check_steady_profile},
        {5, "zero-mean candidates and averaged products", 5.0, check_candidate_averages},
        {6, "parameter recovery from generated data", 120.0, check_calibration_recovery},
        {7, "fit error grows with the averaging window", 300.0, check_fit_error_trend},
        {8, "coupled solver decouples cleanly", 30.0, check_decoupling},
        {9, "averaged coupled model stays under 2 percent", 600.0, check_coupled_tolerance},
        {10, "equal-step wall-time ratio below 100 percent", 600.0, check_wall_time_ratio},
        {11, "standard and effective resistance", 60.0, check_resistance},
        {12, "measurement uncertainty hand values", 1.0, check_uncertainty},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.fn();
        } catch (const std::exception& e) {
            out = {false, std::string("unexpected exception: ") + e.what()};
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_budget = elapsed < c.limit_s;
        const bool pass = out.pass && in_budget;
        if (!pass) ++failures;
        std::printf("[%s] %2d %-48s %s [%.2f s, limit %.0f s]\n", pass ? "PASS" : "FAIL", c.id,
                    c.name, out.detail.c_str(), elapsed, c.limit_s);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
                criteria.size());
    return failures;
}
