#ifndef ARMSIM_ANALYSIS_HPP
#define ARMSIM_ANALYSIS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "core.hpp"
#include "errors.hpp"
#include "integrate.hpp"

namespace armsim {

/// Per-node error profile between a reference and a test trajectory.
/// eps2(x): RMS over time of the pointwise difference.
/// eta2(x): eps2(x) normalized by the reference's span (max - min) at that
///          node, so the measure is invariant under affine rescaling of both
///          inputs. eta values are fractions; *_pct fields scale by 100.
struct ErrorReport {
    std::vector<double> x_star;
    std::vector<double> eps2;
    std::vector<double> eta2; ///< NaN at nodes where the reference has zero range
    std::vector<std::size_t> zero_range_nodes; ///< excluded from eta_inf
    double eps_inf = 0.0;
    double eta_inf = 0.0;
    double eta_inf_pct = 0.0;
};

namespace detail {

/// Linear interpolation of a trajectory's state at time t (per node).
inline Field interp_state(const Trajectory<Field>& traj, double t) {
    const auto& ts = traj.times;
    auto it = std::lower_bound(ts.begin(), ts.end(), t);
    if (it == ts.end()) return traj.states.back();
    std::size_t hi = static_cast<std::size_t>(it - ts.begin());
    if (ts[hi] == t || hi == 0) return traj.states[hi];
    const std::size_t lo = hi - 1;
    const double w = (t - ts[lo]) / (ts[hi] - ts[lo]);
    Field out(traj.states[lo].size());
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] = traj.states[lo][j] + w * (traj.states[hi][j] - traj.states[lo][j]);
    }
    return out;
}

} // namespace detail

/// Compare trajectories sharing one grid. The test trajectory is resampled
/// onto the reference instants (linear interpolation); instants outside the
/// test's span are skipped. Throws when the overlap is empty or node counts
/// differ; constant reference nodes (zero span) are flagged and left out of
/// the eta maxima.
inline ErrorReport compare_trajectories(const Trajectory<Field>& ref, const Trajectory<Field>& test,
                                        const std::vector<double>& x_star) {
    if (ref.size() == 0 || test.size() == 0) throw ConfigError("cannot compare empty trajectories");
    const std::size_t n = ref.states.front().size();
    if (test.states.front().size() != n) {
        throw ConfigError("trajectory node counts differ: " + std::to_string(n) + " vs " +
                          std::to_string(test.states.front().size()));
    }
    if (x_star.size() != n) throw ConfigError("coordinate vector does not match node count");

    std::vector<double> sum_sq(n, 0.0);
    std::vector<double> ref_min(n, std::numeric_limits<double>::infinity());
    std::vector<double> ref_max(n, -std::numeric_limits<double>::infinity());
    std::size_t n_times = 0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const double t = ref.times[i];
        if (t < test.times.front() - 1e-12 || t > test.times.back() + 1e-12) continue;
        const Field test_state = detail::interp_state(test, std::clamp(t, test.times.front(), test.times.back()));
        const Field& ref_state = ref.states[i];
        for (std::size_t j = 0; j < n; ++j) {
            const double d = ref_state[j] - test_state[j];
            sum_sq[j] += d * d;
            ref_min[j] = std::min(ref_min[j], ref_state[j]);
            ref_max[j] = std::max(ref_max[j], ref_state[j]);
        }
        ++n_times;
    }
    if (n_times == 0) throw ConfigError("trajectories share no overlapping time instants");

    ErrorReport rep;
    rep.x_star = x_star;
    rep.eps2.resize(n);
    rep.eta2.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        rep.eps2[j] = std::sqrt(sum_sq[j] / static_cast<double>(n_times));
        rep.eps_inf = std::max(rep.eps_inf, rep.eps2[j]);
        const double span = ref_max[j] - ref_min[j];
        if (!(span > 0.0)) {
            // Relative error undefined there; the node is excluded from the
            // maximum rather than failing the whole comparison.
            rep.eta2[j] = std::numeric_limits<double>::quiet_NaN();
            rep.zero_range_nodes.push_back(j);
            continue;
        }
        rep.eta2[j] = rep.eps2[j] / span;
        rep.eta_inf = std::max(rep.eta_inf, rep.eta2[j]);
    }
    rep.eta_inf_pct = 100.0 * rep.eta_inf;
    return rep;
}

/// Scalar-series variant (one node), used for flux series.
inline ErrorReport compare_series(const std::vector<double>& ref_times,
                                  const std::vector<double>& ref_values,
                                  const std::vector<double>& test_times,
                                  const std::vector<double>& test_values) {
    if (ref_times.size() != ref_values.size() || test_times.size() != test_values.size()) {
        throw ConfigError("series time/value lengths differ");
    }
    Trajectory<Field> ref, test;
    ref.times = ref_times;
    test.times = test_times;
    ref.states.reserve(ref_values.size());
    for (double v : ref_values) ref.states.push_back(Field{v});
    test.states.reserve(test_values.size());
    for (double v : test_values) test.states.push_back(Field{v});
    return compare_trajectories(ref, test, {0.0});
}

/// Integrated conduction load per fixed-length window [J/m^2]: trapezoid of
/// the flux series over consecutive windows counted from the series start.
/// A trailing partial window integrates over its actual coverage.
struct LoadWindow {
    double t_start_hours = 0.0;
    double t_end_hours = 0.0;
    double energy_j_m2 = 0.0;
};

inline std::vector<LoadWindow> conduction_loads(const std::vector<double>& times_hours,
                                                const std::vector<double>& flux_wm2,
                                                double window_days = 30.0) {
    if (times_hours.size() != flux_wm2.size()) throw ConfigError("flux series lengths differ");
    if (times_hours.size() < 2) throw ConfigError("flux series needs at least 2 samples");
    if (!(window_days > 0.0)) throw ConfigError("load window must be positive");
    const double window_h = window_days * 24.0;
    std::vector<LoadWindow> out;
    const double t0 = times_hours.front();
    LoadWindow cur{t0, t0 + window_h, 0.0};
    for (std::size_t i = 1; i < times_hours.size(); ++i) {
        double seg_lo = times_hours[i - 1];
        const double seg_hi = times_hours[i];
        if (!(seg_hi > seg_lo)) throw ConfigError("flux series times must increase");
        double f_lo = flux_wm2[i - 1];
        // Split segments at window boundaries so each window integrates
        // exactly its own span.
        while (seg_hi > cur.t_end_hours + 1e-12) {
            const double w = (cur.t_end_hours - seg_lo) / (seg_hi - seg_lo);
            const double f_cut = f_lo + w * (flux_wm2[i] - f_lo);
            cur.energy_j_m2 += 0.5 * (f_lo + f_cut) * (cur.t_end_hours - seg_lo) * 3600.0;
            out.push_back(cur);
            cur = LoadWindow{cur.t_end_hours, cur.t_end_hours + window_h, 0.0};
            seg_lo = out.back().t_end_hours;
            f_lo = f_cut;
        }
        cur.energy_j_m2 += 0.5 * (f_lo + flux_wm2[i]) * (seg_hi - seg_lo) * 3600.0;
    }
    cur.t_end_hours = std::min(cur.t_end_hours, times_hours.back());
    if (cur.t_end_hours > cur.t_start_hours) out.push_back(cur);
    return out;
}

/// Daily effective thermal resistance: time-mean of |dT_surface / J_qm| over
/// each window, trapezoid over sample pairs whose flux magnitudes both clear
/// `flux_floor`. Windows with no valid pair are flagged.
struct ResistanceWindow {
    double t_start_hours = 0.0;
    double t_end_hours = 0.0;
    double r_m2k_w = 0.0;
    bool valid = false;
};

inline std::vector<ResistanceWindow> thermal_resistance_effective(
    const std::vector<double>& times_hours, const std::vector<double>& delta_t_kelvin,
    const std::vector<double>& j_qm_wm2, double window_days = 1.0, double flux_floor = 1e-6) {
    if (times_hours.size() != delta_t_kelvin.size() || times_hours.size() != j_qm_wm2.size()) {
        throw ConfigError("resistance series lengths differ");
    }
    if (times_hours.size() < 2) throw ConfigError("resistance series needs at least 2 samples");
    const double window_h = window_days * 24.0;
    const double t0 = times_hours.front();
    std::vector<ResistanceWindow> out;
    auto window_index = [&](double t) {
        return static_cast<std::size_t>(std::floor((t - t0) / window_h + 1e-12));
    };
    const std::size_t n_windows = window_index(times_hours.back() - 1e-9) + 1;
    std::vector<double> integral(n_windows, 0.0);
    std::vector<double> covered(n_windows, 0.0);
    for (std::size_t i = 1; i < times_hours.size(); ++i) {
        if (std::abs(j_qm_wm2[i - 1]) < flux_floor || std::abs(j_qm_wm2[i]) < flux_floor) continue;
        const std::size_t w = window_index(times_hours[i - 1]);
        if (w >= n_windows) break;
        const double r_lo = std::abs(delta_t_kelvin[i - 1] / j_qm_wm2[i - 1]);
        const double r_hi = std::abs(delta_t_kelvin[i] / j_qm_wm2[i]);
        const double dt = times_hours[i] - times_hours[i - 1];
        integral[w] += 0.5 * (r_lo + r_hi) * dt;
        covered[w] += dt;
    }
    for (std::size_t w = 0; w < n_windows; ++w) {
        ResistanceWindow rw;
        rw.t_start_hours = t0 + static_cast<double>(w) * window_h;
        rw.t_end_hours = rw.t_start_hours + window_h;
        if (covered[w] > 0.0) {
            rw.r_m2k_w = integral[w] / covered[w];
            rw.valid = true;
        }
        out.push_back(rw);
    }
    return out;
}

/// Design (steady, dry) resistance R0 = l / k_T at the reference state.
inline double design_resistance(double length_m, double k_w_mk) {
    if (!(length_m > 0.0) || !(k_w_mk > 0.0)) throw ConfigError("R0 needs positive l and k");
    return length_m / k_w_mk;
}

/// Measurement uncertainty model: sensor accuracy proportional to the
/// measured value combined with a placement error proportional to the local
/// spatial gradient, sigma_m = sqrt(sigma_S^2 + sigma_P^2).
struct UncertaintySpec {
    double sensor_rel_temp = 1.5e-2;  ///< relative accuracy on temperature in C
    double sensor_rel_moist = 2.5e-2; ///< relative accuracy on moisture content
    double placement_dx_m = 5.0e-3;   ///< sensor placement error [m]
};

enum class MeasuredKind { TemperatureC, MoistureContent };

struct UncertaintyBand {
    std::vector<double> value;
    std::vector<double> sigma;
    std::vector<double> lower;
    std::vector<double> upper;
};

/// `values`: measured series (C for temperature, fraction for moisture).
/// `gradients`: spatial gradient at the sensor plane in the same unit per
/// meter. Both share one length.
inline UncertaintyBand measurement_uncertainty(const std::vector<double>& values,
                                               const std::vector<double>& gradients,
                                               MeasuredKind kind,
                                               const UncertaintySpec& spec = {}) {
    if (values.size() != gradients.size()) throw ConfigError("uncertainty series lengths differ");
    const double rel = (kind == MeasuredKind::TemperatureC) ? spec.sensor_rel_temp
                                                            : spec.sensor_rel_moist;
    UncertaintyBand band;
    band.value = values;
    band.sigma.resize(values.size());
    band.lower.resize(values.size());
    band.upper.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double sigma_s = rel * std::abs(values[i]);
        const double sigma_p = std::abs(gradients[i]) * spec.placement_dx_m;
        band.sigma[i] = std::sqrt(sigma_s * sigma_s + sigma_p * sigma_p);
        band.lower[i] = values[i] - band.sigma[i];
        band.upper[i] = values[i] + band.sigma[i];
    }
    return band;
}

/// Normalized histogram density over [min, max] with equal-width bins,
/// rescaled so the trapezoid over bin centers integrates to one. A constant
/// series has no spread to bin; it comes back flagged degenerate.
struct Distribution {
    std::vector<double> bin_centers;
    std::vector<double> density;
    bool degenerate = false;
};

inline Distribution distribution_fn(const std::vector<double>& samples, std::size_t n_bins = 64) {
    if (samples.empty()) throw ConfigError("distribution needs at least one sample");
    if (n_bins < 2) throw ConfigError("distribution needs at least 2 bins");
    const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
    const double lo = *lo_it, hi = *hi_it;
    Distribution dist;
    if (!(hi > lo)) {
        dist.degenerate = true;
        dist.bin_centers = {lo};
        dist.density = {0.0};
        return dist;
    }
    const double width = (hi - lo) / static_cast<double>(n_bins);
    std::vector<double> counts(n_bins, 0.0);
    for (double s : samples) {
        auto b = static_cast<std::size_t>((s - lo) / width);
        if (b >= n_bins) b = n_bins - 1;
        counts[b] += 1.0;
    }
    dist.bin_centers.resize(n_bins);
    dist.density.resize(n_bins);
    for (std::size_t b = 0; b < n_bins; ++b) {
        dist.bin_centers[b] = lo + (static_cast<double>(b) + 0.5) * width;
        dist.density[b] = counts[b] / (static_cast<double>(samples.size()) * width);
    }
    double trapz = 0.0;
    for (std::size_t b = 1; b < n_bins; ++b) {
        trapz += 0.5 * (dist.density[b - 1] + dist.density[b]) * width;
    }
    if (trapz > 0.0) {
        for (double& d : dist.density) d /= trapz;
    }
    return dist;
}

/// Wall-clock comparison of a reduced run against its complete reference.
struct CpuReport {
    double wall_cm_s = 0.0;
    double wall_arm_s = 0.0;
    double rho_cpu_pct = 0.0;      ///< 100 * wall_arm / wall_cm
    double cm_s_per_day = 0.0;
    double arm_s_per_day = 0.0;
};

inline double rho_cpu(double wall_arm_s, double wall_cm_s) {
    if (!(wall_cm_s > 0.0)) throw ConfigError("reference wall time must be positive");
    return 100.0 * wall_arm_s / wall_cm_s;
}

inline double cpu_per_day(double wall_s, double simulated_days) {
    if (!(simulated_days > 0.0)) throw ConfigError("simulated span must be positive");
    return wall_s / simulated_days;
}

inline CpuReport cpu_metrics(double wall_cm_s, double wall_arm_s, double simulated_days) {
    CpuReport rep;
    rep.wall_cm_s = wall_cm_s;
    rep.wall_arm_s = wall_arm_s;
    rep.rho_cpu_pct = rho_cpu(wall_arm_s, wall_cm_s);
    rep.cm_s_per_day = cpu_per_day(wall_cm_s, simulated_days);
    rep.arm_s_per_day = cpu_per_day(wall_arm_s, simulated_days);
    return rep;
}

} // namespace armsim

#endif
