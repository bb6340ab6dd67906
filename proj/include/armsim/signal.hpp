#ifndef ARMSIM_SIGNAL_HPP
#define ARMSIM_SIGNAL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"
#include "errors.hpp"

namespace armsim {

enum class Interp {
    Linear,            ///< piecewise-linear between samples
    PiecewiseConstant, ///< left-hold between samples
};

/// Time series driving one boundary condition, in dimensionless time and
/// value. Sample times are strictly increasing; sampling outside the covered
/// span is an error (up to a round-off guard at the ends).
struct BoundarySignal {
    std::vector<double> times;
    std::vector<double> values;
    Interp interp = Interp::Linear;

    void validate() const {
        if (times.size() != values.size()) {
            throw ConfigError("signal has " + std::to_string(times.size()) + " times but " +
                              std::to_string(values.size()) + " values");
        }
        if (times.size() < 2) throw ConfigError("signal needs at least 2 samples");
        for (std::size_t i = 1; i < times.size(); ++i) {
            if (!(times[i] > times[i - 1])) {
                throw ConfigError("signal times must be strictly increasing (violated at sample " +
                                  std::to_string(i) + ")");
            }
        }
        for (double v : values) {
            if (!std::isfinite(v)) throw ConfigError("signal contains non-finite values");
        }
    }

    double t_first() const { return times.front(); }
    double t_last() const { return times.back(); }

    /// Native spacing; signals produced by the generators here are uniform.
    /// Returns the first spacing and checks uniformity within a round-off
    /// tolerance, which block averaging relies on.
    double native_spacing() const {
        const double h = times[1] - times[0];
        for (std::size_t i = 2; i < times.size(); ++i) {
            if (std::abs((times[i] - times[i - 1]) - h) > 1e-9 * std::max(1.0, std::abs(h))) {
                throw ConfigError("signal is not uniformly sampled");
            }
        }
        return h;
    }

    double sample(double t_star) const {
        const double span = t_last() - t_first();
        const double eps = 1e-9 * std::max(1.0, span);
        if (t_star < t_first() - eps || t_star > t_last() + eps) {
            throw ConfigError("sample time " + std::to_string(t_star) + " outside signal span [" +
                              std::to_string(t_first()) + ", " + std::to_string(t_last()) + "]");
        }
        const double t = std::clamp(t_star, t_first(), t_last());
        auto it = std::upper_bound(times.begin(), times.end(), t);
        if (it == times.begin()) return values.front();
        const std::size_t hi = static_cast<std::size_t>(it - times.begin());
        if (hi == times.size()) return values.back();
        const std::size_t lo = hi - 1;
        if (interp == Interp::PiecewiseConstant) return values[lo];
        const double w = (t - times[lo]) / (times[hi] - times[lo]);
        return values[lo] + w * (values[hi] - values[lo]);
    }

    /// Central-difference time derivative of the sampled signal, used for
    /// Dirichlet boundary tendencies. One-sided at the span ends.
    double derivative(double t_star) const {
        const double h = 1e-3 * (times[1] - times[0]);
        const double lo = std::max(t_first(), t_star - h);
        const double hi = std::min(t_last(), t_star + h);
        if (!(hi > lo)) return 0.0;
        return (sample(hi) - sample(lo)) / (hi - lo);
    }
};

/// Averaging period for the reduced model. tau must divide into the driving
/// signal's native sample spacing an integer number of times.
struct AveragingSpec {
    double tau_star = 0.0;

    // Config-time gate for native signals: the period must be an integer
    // multiple of the sample spacing and fit inside the span.
    void validate_against(const BoundarySignal& sig) const {
        if (!(tau_star > 0.0)) throw ConfigError("averaging period must be positive");
        const double h = sig.native_spacing();
        const double ratio = tau_star / h;
        if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
            throw ConfigError("averaging period " + std::to_string(tau_star) +
                              " is not an integer multiple of the signal spacing " +
                              std::to_string(h));
        }
        // n samples at spacing h cover n windows of width h, so allow one
        // spacing of slack: hourly data for one day ends at t = 23 h.
        if (!(sig.t_last() - sig.t_first() + h * (1.0 + 1e-9) >= tau_star)) {
            throw ConfigError("signal shorter than one averaging window");
        }
    }
};

/// Replace a signal by its non-overlapping window means. Windows are
/// [m*tau, (m+1)*tau) aligned to t* = 0; each mean is the arithmetic mean of
/// the native samples inside the window, anchored at the midpoint of the
/// window's actual coverage, with linear interpolation between anchors.
/// Trailing partial windows average over whatever samples they hold. Flat
/// extension samples are added at the span ends so the result covers the
/// same span as the input.
namespace detail {

// Averaged signals have irregular anchor spacing, so the ops themselves only
// need a positive period that fits in the span; the integer-multiple rule of
// AveragingSpec::validate_against applies to native signals at config time.
inline void check_window_fits(const BoundarySignal& sig, const AveragingSpec& spec) {
    if (!(spec.tau_star > 0.0)) throw ConfigError("averaging period must be positive");
    const double h = sig.times[1] - sig.times[0];
    const double span = sig.t_last() - sig.t_first();
    if (!(span + h + 1e-9 * std::max(1.0, spec.tau_star) >= spec.tau_star)) {
        throw ConfigError("signal shorter than one averaging window");
    }
}

} // namespace detail

inline BoundarySignal block_average(const BoundarySignal& sig, const AveragingSpec& spec) {
    sig.validate();
    detail::check_window_fits(sig, spec);
    const double tau = spec.tau_star;

    auto window_of = [tau](double t) {
        return static_cast<long long>(std::floor(t / tau + tau * 1e-12));
    };

    std::vector<double> anchor_t;
    std::vector<double> anchor_v;
    std::size_t i = 0;
    const std::size_t n = sig.times.size();
    while (i < n) {
        const long long m = window_of(sig.times[i]);
        double sum = 0.0;
        std::size_t count = 0;
        double t_lo = sig.times[i];
        double t_hi = sig.times[i];
        while (i < n && window_of(sig.times[i]) == m) {
            sum += sig.values[i];
            t_hi = sig.times[i];
            ++count;
            ++i;
        }
        anchor_t.push_back(0.5 * (t_lo + t_hi));
        anchor_v.push_back(sum / static_cast<double>(count));
    }

    BoundarySignal out;
    out.interp = Interp::Linear;
    if (anchor_t.front() > sig.t_first()) {
        out.times.push_back(sig.t_first());
        out.values.push_back(anchor_v.front());
    }
    for (std::size_t k = 0; k < anchor_t.size(); ++k) {
        out.times.push_back(anchor_t[k]);
        out.values.push_back(anchor_v[k]);
    }
    if (anchor_t.back() < sig.t_last()) {
        out.times.push_back(sig.t_last());
        out.values.push_back(anchor_v.back());
    }
    out.validate();
    return out;
}

/// Arithmetic mean of the native samples falling in [m*tau, (m+1)*tau),
/// exposed for tests and reports. Returns one value per non-empty window,
/// in window order.
inline std::vector<double> window_means(const BoundarySignal& sig, const AveragingSpec& spec) {
    sig.validate();
    detail::check_window_fits(sig, spec);
    const double tau = spec.tau_star;
    auto window_of = [tau](double t) {
        return static_cast<long long>(std::floor(t / tau + tau * 1e-12));
    };
    std::vector<double> means;
    std::size_t i = 0;
    while (i < sig.times.size()) {
        const long long m = window_of(sig.times[i]);
        double sum = 0.0;
        std::size_t count = 0;
        while (i < sig.times.size() && window_of(sig.times[i]) == m) {
            sum += sig.values[i];
            ++count;
            ++i;
        }
        means.push_back(sum / static_cast<double>(count));
    }
    return means;
}

/// One row of a two-column time series file: time_hours,value.
/// Lines starting with '#' and a leading header row are skipped.
inline BoundarySignal load_series(const std::string& path, ValueKind kind,
                                  const ReferenceScales& scales,
                                  Interp interp = Interp::Linear) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open series file '" + path + "'");
    BoundarySignal sig;
    sig.interp = interp;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        if (line_no == 1 && line.find("time_hours") != std::string::npos) continue;
        std::istringstream row(line);
        std::string t_tok, v_tok;
        if (!std::getline(row, t_tok, ',') || !std::getline(row, v_tok, ',')) {
            throw IoError(path + ":" + std::to_string(line_no) + ": expected 'time_hours,value'");
        }
        try {
            const double t_hours = std::stod(t_tok);
            const double value = std::stod(v_tok);
            sig.times.push_back(hours_to_t_star(t_hours, scales));
            sig.values.push_back(nondimensionalize(value, kind, scales));
        } catch (const std::exception&) {
            throw IoError(path + ":" + std::to_string(line_no) + ": malformed number");
        }
    }
    try {
        sig.validate();
    } catch (const ConfigError& e) {
        throw IoError(path + ": " + e.what());
    }
    return sig;
}

inline void write_series(const std::string& path, const BoundarySignal& sig,
                         ValueKind kind, const ReferenceScales& scales) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write series file '" + path + "'");
    out << "time_hours,value\n";
    char buf[64];
    for (std::size_t i = 0; i < sig.times.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", t_star_to_hours(sig.times[i], scales),
                      redimensionalize(sig.values[i], kind, scales));
        out << buf;
    }
}

/// Synthetic weather generator: annual sinusoid + diurnal sinusoid + seeded
/// uniform perturbation, sampled hourly. Deterministic for a given seed.
/// Values are in the physical unit named by `kind` before scaling.
struct SynthWeatherSpec {
    double mean = 0.0;
    double annual_amp = 0.0;
    double diurnal_amp = 0.0;
    double noise_amp = 0.0;
    double annual_phase_hours = 0.0;
    double diurnal_phase_hours = 0.0;
    ValueKind kind = ValueKind::Celsius;
    std::uint64_t seed_offset = 0;
};

inline constexpr double kHoursPerYear = 8760.0;
inline constexpr double kHoursPerDay = 24.0;
inline constexpr double kPi = 3.14159265358979323846;

inline BoundarySignal synth_weather(std::uint64_t seed, double duration_hours,
                                    const SynthWeatherSpec& spec,
                                    const ReferenceScales& scales) {
    if (!(duration_hours >= 1.0)) throw ConfigError("synthetic weather needs >= 1 hour");
    std::mt19937_64 rng(seed + spec.seed_offset);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const auto n_samples = static_cast<std::size_t>(std::ceil(duration_hours)) + 1;
    BoundarySignal sig;
    sig.interp = Interp::Linear;
    sig.times.reserve(n_samples);
    sig.values.reserve(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const double t_hours = static_cast<double>(i);
        double value = spec.mean;
        value += spec.annual_amp *
                 std::sin(2.0 * kPi * (t_hours - spec.annual_phase_hours) / kHoursPerYear);
        value += spec.diurnal_amp *
                 std::sin(2.0 * kPi * (t_hours - spec.diurnal_phase_hours) / kHoursPerDay);
        value += spec.noise_amp * unit(rng);
        sig.times.push_back(hours_to_t_star(t_hours, scales));
        sig.values.push_back(nondimensionalize(value, spec.kind, scales));
    }
    return sig;
}

/// Constant signal spanning [0, duration] in dimensionless time.
inline BoundarySignal constant_signal(double value, double duration_star) {
    BoundarySignal sig;
    sig.times = {0.0, std::max(duration_star, 1.0)};
    sig.values = {value, value};
    return sig;
}

/// Hourly-sampled sinusoid offset + amplitude * sin(2 pi (t* - phase) / period),
/// already in dimensionless value.
inline BoundarySignal sinusoid_signal(double offset, double amplitude, double period_star,
                                      double phase_star, double duration_star) {
    if (!(period_star > 0.0)) throw ConfigError("sinusoid period must be positive");
    const auto n_samples = static_cast<std::size_t>(std::ceil(std::max(duration_star, 1.0))) + 1;
    BoundarySignal sig;
    sig.times.reserve(n_samples);
    sig.values.reserve(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const double t = static_cast<double>(i);
        sig.times.push_back(t);
        sig.values.push_back(offset + amplitude * std::sin(2.0 * kPi * (t - phase_star) / period_star));
    }
    return sig;
}

} // namespace armsim

#endif
