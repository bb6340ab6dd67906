#ifndef ARMSIM_EMPIRICAL_HPP
#define ARMSIM_EMPIRICAL_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "errors.hpp"
#include "signal.hpp"

namespace armsim {

/// Families of separable fluctuation candidates u'(x, t) = phi(x) sin(2 pi t / tau).
/// Parameter layouts:
///   HeatI  : (amp, len)                   phi = amp (1 - x / len)
///   HeatII : (x0, len)                    phi = exp(-(x - x0) / len)
///   HmV    : (a0, a1, a2, xs)             phi = a0 + a1 cos(x / xs) + a2 sin(x / xs)
///   HmUI   : (a0, a1, a2, xs)             same form as HmV
///   HmUII  : (x0, len)                    same form as HeatII
///   HmUIII : (b1, xa, la, b2, xb, lb)     phi = b1 exp(-(x - xa)/la) + b2 exp(-(x - xb)/lb)
enum class FluctuationKind { HeatI, HeatII, HmV, HmUI, HmUII, HmUIII };

inline std::size_t param_count(FluctuationKind kind) {
    switch (kind) {
        case FluctuationKind::HeatI:
        case FluctuationKind::HeatII:
        case FluctuationKind::HmUII: return 2;
        case FluctuationKind::HmV:
        case FluctuationKind::HmUI: return 4;
        case FluctuationKind::HmUIII: return 6;
    }
    throw ConfigError("unreachable fluctuation kind");
}

inline std::string to_string(FluctuationKind kind) {
    switch (kind) {
        case FluctuationKind::HeatI: return "heat_i";
        case FluctuationKind::HeatII: return "heat_ii";
        case FluctuationKind::HmV: return "hm_v";
        case FluctuationKind::HmUI: return "hm_u_i";
        case FluctuationKind::HmUII: return "hm_u_ii";
        case FluctuationKind::HmUIII: return "hm_u_iii";
    }
    throw ConfigError("unreachable fluctuation kind");
}

inline FluctuationKind fluctuation_kind_from_string(const std::string& s) {
    if (s == "heat_i") return FluctuationKind::HeatI;
    if (s == "heat_ii") return FluctuationKind::HeatII;
    if (s == "hm_v") return FluctuationKind::HmV;
    if (s == "hm_u_i") return FluctuationKind::HmUI;
    if (s == "hm_u_ii") return FluctuationKind::HmUII;
    if (s == "hm_u_iii") return FluctuationKind::HmUIII;
    throw ConfigError("unknown fluctuation kind '" + s + "'");
}

/// phi and its first two spatial derivatives at one position.
struct SpatialProfile {
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

/// A calibrated fluctuation candidate. The temporal factor sin(2 pi t / tau)
/// has zero mean over one period, so every time-averaged product below has a
/// closed form: mean of sin^2 is 1/2 and mean of sin*cos is 0.
struct FluctuationModel {
    FluctuationKind kind = FluctuationKind::HeatI;
    std::vector<double> params;
    double tau_star = 0.0;

    FluctuationModel() = default;
    FluctuationModel(FluctuationKind k, std::vector<double> p, double tau)
        : kind(k), params(std::move(p)), tau_star(tau) {
        validate();
    }

    void validate() const {
        if (params.size() != param_count(kind)) {
            throw ConfigError("fluctuation kind " + to_string(kind) + " needs " +
                              std::to_string(param_count(kind)) + " parameters, got " +
                              std::to_string(params.size()));
        }
        if (!(tau_star > 0.0)) throw ConfigError("fluctuation period must be positive");
        auto nonzero = [this](double v, const char* name) {
            if (v == 0.0) {
                throw ConfigError("fluctuation kind " + to_string(kind) +
                                  ": parameter '" + name + "' must be nonzero");
            }
        };
        switch (kind) {
            case FluctuationKind::HeatI:
            case FluctuationKind::HeatII:
            case FluctuationKind::HmUII:
                nonzero(params[1], "len");
                break;
            case FluctuationKind::HmV:
            case FluctuationKind::HmUI:
                nonzero(params[3], "xs");
                break;
            case FluctuationKind::HmUIII:
                nonzero(params[2], "la");
                nonzero(params[5], "lb");
                break;
        }
    }

    SpatialProfile spatial_profile(double x) const {
        SpatialProfile p;
        switch (kind) {
            case FluctuationKind::HeatI: {
                const double amp = params[0], len = params[1];
                p.value = amp * (1.0 - x / len);
                p.d1 = -amp / len;
                p.d2 = 0.0;
                break;
            }
            case FluctuationKind::HeatII:
            case FluctuationKind::HmUII: {
                const double x0 = params[0], len = params[1];
                const double e = std::exp(-(x - x0) / len);
                p.value = e;
                p.d1 = -e / len;
                p.d2 = e / (len * len);
                break;
            }
            case FluctuationKind::HmV:
            case FluctuationKind::HmUI: {
                const double a0 = params[0], a1 = params[1], a2 = params[2], xs = params[3];
                const double c = std::cos(x / xs), s = std::sin(x / xs);
                p.value = a0 + a1 * c + a2 * s;
                p.d1 = (-a1 * s + a2 * c) / xs;
                p.d2 = (-a1 * c - a2 * s) / (xs * xs);
                break;
            }
            case FluctuationKind::HmUIII: {
                const double b1 = params[0], xa = params[1], la = params[2];
                const double b2 = params[3], xb = params[4], lb = params[5];
                const double ea = b1 * std::exp(-(x - xa) / la);
                const double eb = b2 * std::exp(-(x - xb) / lb);
                p.value = ea + eb;
                p.d1 = -ea / la - eb / lb;
                p.d2 = ea / (la * la) + eb / (lb * lb);
                break;
            }
        }
        return p;
    }

    double eval(double x, double t_star) const {
        return spatial_profile(x).value * std::sin(2.0 * kPi * t_star / tau_star);
    }
};

/// Period mean of u' * du'/dx at x: phi phi' times the period mean of sin^2,
/// which is 1/2.
inline double avg_self_dx(const FluctuationModel& m, double x) {
    const SpatialProfile p = m.spatial_profile(x);
    return 0.5 * p.value * p.d1;
}

/// x-derivative of avg_self_dx, needed by the reduced volumetric sources:
/// d/dx (phi phi' / 2) = (phi'^2 + phi phi'') / 2.
inline double avg_self_dx_deriv(const FluctuationModel& m, double x) {
    const SpatialProfile p = m.spatial_profile(x);
    return 0.5 * (p.d1 * p.d1 + p.value * p.d2);
}

/// Period mean of u' * du'/dt: the mean of sin*cos vanishes, and both shipped
/// temporal factors are that pair. Kept as a function so callers never bake
/// the zero into their own formulas.
inline double avg_self_dt(const FluctuationModel& m, double x) {
    (void)m;
    (void)x;
    return 0.0;
}

inline void require_same_period(const FluctuationModel& a, const FluctuationModel& b) {
    if (std::abs(a.tau_star - b.tau_star) > 1e-12 * std::max(1.0, std::abs(a.tau_star))) {
        throw ConfigError("cross products need fluctuation models with one shared period");
    }
}

/// Period mean of a' * db'/dx = phi_a phi_b' / 2; the derivative rides on the
/// second argument.
inline double avg_cross_dx(const FluctuationModel& a, const FluctuationModel& b, double x) {
    require_same_period(a, b);
    const SpatialProfile pa = a.spatial_profile(x);
    const SpatialProfile pb = b.spatial_profile(x);
    return 0.5 * pa.value * pb.d1;
}

/// x-derivative of avg_cross_dx: (phi_a' phi_b' + phi_a phi_b'') / 2.
inline double avg_cross_dx_deriv(const FluctuationModel& a, const FluctuationModel& b, double x) {
    require_same_period(a, b);
    const SpatialProfile pa = a.spatial_profile(x);
    const SpatialProfile pb = b.spatial_profile(x);
    return 0.5 * (pa.d1 * pb.d1 + pa.value * pb.d2);
}

/// Period mean of a' * db'/dt: zero for the shared sinusoidal factor, same
/// reasoning as avg_self_dt.
inline double avg_cross_dt(const FluctuationModel& a, const FluctuationModel& b, double x) {
    require_same_period(a, b);
    (void)x;
    return 0.0;
}

} // namespace armsim

#endif
