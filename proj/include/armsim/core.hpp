#ifndef ARMSIM_CORE_HPP
#define ARMSIM_CORE_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "errors.hpp"

namespace armsim {

/// One spatial field sampled at the grid nodes.
using Field = std::vector<double>;

inline constexpr double kCelsiusOffset = 273.15;

/// Reference quantities used to map between physical and dimensionless form.
/// All internal computation is dimensionless; these appear only at the I/O
/// boundary and when deriving the dimensionless groups.
struct ReferenceScales {
    double t_ref_s = 3600.0;      ///< time scale t0 [s]
    double temp_ref_k = 293.15;   ///< temperature scale T0 [K]
    double length_ref_m = 1.0;    ///< wall thickness l [m]
    double c_ref = 1.0;           ///< volumetric heat capacity scale c0 [J/(m^3 K)]
    double k_ref = 1.0;           ///< thermal conductivity scale k0 [W/(m K)]
    double moisture_ref = 1.0;    ///< moisture content scale theta0 [-]
    double d_theta_ref = 1.0;     ///< moisture diffusivity scale D0_theta [m^2/s]

    void validate() const {
        if (!(t_ref_s > 0.0) || !(temp_ref_k > 0.0) || !(length_ref_m > 0.0) ||
            !(c_ref > 0.0) || !(k_ref > 0.0) || !(moisture_ref > 0.0) ||
            !(d_theta_ref > 0.0)) {
            throw ConfigError("reference scales must all be strictly positive");
        }
    }
};

/// Kinds of physical values the I/O layer knows how to (de)nondimensionalize.
enum class ValueKind {
    Kelvin,        ///< absolute temperature, u = T / T0
    Celsius,       ///< temperature in C, u = (T + 273.15) / T0
    Moisture,      ///< moisture content fraction, v = theta / theta0
    HeatFlux,      ///< surface flux density [W/m^2], g* = g l / (k0 T0)
    Dimensionless, ///< already scaled, passed through
};

inline ValueKind value_kind_from_string(const std::string& s) {
    if (s == "kelvin") return ValueKind::Kelvin;
    if (s == "celsius") return ValueKind::Celsius;
    if (s == "moisture") return ValueKind::Moisture;
    if (s == "heat_flux") return ValueKind::HeatFlux;
    if (s == "dimensionless") return ValueKind::Dimensionless;
    throw ConfigError("unknown value kind '" + s + "'");
}

inline double nondimensionalize(double value, ValueKind kind, const ReferenceScales& s) {
    switch (kind) {
        case ValueKind::Kelvin: return value / s.temp_ref_k;
        case ValueKind::Celsius: return (value + kCelsiusOffset) / s.temp_ref_k;
        case ValueKind::Moisture: return value / s.moisture_ref;
        case ValueKind::HeatFlux: return value * s.length_ref_m / (s.k_ref * s.temp_ref_k);
        case ValueKind::Dimensionless: return value;
    }
    throw ConfigError("unreachable value kind");
}

inline double redimensionalize(double scaled, ValueKind kind, const ReferenceScales& s) {
    switch (kind) {
        case ValueKind::Kelvin: return scaled * s.temp_ref_k;
        case ValueKind::Celsius: return scaled * s.temp_ref_k - kCelsiusOffset;
        case ValueKind::Moisture: return scaled * s.moisture_ref;
        case ValueKind::HeatFlux: return scaled * s.k_ref * s.temp_ref_k / s.length_ref_m;
        case ValueKind::Dimensionless: return scaled;
    }
    throw ConfigError("unreachable value kind");
}

/// Fourier number fo = t0 k0 / (l^2 c0).
inline double fourier_number(const ReferenceScales& s) {
    s.validate();
    return s.t_ref_s * s.k_ref / (s.length_ref_m * s.length_ref_m * s.c_ref);
}

/// Mass-transfer Fourier number fo_m = t0 D0_theta / l^2.
inline double fourier_number_mass(const ReferenceScales& s) {
    s.validate();
    return s.t_ref_s * s.d_theta_ref / (s.length_ref_m * s.length_ref_m);
}

/// Biot number bi = h l / k0 for a surface exchange coefficient h [W/(m^2 K)].
inline double biot_number(double h_coeff, const ReferenceScales& s) {
    s.validate();
    if (!(h_coeff >= 0.0)) throw ConfigError("surface exchange coefficient must be >= 0");
    return h_coeff * s.length_ref_m / s.k_ref;
}

/// Dimensionless time <-> hours of physical time.
inline double hours_to_t_star(double hours, const ReferenceScales& s) {
    return hours * 3600.0 / s.t_ref_s;
}
inline double t_star_to_hours(double t_star, const ReferenceScales& s) {
    return t_star * s.t_ref_s / 3600.0;
}

/// Affine property law p(w) = a0 + a1 * (w - shift), evaluated on a
/// dimensionless field value w. Models all material laws used here:
/// heat capacity, conductivity, and moisture diffusivity.
struct PropertyPolynomial {
    double a0 = 1.0;
    double a1 = 0.0;
    double shift = 0.0;

    double operator()(double w) const { return a0 + a1 * (w - shift); }

    /// A property must stay strictly positive over the admissible field
    /// range; checked once at configuration time.
    void check_positive(double w_min, double w_max, const std::string& name) const {
        if (!(w_min <= w_max)) throw ConfigError("admissible range for " + name + " is empty");
        const double at_min = (*this)(w_min);
        const double at_max = (*this)(w_max);
        if (!(at_min > 0.0) || !(at_max > 0.0)) {
            throw ConfigError("property " + name + " is non-positive inside admissible range [" +
                              std::to_string(w_min) + ", " + std::to_string(w_max) + "]");
        }
    }

    double min_over(double w_min, double w_max) const {
        return std::min((*this)(w_min), (*this)(w_max));
    }
    double max_over(double w_min, double w_max) const {
        return std::max((*this)(w_min), (*this)(w_max));
    }
};

/// Evaluate a property law, guarding against non-physical values at runtime.
inline double eval_property(const PropertyPolynomial& p, double w) {
    const double value = p(w);
    if (!(value > 0.0)) {
        throw DivergedError("property value " + std::to_string(value) +
                            " is non-positive at field value " + std::to_string(w));
    }
    return value;
}

/// Vertex-centered grid on x* in [0, 1], boundary nodes included.
struct SpaceGrid {
    std::size_t n_nodes = 0;
    double dx_star = 0.0;

    SpaceGrid() = default;
    explicit SpaceGrid(std::size_t n) : n_nodes(n) {
        if (n < 3) throw ConfigError("grid needs at least 3 nodes");
        dx_star = 1.0 / static_cast<double>(n - 1);
    }

    double x(std::size_t j) const {
        return static_cast<double>(j) / static_cast<double>(n_nodes - 1);
    }

    void validate() const {
        if (n_nodes < 3) throw ConfigError("grid needs at least 3 nodes");
        const double span = static_cast<double>(n_nodes - 1) * dx_star;
        if (std::abs(span - 1.0) > 1e-12) {
            throw ConfigError("grid spacing does not tile the unit interval: (n-1)*dx = " +
                              std::to_string(span));
        }
    }
};

/// Macro time grid of the march: step, horizon, snapshot stride.
struct TimeGrid {
    double dt_star = 0.0;
    double horizon_star = 0.0;
    std::size_t output_stride = 1;

    void validate() const {
        if (!(dt_star > 0.0)) throw ConfigError("time step must be positive");
        if (!(horizon_star >= 0.0)) throw ConfigError("horizon must be non-negative");
        if (output_stride == 0) throw ConfigError("output stride must be >= 1");
    }
};

inline bool all_finite(const Field& f) {
    for (double v : f) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

inline void validate_field(const Field& f, std::size_t n_nodes, const std::string& name) {
    if (f.size() != n_nodes) {
        throw ConfigError("field " + name + " has " + std::to_string(f.size()) +
                          " entries, expected " + std::to_string(n_nodes));
    }
    if (!all_finite(f)) throw ConfigError("field " + name + " contains non-finite entries");
}

} // namespace armsim

#endif
