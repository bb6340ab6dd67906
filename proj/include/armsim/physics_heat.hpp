#ifndef ARMSIM_PHYSICS_HEAT_HPP
#define ARMSIM_PHYSICS_HEAT_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "core.hpp"
#include "empirical.hpp"
#include "errors.hpp"
#include "integrate.hpp"
#include "signal.hpp"

namespace armsim {

/// Boundary drivers for the heat problem. `radiation` is the absorbed
/// short-wave flux on the left face; ignored when alpha == 0.
struct HeatBcs {
    BoundarySignal left_temp;
    BoundarySignal right_temp;
    BoundarySignal radiation;
};

/// Dimensionless configuration of the nonlinear heat problem with Robin
/// exchange on both faces:
///   c*(u) du/dt* = fo d/dx*(k*(u) du/dx*)
///   x*=0:  k* du/dx* =  bi_left (u - u_inf_left) - alpha g*
///   x*=1:  k* du/dx* = -bi_right (u - u_inf_right)
struct HeatConfig {
    SpaceGrid grid;
    double fo_t = 0.0;
    double bi_left = 0.0;
    double bi_right = 0.0;
    double alpha = 0.0;
    PropertyPolynomial c_poly{1.0, 0.0, 0.0};
    PropertyPolynomial k_poly{1.0, 0.0, 0.0};
    double admissible_lo = 0.8;
    double admissible_hi = 1.2;
    HeatBcs bc;

    void validate() const {
        grid.validate();
        if (!(fo_t > 0.0)) throw ConfigError("fo must be positive");
        if (!(bi_left >= 0.0) || !(bi_right >= 0.0)) throw ConfigError("biot numbers must be >= 0");
        c_poly.check_positive(admissible_lo, admissible_hi, "c*");
        k_poly.check_positive(admissible_lo, admissible_hi, "k*");
        bc.left_temp.validate();
        bc.right_temp.validate();
        if (alpha != 0.0) bc.radiation.validate();
    }

    /// Explicit stability limit per the scalar-problem formula.
    double dt_exp() const { return max_stable_dt(fo_t, grid.dx_star); }
};

namespace detail {

inline double checked_property(const PropertyPolynomial& p, double w, const char* name) {
    const double value = p(w);
    if (!(value > 0.0)) {
        throw DivergedError(std::string(name) + " became non-positive (" +
                            std::to_string(value) + ") at field value " + std::to_string(w));
    }
    return value;
}

} // namespace detail

/// Tendency of the complete heat model. Conservative central stencil with
/// arithmetic-mean face conductivities; Robin faces enter through ghost nodes
/// eliminated with the boundary balance.
class HeatCmRhs {
public:
    explicit HeatCmRhs(const HeatConfig& cfg) : cfg_(&cfg) {
        cfg.validate();
        k_nodes_.resize(cfg.grid.n_nodes);
        c_nodes_.resize(cfg.grid.n_nodes);
    }

    void operator()(const Field& u, double t, Field& out) const {
        const std::size_t n = cfg_->grid.n_nodes;
        const double dx = cfg_->grid.dx_star;
        const double dx2 = dx * dx;
        const double fo = cfg_->fo_t;

        const double u_inf_l = cfg_->bc.left_temp.sample(t);
        const double u_inf_r = cfg_->bc.right_temp.sample(t);
        const double g_star = (cfg_->alpha != 0.0) ? cfg_->bc.radiation.sample(t) : 0.0;

        for (std::size_t j = 0; j < n; ++j) {
            k_nodes_[j] = detail::checked_property(cfg_->k_poly, u[j], "k*");
            c_nodes_[j] = detail::checked_property(cfg_->c_poly, u[j], "c*");
        }
        for (std::size_t j = 1; j + 1 < n; ++j) {
            const double k_w = 0.5 * (k_nodes_[j - 1] + k_nodes_[j]);
            const double k_e = 0.5 * (k_nodes_[j] + k_nodes_[j + 1]);
            out[j] = fo * (k_e * (u[j + 1] - u[j]) - k_w * (u[j] - u[j - 1])) / (dx2 * c_nodes_[j]);
        }

        // Left ghost from k* du/dx = bi_l (u - u_inf) - alpha g*, gradient
        // centered at node 0.
        {
            const double grad_bc = (cfg_->bi_left * (u[0] - u_inf_l) - cfg_->alpha * g_star + left_bc_shift_) / k_nodes_[0];
            const double u_ghost = u[1] - 2.0 * dx * grad_bc;
            const double k_ghost = detail::checked_property(cfg_->k_poly, u_ghost, "k*");
            const double k_w = 0.5 * (k_ghost + k_nodes_[0]);
            const double k_e = 0.5 * (k_nodes_[0] + k_nodes_[1]);
            out[0] = fo * (k_e * (u[1] - u[0]) - k_w * (u[0] - u_ghost)) / (dx2 * c_nodes_[0]);
        }
        // Right ghost from k* du/dx = -bi_r (u - u_inf).
        {
            const double grad_bc = (-cfg_->bi_right * (u[n - 1] - u_inf_r) + right_bc_shift_) / k_nodes_[n - 1];
            const double u_ghost = u[n - 2] + 2.0 * dx * grad_bc;
            const double k_ghost = detail::checked_property(cfg_->k_poly, u_ghost, "k*");
            const double k_e = 0.5 * (k_nodes_[n - 1] + k_ghost);
            const double k_w = 0.5 * (k_nodes_[n - 2] + k_nodes_[n - 1]);
            out[n - 1] =
                fo * (k_e * (u_ghost - u[n - 1]) - k_w * (u[n - 1] - u[n - 2])) / (dx2 * c_nodes_[n - 1]);
        }
    }

protected:
    // Additive corrections to the Robin balances; zero for the complete
    // model, set by the reduced model to carry its boundary source.
    double left_bc_shift_ = 0.0;
    double right_bc_shift_ = 0.0;

    const HeatConfig* cfg_;
    mutable Field k_nodes_;
    mutable Field c_nodes_; ///< filled by operator(); reused by the reduced model
};

/// Tendency of the averaged reduced heat model. Same stencil on the averaged
/// field, plus a time-independent volumetric source
///   S(x) = -c1* avg(u' du'/dt) + fo d/dx(k1* avg(u' du'/dx))
/// and boundary balances shifted by S_k = k1* avg(u' du'/dx) at each face:
///   x*=0:  k* du/dx* =  bi_left (u - u_inf) - alpha g* - S_k(0)
///   x*=1:  k* du/dx* = -bi_right (u - u_inf) - S_k(1)
/// Sources are arrays computed once per (config, model); never per step.
class HeatArmRhs : public HeatCmRhs {
public:
    HeatArmRhs(const HeatConfig& cfg_averaged, const FluctuationModel& model)
        : HeatCmRhs(cfg_averaged), model_(model) {
        model_.validate();
        const std::size_t n = cfg_averaged.grid.n_nodes;
        source_.resize(n);
        const double k1 = cfg_averaged.k_poly.a1;
        const double c1 = cfg_averaged.c_poly.a1;
        for (std::size_t j = 0; j < n; ++j) {
            const double x = cfg_averaged.grid.x(j);
            source_[j] = cfg_averaged.fo_t * k1 * avg_self_dx_deriv(model_, x) -
                         c1 * avg_self_dt(model_, x);
        }
        // Boundary balance shift; sign chosen so the balance reads
        // k* du/dx = (Robin terms) - S_k.
        left_bc_shift_ = -k1 * avg_self_dx(model_, 0.0);
        right_bc_shift_ = -k1 * avg_self_dx(model_, 1.0);
    }

    void operator()(const Field& u, double t, Field& out) const {
        HeatCmRhs::operator()(u, t, out);
        // The governing equation carries c* on the left, so the source joins
        // the tendency divided by c*(u); c_nodes_ is fresh from the base call.
        for (std::size_t j = 0; j < u.size(); ++j) {
            out[j] += source_[j] / c_nodes_[j];
        }
    }

    const Field& volumetric_source() const { return source_; }
    double boundary_source_left() const { return -left_bc_shift_; }
    double boundary_source_right() const { return -right_bc_shift_; }

private:
    FluctuationModel model_;
    Field source_;
};

/// Dimensionless conduction flux at x* = 1, second-order one-sided stencil:
/// j* = -k*(u_N) (3 u_N - 4 u_{N-1} + u_{N-2}) / (2 dx*).
inline double heat_flux_star(const HeatConfig& cfg, const Field& u) {
    const std::size_t n = cfg.grid.n_nodes;
    validate_field(u, n, "u");
    const double grad = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * cfg.grid.dx_star);
    return -detail::checked_property(cfg.k_poly, u[n - 1], "k*") * grad;
}

/// Physical flux [W/m^2]: multiply the dimensionless flux by k0 T0 / l.
inline double heat_flux_wm2(const HeatConfig& cfg, const Field& u, const ReferenceScales& s) {
    return heat_flux_star(cfg, u) * s.k_ref * s.temp_ref_k / s.length_ref_m;
}

/// Approximate full solution from the averaged field and the fluctuation:
/// u~(x, t) = u_bar(x) + u'(x, t).
inline Field reconstruct(const Field& u_bar, const FluctuationModel& model, const SpaceGrid& grid,
                         double t_star) {
    validate_field(u_bar, grid.n_nodes, "u_bar");
    Field out(u_bar.size());
    const double s = std::sin(2.0 * kPi * t_star / model.tau_star);
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] = u_bar[j] + model.spatial_profile(grid.x(j)).value * s;
    }
    return out;
}

} // namespace armsim

#endif
