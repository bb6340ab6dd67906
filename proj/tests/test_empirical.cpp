#include <catch2/catch_amalgamated.hpp>

#include <armsim/empirical.hpp>

#include <cmath>
#include <functional>
#include <vector>

using namespace armsim;

namespace {

// Average f over one temporal period by composite trapezoid; avoids trusting
// the closed forms the library itself uses.
double period_mean(const std::function<double(double)>& f, double tau, std::size_t n = 20000) {
    double sum = 0.5 * (f(0.0) + f(tau));
    for (std::size_t i = 1; i < n; ++i) {
        sum += f(tau * static_cast<double>(i) / static_cast<double>(n));
    }
    return sum / static_cast<double>(n);
}

double fd_d1(const FluctuationModel& m, double x) {
    const double h = 1e-6;
    return (m.spatial_profile(x + h).value - m.spatial_profile(x - h).value) / (2.0 * h);
}

double fd_d2(const FluctuationModel& m, double x) {
    const double h = 1e-4;
    return (m.spatial_profile(x + h).value - 2.0 * m.spatial_profile(x).value +
            m.spatial_profile(x - h).value) /
           (h * h);
}

std::vector<FluctuationModel> all_candidates(double tau) {
    return {
        FluctuationModel(FluctuationKind::HeatI, {0.3, 0.8}, tau),
        FluctuationModel(FluctuationKind::HeatII, {0.2, 0.5}, tau),
        FluctuationModel(FluctuationKind::HmV, {0.1, -0.2, 0.15, 0.35}, tau),
        FluctuationModel(FluctuationKind::HmUI, {0.05, 0.12, -0.08, 0.5}, tau),
        FluctuationModel(FluctuationKind::HmUII, {0.4, 0.9}, tau),
        FluctuationModel(FluctuationKind::HmUIII, {0.2, 0.1, 0.6, -0.1, 0.8, 0.4}, tau),
    };
}

} // namespace

TEST_CASE("kind bookkeeping") {
    CHECK(param_count(FluctuationKind::HeatI) == 2);
    CHECK(param_count(FluctuationKind::HmV) == 4);
    CHECK(param_count(FluctuationKind::HmUIII) == 6);
    for (FluctuationKind k : {FluctuationKind::HeatI, FluctuationKind::HeatII,
                              FluctuationKind::HmV, FluctuationKind::HmUI,
                              FluctuationKind::HmUII, FluctuationKind::HmUIII}) {
        CHECK(fluctuation_kind_from_string(to_string(k)) == k);
    }
    CHECK_THROWS_AS(fluctuation_kind_from_string("heat_iii"), ConfigError);
}

TEST_CASE("model validation") {
    CHECK_THROWS_AS(FluctuationModel(FluctuationKind::HeatI, {0.3}, 12.0), ConfigError);
    CHECK_THROWS_AS(FluctuationModel(FluctuationKind::HeatI, {0.3, 0.0}, 12.0), ConfigError);
    CHECK_THROWS_AS(FluctuationModel(FluctuationKind::HeatI, {0.3, 0.8}, 0.0), ConfigError);
    CHECK_THROWS_AS(FluctuationModel(FluctuationKind::HmV, {0.1, 0.1, 0.1, 0.0}, 12.0),
                    ConfigError);
    CHECK_NOTHROW(FluctuationModel(FluctuationKind::HmUIII, {0.2, 0.1, 0.6, -0.1, 0.8, 0.4},
                                   12.0));
}

TEST_CASE("evaluation separates space and time") {
    const FluctuationModel m(FluctuationKind::HeatI, {0.3, 0.8}, 12.0);
    const double x = 0.4;
    const double phi = 0.3 * (1.0 - x / 0.8);
    CHECK(m.eval(x, 0.0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(m.eval(x, 3.0) == Catch::Approx(phi).epsilon(1e-12));
    CHECK(m.eval(x, 6.0) == Catch::Approx(0.0).margin(1e-12));
    CHECK(m.eval(x, 9.0) == Catch::Approx(-phi).epsilon(1e-12));

    const FluctuationModel e(FluctuationKind::HeatII, {0.2, 0.5}, 12.0);
    CHECK(e.spatial_profile(0.2).value == Catch::Approx(1.0).epsilon(1e-15));
    CHECK(e.spatial_profile(0.7).value == Catch::Approx(std::exp(-1.0)).epsilon(1e-13));

    const FluctuationModel trig(FluctuationKind::HmV, {0.1, -0.2, 0.15, 0.35}, 12.0);
    const double xs = 0.35;
    CHECK(trig.spatial_profile(0.5).value ==
          Catch::Approx(0.1 - 0.2 * std::cos(0.5 / xs) + 0.15 * std::sin(0.5 / xs))
              .epsilon(1e-13));
}

TEST_CASE("spatial derivatives agree with finite differences") {
    for (const FluctuationModel& m : all_candidates(12.0)) {
        for (double x : {0.05, 0.3, 0.55, 0.95}) {
            const SpatialProfile p = m.spatial_profile(x);
            CHECK(p.d1 == Catch::Approx(fd_d1(m, x)).margin(1e-7));
            CHECK(p.d2 == Catch::Approx(fd_d2(m, x)).margin(1e-5));
        }
    }
}

TEST_CASE("period mean of the fluctuation itself vanishes") {
    for (const FluctuationModel& m : all_candidates(12.0)) {
        for (double x : {0.0, 0.5, 1.0}) {
            const double mean = period_mean([&](double t) { return m.eval(x, t); }, 12.0);
            CHECK(std::abs(mean) < 1e-12);
        }
    }
}

TEST_CASE("self products match the quadrature oracle") {
    const double tau = 12.0;
    for (const FluctuationModel& m : all_candidates(tau)) {
        for (int i = 0; i <= 10; ++i) {
            const double x = static_cast<double>(i) / 10.0;
            const double h = 1e-6;
            auto u = [&](double xx, double t) { return m.eval(xx, t); };
            const double q_self_dx = period_mean(
                [&](double t) {
                    return u(x, t) * (u(x + h, t) - u(x - h, t)) / (2.0 * h);
                },
                tau);
            CHECK(avg_self_dx(m, x) == Catch::Approx(q_self_dx).margin(1e-8));

            const double ht = tau * 1e-7;
            const double q_self_dt = period_mean(
                [&](double t) {
                    return u(x, t) * (u(x, t + ht) - u(x, t - ht)) / (2.0 * ht);
                },
                tau);
            CHECK(avg_self_dt(m, x) == Catch::Approx(q_self_dt).margin(1e-6));
        }
    }
}

TEST_CASE("derivative of the self product matches its own finite difference") {
    for (const FluctuationModel& m : all_candidates(12.0)) {
        for (double x : {0.1, 0.45, 0.9}) {
            const double h = 1e-6;
            const double fd = (avg_self_dx(m, x + h) - avg_self_dx(m, x - h)) / (2.0 * h);
            CHECK(avg_self_dx_deriv(m, x) == Catch::Approx(fd).margin(1e-7));
        }
    }
}

TEST_CASE("self product closed form phi phi' / 2") {
    const FluctuationModel m(FluctuationKind::HeatII, {0.2, 0.5}, 12.0);
    const double x = 0.6;
    const double e = std::exp(-(x - 0.2) / 0.5);
    CHECK(avg_self_dx(m, x) == Catch::Approx(0.5 * e * (-e / 0.5)).epsilon(1e-13));
    CHECK(avg_self_dx_deriv(m, x) ==
          Catch::Approx(0.5 * (e * e / 0.25 + e * e / 0.25)).epsilon(1e-13));
}

TEST_CASE("cross products match the quadrature oracle") {
    const double tau = 12.0;
    const FluctuationModel v(FluctuationKind::HmV, {0.1, -0.2, 0.15, 0.35}, tau);
    const FluctuationModel u(FluctuationKind::HmUII, {0.4, 0.9}, tau);
    for (int i = 0; i <= 10; ++i) {
        const double x = static_cast<double>(i) / 10.0;
        const double h = 1e-6;
        const double q_cross = period_mean(
            [&](double t) {
                return v.eval(x, t) * (u.eval(x + h, t) - u.eval(x - h, t)) / (2.0 * h);
            },
            tau);
        CHECK(avg_cross_dx(v, u, x) == Catch::Approx(q_cross).margin(1e-8));

        const double fd = (avg_cross_dx(v, u, x + h) - avg_cross_dx(v, u, x - h)) / (2.0 * h);
        CHECK(avg_cross_dx_deriv(v, u, x) == Catch::Approx(fd).margin(1e-7));

        CHECK(avg_cross_dt(v, u, x) == 0.0);
    }
}

TEST_CASE("cross products demand one shared period") {
    const FluctuationModel a(FluctuationKind::HmV, {0.1, -0.2, 0.15, 0.35}, 12.0);
    const FluctuationModel b(FluctuationKind::HmUII, {0.4, 0.9}, 6.0);
    CHECK_THROWS_AS(avg_cross_dx(a, b, 0.5), ConfigError);
    CHECK_THROWS_AS(avg_cross_dx_deriv(a, b, 0.5), ConfigError);
    CHECK_THROWS_AS(avg_cross_dt(a, b, 0.5), ConfigError);
}
