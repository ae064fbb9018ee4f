#include <doctest.h>

#include <cmath>
#include <limits>

#include "hkt/errors.hpp"
#include "hkt/model.hpp"
#include "hkt/rng.hpp"

using namespace hkt;
using doctest::Approx;

TEST_CASE("accel_probability closure values") {
    CHECK(accel_probability(0.0, 1.0) == 1.0);
    CHECK(accel_probability(1.0, 2.0) == 0.0);
    CHECK(accel_probability(0.5, 1.0) == 0.5);
    CHECK_THROWS_AS(accel_probability(1.5, 1.0), DomainError);
}

TEST_CASE("accel_probability stays in [0,1] and is non-increasing") {
    for (double delta : {0.5, 1.0, 2.0, 5.0}) {
        double prev = 2.0;
        for (int k = 0; k <= 1000; ++k) {
            const double p = accel_probability(k / 1000.0, delta);
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
            CHECK(p <= prev);
            prev = p;
        }
    }
}

TEST_CASE("critical density") {
    CHECK(critical_density(1.0) == Approx(0.5).epsilon(1e-15));
    // sqrt(1/2) by Newton on x^2 = 1/2
    double x = 1.0;
    for (int k = 0; k < 60; ++k) x = 0.5 * (x + 0.5 / x);
    CHECK(critical_density(2.0) == Approx(x).epsilon(1e-15));
    CHECK(critical_density(std::numeric_limits<double>::infinity()) == 1.0);
    CHECK(critical_density(1e12) == Approx(1.0).epsilon(1e-9));
    CHECK(accel_probability(critical_density(3.0), 3.0) == Approx(0.5).epsilon(1e-14));
}

TEST_CASE("target speeds") {
    CHECK(target_speeds(0.95, 0.5, 0.3, 1.0, 0.2).accel == 1.0);
    CHECK(target_speeds(0.3, 0.6, 1.0, 1.0, 0.2).brake == 0.0);
    const auto t = target_speeds(0.3, 0.6, 0.5, 1.0, 0.2);
    CHECK(t.accel == Approx(0.5));
    CHECK(t.brake == Approx(0.3));
}

TEST_CASE("diffusion coefficients") {
    for (double k : {1.0, 2.0, 3.5}) {
        const auto z0 = diffusion_coefficients(0.0, 0.2, 0.0, k);
        const auto z1 = diffusion_coefficients(1.0, 1.0, 0.4, k);
        CHECK(z0.accel == 0.0);
        CHECK(z0.brake == 0.0);
        CHECK(z1.accel == 0.0);
        CHECK(z1.brake == 0.0);
    }
    const auto d = diffusion_coefficients(0.5, 0.7, 0.2, 1.0);
    CHECK(d.accel == Approx(0.05));
    CHECK(d.brake == Approx(0.075));
}

TEST_CASE("x_interaction deterministic branches") {
    ModelParams p;
    p.rho = 0.0;
    p.alpha = 1.0;
    p.dv_jump = 0.2;
    CHECK(x_interaction(0.3, 0.5, p, 0.0) == Approx(0.5));
    p.rho = 1.0;
    CHECK(x_interaction(0.6, 0.5, p, 0.0) == Approx(0.0));
    CHECK(x_interaction(0.42, 0.42, p, 0.3) == 0.42);
}

TEST_CASE("xi admissible halfwidth") {
    const auto b = xi_admissible_halfwidth(0.0, 1.0, 1.0);
    REQUIRE(b.accel);
    CHECK(*b.accel == 0.0);

    // alpha = 0.04, P = 0.5
    const auto h = xi_admissible_halfwidth(0.5, 0.04, 1.0);
    const double q = 0.02;
    CHECK(*h.accel == Approx((1.0 - q) / std::sqrt(q)).epsilon(1e-14));
    CHECK(*h.accel == Approx(6.9296).epsilon(1e-4));
    CHECK(h.lower_vacuous());
    CHECK(*h.lower < 0.0);
}

TEST_CASE("x_interaction keeps speeds in [0,1] for admissible noise") {
    Rng rng(11);
    int checked = 0;
    for (int k = 0; k < 10000; ++k) {
        ModelParams p;
        p.rho = rng.uniform();
        p.alpha = rng.uniform(0.01, 1.0);
        p.delta = rng.uniform(0.2, 3.0);
        p.dv_jump = rng.uniform(0.01, 1.0);
        p.kappa = rng.uniform(1.0, 3.0);
        const double v = rng.uniform(), w = rng.uniform();
        const auto b = xi_admissible_halfwidth(p.rho, p.alpha, p.delta);
        const double h = v < w ? (b.accel ? *b.accel : 0.0) : (b.brake ? *b.brake : 0.0);
        const double xi = rng.uniform(-h, h);
        const double out = x_interaction(v, w, p, xi);
        CHECK(out >= 0.0);
        CHECK(out <= 1.0);
        ++checked;
    }
    CHECK(checked == 10000);
}

TEST_CASE("x_interaction rejects draws outside the support") {
    ModelParams p;
    p.rho = 0.5;
    p.alpha = 0.5;
    const auto b = xi_admissible_halfwidth(p.rho, p.alpha, p.delta);
    CHECK_THROWS_AS(x_interaction(0.2, 0.7, p, *b.accel * 1.01), RejectedDraw);
}

TEST_CASE("desired speed") {
    ModelParams p;
    p.vbar_d = 0.1;
    p.lambda = 0.3;
    CHECK(desired_speed(0.0, 0.4, p) == 0.1);
    CHECK(desired_speed(1.0, 1.0, p) == 0.1);
    p.vbar_d = 0.0;
    p.lambda = 0.5;
    CHECK(desired_speed(1.0, 0.0, p) == 0.5);
}

TEST_CASE("y_interaction") {
    ModelParams p;
    p.vbar_d = -0.2;
    p.lambda = 0.1;
    p.beta0 = 1.0;
    CHECK(y_interaction(0.7, 0.5, 0.0, p) == -0.2);
    p.beta0 = 0.5;
    CHECK(y_interaction(0.4, 0.5, 0.0, p) == Approx(0.1));
    ModelParams q = p;
    q.beta_mode = BetaMode::linear_in_ux;
    q.beta0 = 1.0;
    CHECK(y_interaction(0.4, 0.0, 0.0, q) == 0.4);
}

TEST_CASE("y_interaction stays in [-eps, eps]") {
    Rng rng(5);
    for (int k = 0; k < 10000; ++k) {
        ModelParams p;
        p.epsilon = rng.uniform(0.1, 1.0);
        p.rho = rng.uniform();
        p.lambda = rng.uniform(0.01, 0.5) * p.epsilon;
        p.vbar_d = rng.uniform(-0.5, 0.5) * p.epsilon;
        p.beta0 = rng.uniform(1e-6, 1.0);
        const double v = rng.uniform(-p.epsilon, p.epsilon);
        const double out = y_interaction(v, rng.uniform(), rng.uniform(-1.0, 1.0), p);
        CHECK(out >= -p.epsilon);
        CHECK(out <= p.epsilon);
    }
}

TEST_CASE("noise laws have zero mean and the configured variance") {
    for (NoiseLaw law : {NoiseLaw::two_point, NoiseLaw::uniform}) {
        const NoiseSpec n{law, 0.04};
        Rng rng(99);
        double s = 0.0, s2 = 0.0;
        const int count = 1000000;
        for (int k = 0; k < count; ++k) {
            const double x = n.sample(rng);
            CHECK(std::abs(x) <= n.support_halfwidth());
            s += x;
            s2 += x * x;
        }
        const double mean = s / count, var = s2 / count - mean * mean;
        CHECK(std::abs(mean) <= 4.0 * std::sqrt(0.04) / 1e3);
        CHECK(var == Approx(0.04).epsilon(0.01));
    }
}

TEST_CASE("noise support is checked against the admissible bound") {
    const NoiseSpec wide{NoiseLaw::two_point, 100.0};
    CHECK_THROWS_AS(wide.check_admissible(0.5, 0.5, 1.0), ConfigError);
    const NoiseSpec narrow{NoiseLaw::uniform, 1e-4};
    CHECK_NOTHROW(narrow.check_admissible(0.5, 0.5, 1.0));
}

TEST_CASE("parameter validation names the field") {
    ModelParams p;
    CHECK_NOTHROW(p.validate());
    p.alpha = 0.0;
    try {
        p.validate();
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("alpha") != std::string::npos);
    }
}

TEST_CASE("enum tokens round-trip") {
    for (auto m : {BetaMode::constant, BetaMode::linear_in_ux}) CHECK(parse_beta_mode(to_string(m)) == m);
    for (auto m : {ReferenceMode::binary, ReferenceMode::mean_field}) CHECK(parse_reference_mode(to_string(m)) == m);
    for (auto m : {TargetMode::jump_and_scaled, TargetMode::mean_speed}) CHECK(parse_target_mode(to_string(m)) == m);
    CHECK_THROWS_AS(parse_beta_mode("quadratic"), ConfigError);
}
