#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "runtumble/chemo_field.hpp"
#include "runtumble/internal_process.hpp"
#include "runtumble/model_params.hpp"
#include "runtumble/random_streams.hpp"
#include "runtumble/slope_fit.hpp"
#include "runtumble/velocity_jump.hpp"
#include "test_support.hpp"

using namespace runtumble;

namespace {

double max_abs_gradient(const ChemoField& f, double length) {
    double m = 0.0;
    for (int i = 0; i <= 4000; ++i)
        m = std::max(m, std::abs(f.gradient(length * i / 4000.0)));
    return m;
}

}  // namespace

TEST_CASE("decay and response integrals match quadrature") {
    for (double tau : {0.3, 1.0, 2.5}) {
        for (double h : {0.05, 0.4, 1.7}) {
            const double di = testsup::simpson(
                0.0, h, 2000, [&](double s) { return std::exp(-s / tau); });
            CHECK(decay_integral(tau, h) == Catch::Approx(di).epsilon(0.0).margin(1e-12));
            const double ri = testsup::simpson(
                0.0, h, 2000, [&](double s) { return decay_integral(tau, s); });
            CHECK(response_integral(tau, h) ==
                  Catch::Approx(ri).epsilon(0.0).margin(1e-12));
        }
    }
}

TEST_CASE("turning rate kinds follow their configured shapes") {
    ModelParams p;
    p.lambda0 = 1.5;
    SECTION("bounded saturating kind") {
        CHECK(turning_rate(p, 0.0) == Catch::Approx(p.lambda0).margin(1e-15));
        CHECK(turning_rate_slope(p, 0.0) == -1.0);
        CHECK(turning_rate(p, 1e9) > 0.0);
        CHECK(turning_rate(p, 1e9) < 1e-6);
        CHECK(turning_rate(p, -1e9) < 2.0 * p.lambda0);
        CHECK(turning_rate(p, -1e9) > 2.0 * p.lambda0 - 1e-6);
        const double h = 1e-5;
        for (double z : {-2.0, -0.3, 0.7, 4.0}) {
            const double fd = (turning_rate(p, z + h) - turning_rate(p, z - h)) / (2.0 * h);
            CHECK(turning_rate_slope(p, z) == Catch::Approx(fd).epsilon(0.0).margin(1e-7));
        }
    }
    SECTION("linear kind is exact") {
        p.rate_kind = RateKind::Linear;
        p.b = 0.8;
        CHECK(turning_rate(p, 0.6) == 1.5 - 0.8 * 0.6);
        CHECK(turning_rate_slope(p, 0.6) == -0.8);
    }
    SECTION("floor clamps and counts") {
        p.rate_kind = RateKind::Linear;
        p.b = 1.0;
        p.rate_floor = 0.2;
        std::uint64_t clips = 0;
        CHECK(turning_rate(p, 10.0, &clips) == 0.2);
        CHECK(clips == 1);
        CHECK(turning_rate_slope(p, 10.0) == 0.0);
        CHECK(turning_rate(p, 0.0, &clips) == 1.5);
        CHECK(clips == 1);
    }
}

TEST_CASE("substep closed form solves the frozen-gradient dynamics") {
    const ChemoField field = two_bump_field(2.0, 1.0, 7.5, 12.5);
    const Domain dom{20.0, Boundary::Reflecting};
    ModelParams prm;
    prm.epsilon = 0.5;
    prm.tau = 0.7;
    prm.dt = 0.2;

    InternalParticle p;
    p.x = 6.9;
    p.v = 1;
    p.z = 0.37;
    const double g = field.gradient(p.x);
    const double h = prm.dt;

    // reference: RK4 on dz/ds = eps*g*v - z/tau with the gradient frozen
    double z = p.z;
    const int steps = 20000;
    const double hh = h / steps;
    auto f = [&](double zz) { return prm.epsilon * g * p.v - zz / prm.tau; };
    for (int i = 0; i < steps; ++i) {
        const double k1 = f(z);
        const double k2 = f(z + 0.5 * hh * k1);
        const double k3 = f(z + 0.5 * hh * k2);
        const double k4 = f(z + hh * k3);
        z += hh / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }

    InternalParticle q = p;
    substep_advance(q, prm, field, dom, h);
    CHECK(q.x == p.x + prm.epsilon * 1.0 * h);
    CHECK(q.z == Catch::Approx(z).epsilon(0.0).margin(1e-12));
    CHECK(q.t == h);
}

TEST_CASE("substep rate integral matches quadrature of the linearized rate") {
    const ChemoField field = two_bump_field(2.0, 1.0, 7.5, 12.5);
    ModelParams prm;
    prm.epsilon = 0.4;
    prm.tau = 1.3;
    prm.lambda0 = 1.0;

    InternalParticle p;
    p.x = 11.8;
    p.v = -1;
    p.z = -0.21;
    const double g = field.gradient(p.x);
    const double lam = turning_rate(prm, p.z);
    const double slope = turning_rate_slope(prm, p.z);
    auto z_of = [&](double s) {
        return std::exp(-s / prm.tau) * p.z +
               prm.epsilon * decay_integral(prm.tau, s) * g * p.v;
    };

    for (double h : {0.05, 0.3, 1.0}) {
        const double want = testsup::simpson(
            0.0, h, 2000, [&](double s) { return lam + slope * (z_of(s) - p.z); });
        CHECK(substep_rate_integral(p, prm, field, h) ==
              Catch::Approx(want).epsilon(0.0).margin(1e-10));
    }

    SECTION("exact for the linear rate kind") {
        prm.rate_kind = RateKind::Linear;
        prm.b = 0.9;
        const double h = 0.6;
        const double want = testsup::simpson(
            0.0, h, 4000, [&](double s) { return prm.lambda0 - prm.b * z_of(s); });
        CHECK(substep_rate_integral(p, prm, field, h) ==
              Catch::Approx(want).epsilon(0.0).margin(1e-12));
    }
}

TEST_CASE("jump solve inverts the rate integral") {
    SECTION("quadratic oracle") {
        auto I = [](double x) { return x * x; };
        auto dI = [](double x) { return 2.0 * x; };
        const double h = invert_monotone_integral(I, dI, 0.49, 1.0, 1.0, 0.9);
        CHECK(h == Catch::Approx(0.7).epsilon(0.0).margin(1e-12));
        CHECK(invert_monotone_integral(I, dI, 1.0, 1.0, 1.0, 0.5) ==
              Catch::Approx(1.0).margin(1e-10));
        CHECK_THROWS_AS(invert_monotone_integral(I, dI, 2.0, 1.0, 1.0, 0.5),
                        std::runtime_error);
    }
    SECTION("on the particle integral") {
        const ChemoField field = two_bump_field(2.0, 1.0, 7.5, 12.5);
        ModelParams prm;
        prm.epsilon = 0.5;
        InternalParticle p;
        p.x = 13.4;
        p.v = 1;
        p.z = 0.12;
        const double h_max = 0.8;
        const double total = substep_rate_integral(p, prm, field, h_max);
        for (double frac : {0.1, 0.5, 0.95}) {
            const double residual = frac * total;
            const double hj = solve_jump_time(p, prm, field, residual, h_max);
            CHECK(substep_rate_integral(p, prm, field, hj) ==
                  Catch::Approx(residual).epsilon(0.0).margin(1e-10));
        }
    }
}

TEST_CASE("constant attractant trajectory replays by hand") {
    const ChemoField field;  // S == 0, so z stays 0 and the rate is lambda0
    const Domain dom{4000.0, Boundary::Reflecting};
    ModelParams prm;
    prm.epsilon = 0.3;
    prm.lambda0 = 1.0;
    prm.dt = 0.1;
    const CoupledStream s(4242, 11);
    const double T = 30.0;

    InternalParticle p = make_internal_particle(2000.0, 1, s);
    advance_until(p, prm, field, dom, s, T);

    double x = 2000.0, t = 0.0;
    int v = 1;
    std::uint64_t n = 0;
    while (true) {
        const double tj = t + s.theta(n + 1) / prm.lambda0;
        if (tj > T) break;
        x += prm.epsilon * v * (tj - t);
        t = tj;
        v = s.direction(n + 1);
        ++n;
    }
    x += prm.epsilon * v * (T - t);

    CHECK(p.t == T);
    CHECK(p.n == n);
    CHECK(p.v == v);
    CHECK(p.z == 0.0);
    CHECK(p.x == Catch::Approx(x).epsilon(0.0).margin(1e-9));
}

TEST_CASE("jump counts are poissonian at constant rate") {
    const ChemoField field;
    const Domain dom{4000.0, Boundary::Reflecting};
    ModelParams prm;
    prm.dt = 0.1;
    const double T = 5.0;
    const int M = 2000;
    std::vector<double> counts(M);
    for (int i = 0; i < M; ++i) {
        const CoupledStream s(991, i);
        InternalParticle p = make_internal_particle(2000.0, 1, s);
        advance_until(p, prm, field, dom, s, T);
        counts[i] = static_cast<double>(p.n);
    }
    const double lam = prm.lambda0 * T;
    CHECK(std::abs(testsup::mean(counts) - lam) < 4.0 * std::sqrt(lam / M));
    const double dispersion = testsup::sample_variance(counts) / testsup::mean(counts);
    CHECK(std::abs(dispersion - 1.0) < 4.0 * std::sqrt(2.0 / M));
}

TEST_CASE("deviation variable stays inside its envelope") {
    const ChemoField field = two_bump_field(2.0, 1.0, 7.5, 12.5);
    const Domain dom{20.0, Boundary::Reflecting};
    ModelParams prm;
    prm.epsilon = 0.3;
    prm.tau = 1.5;
    prm.dt = 0.1;
    const double bound = prm.epsilon * prm.tau * max_abs_gradient(field, dom.length);
    const CoupledStream s(55, 4);
    InternalParticle p = make_internal_particle(8.0, 1, s);
    for (int k = 1; k <= 300; ++k) {
        advance_until(p, prm, field, dom, s, k * prm.dt);
        REQUIRE(std::abs(p.z) <= bound + 1e-12);
    }
}

TEST_CASE("substep scheme converges in dt with common random numbers") {
    const ChemoField field = two_bump_field(1.0, 1.0, 7.5, 12.5);
    const Domain dom{20.0, Boundary::Reflecting};
    const double T = 50.0;
    const int M = 400;
    const std::vector<double> dts{0.4, 0.2, 0.1};
    const double dt_ref = 0.0125;

    auto final_x = [&](double dt, int i) {
        ModelParams prm;
        prm.epsilon = 0.2;
        prm.dt = dt;
        const CoupledStream s(777, i);
        InternalParticle p = make_internal_particle(8.0, 1, s);
        advance_until(p, prm, field, dom, s, T);
        return p.x;
    };

    std::vector<double> err(dts.size(), 0.0);
    for (int i = 0; i < M; ++i) {
        const double ref = final_x(dt_ref, i);
        for (std::size_t j = 0; j < dts.size(); ++j)
            err[j] += std::abs(final_x(dts[j], i) - ref);
    }
    for (auto& e : err) e /= M;
    const SlopeFit f = fit_slope(std::vector<double>(dts), err, true);
    INFO("errors " << err[0] << " " << err[1] << " " << err[2] << " slope " << f.slope);
    CHECK(f.slope >= 0.8);
}

TEST_CASE("position law is stable under dt refinement") {
    const ChemoField field = two_bump_field(2.0, 1.0, 7.5, 12.5);
    const Domain dom{20.0, Boundary::Reflecting};
    const double T = 10.0;
    const int M = 1500;
    auto sample = [&](double dt, std::uint64_t seed) {
        std::vector<double> xs(M);
        for (int i = 0; i < M; ++i) {
            ModelParams prm;
            prm.epsilon = 0.4;
            prm.dt = dt;
            const CoupledStream s(seed, i);
            InternalParticle p = make_internal_particle(8.0, 1, s);
            advance_until(p, prm, field, dom, s, T);
            xs[i] = p.x;
        }
        return xs;
    };
    const double p = testsup::ks_two_sample_pvalue(sample(0.1, 111), sample(0.01, 222));
    CHECK(p > 1e-3);
}

TEST_CASE("boundaries act on the particle path") {
    const ChemoField field;
    ModelParams prm;
    prm.epsilon = 1.0;
    prm.lambda0 = 1e-8;  // no jump on these horizons
    prm.dt = 0.25;
    SECTION("reflection flips the velocity at the wall") {
        const Domain dom{20.0, Boundary::Reflecting};
        const CoupledStream s(1, 1);
        InternalParticle p = make_internal_particle(0.3, -1, s);
        advance_until(p, prm, field, dom, s, 1.0);
        CHECK(p.x == Catch::Approx(0.7).epsilon(0.0).margin(1e-12));
        CHECK(p.v == 1);
    }
    SECTION("periodic wrap keeps the velocity") {
        const Domain dom{20.0, Boundary::Periodic};
        const CoupledStream s(1, 2);
        InternalParticle p = make_internal_particle(0.1, -1, s);
        advance_until(p, prm, field, dom, s, 0.25);
        CHECK(p.x == Catch::Approx(19.85).epsilon(0.0).margin(1e-12));
        CHECK(p.v == -1);
    }
}

TEST_CASE("advancing to the current time is a no-op") {
    const ChemoField field = two_bump_field(2.0, 1.0, 7.5, 12.5);
    const Domain dom{20.0, Boundary::Reflecting};
    ModelParams prm;
    const CoupledStream s(9, 9);
    InternalParticle p = make_internal_particle(8.0, 1, s);
    advance_until(p, prm, field, dom, s, 3.0);
    const InternalParticle snap = p;
    advance_until(p, prm, field, dom, s, 3.0);
    CHECK(p.x == snap.x);
    CHECK(p.z == snap.z);
    CHECK(p.t == snap.t);
    CHECK(p.n == snap.n);
    CHECK(p.acc == snap.acc);
}
