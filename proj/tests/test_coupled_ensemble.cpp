#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "runtumble/coupled_ensemble.hpp"
#include "test_support.hpp"

using namespace runtumble;

namespace {

Ensemble demo_ensemble(std::size_t n, std::uint64_t seed) {
    ModelParams prm;
    prm.epsilon = 0.3;
    prm.dt = 0.25;
    const Domain dom{20.0, Boundary::Reflecting};
    const ChemoField field = two_bump_field(2.0, 1.0, 7.5, 12.5);
    return init_ensemble(prm, dom, field, n, seed,
                         {{PositionInit::Uniform, 6.0, 10.0}, {VelocityInit::UniformSign, 1}});
}

}  // namespace

TEST_CASE("initialization samples the requested law") {
    SECTION("point position, fixed velocity") {
        ModelParams prm;
        const Domain dom{20.0, Boundary::Reflecting};
        Ensemble e = init_ensemble(prm, dom, ChemoField{}, 50, 1,
                                   {{PositionInit::Point, 8.0, 0.0}, {VelocityInit::Fixed, -1}});
        for (std::size_t i = 0; i < e.size(); ++i) {
            CHECK(e.internal[i].x == 8.0);
            CHECK(e.internal[i].v == -1);
            CHECK(e.control[i].x == 8.0);
            CHECK(e.control[i].v == -1);
            CHECK(e.internal[i].theta_target == e.stream(i).theta(1));
        }
    }
    SECTION("uniform position, uniform sign") {
        Ensemble e = demo_ensemble(2000, 7);
        std::vector<double> xs(e.size());
        int plus = 0;
        for (std::size_t i = 0; i < e.size(); ++i) {
            xs[i] = e.internal[i].x;
            REQUIRE(e.internal[i].x >= 6.0);
            REQUIRE(e.internal[i].x < 10.0);
            REQUIRE(e.internal[i].x == e.control[i].x);
            REQUIRE(e.internal[i].v == e.control[i].v);
            if (e.internal[i].v == 1) ++plus;
        }
        const double p = testsup::ks_pvalue(
            xs, [](double x) { return std::min(1.0, std::max(0.0, (x - 6.0) / 4.0)); });
        CHECK(p > 1e-3);
        CHECK(std::abs(plus - 1000.0) < 4.0 * std::sqrt(2000.0) / 2.0);
    }
}

TEST_CASE("initialization rejects bad specs") {
    ModelParams prm;
    const Domain dom{20.0, Boundary::Reflecting};
    const InitSpec ok{{PositionInit::Point, 8.0, 0.0}, {VelocityInit::Fixed, 1}};
    CHECK_THROWS_AS(init_ensemble(prm, dom, ChemoField{}, 0, 1, ok), std::invalid_argument);
    CHECK_THROWS_AS(init_ensemble(prm, dom, ChemoField{}, 5, 1,
                                  {{PositionInit::Point, 25.0, 0.0}, {VelocityInit::Fixed, 1}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(init_ensemble(prm, dom, ChemoField{}, 5, 1,
                                  {{PositionInit::Uniform, 9.0, 7.0}, {VelocityInit::Fixed, 1}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(init_ensemble(prm, dom, ChemoField{}, 5, 1,
                                  {{PositionInit::Point, 8.0, 0.0}, {VelocityInit::Fixed, 2}}),
                    std::invalid_argument);
}

TEST_CASE("a trajectory does not depend on the ensemble size") {
    Ensemble small = demo_ensemble(10, 99);
    Ensemble big = demo_ensemble(100, 99);
    advance(small, 40.0);
    advance(big, 40.0);
    for (std::size_t i = 0; i < small.size(); ++i) {
        CHECK(small.internal[i].x == big.internal[i].x);
        CHECK(small.internal[i].z == big.internal[i].z);
        CHECK(small.control[i].x == big.control[i].x);
    }
}

TEST_CASE("worker count does not change the result") {
    Ensemble a = demo_ensemble(64, 3);
    Ensemble b = demo_ensemble(64, 3);
    advance(a, 30.0, 1);
    advance(b, 30.0, 4);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.internal[i].x == b.internal[i].x);
        CHECK(a.internal[i].v == b.internal[i].v);
        CHECK(a.internal[i].z == b.internal[i].z);
        CHECK(a.internal[i].n == b.internal[i].n);
        CHECK(a.control[i].x == b.control[i].x);
        CHECK(a.control[i].v == b.control[i].v);
        CHECK(a.control[i].n == b.control[i].n);
    }
}

TEST_CASE("advance rejects a time in the past") {
    Ensemble e = demo_ensemble(4, 1);
    advance(e, 5.0);
    CHECK_THROWS_AS(advance(e, 4.0), std::invalid_argument);
}

TEST_CASE("reinitialize re-arms the control companions") {
    Ensemble e = demo_ensemble(32, 21);
    advance(e, 60.0);
    const std::vector<InternalParticle> fine = e.internal;
    const std::vector<ControlParticle> ctrl = e.control;
    reinitialize(e);
    for (std::size_t i = 0; i < e.size(); ++i) {
        // control adopts position, velocity, and the full jump clock
        CHECK(e.control[i].x == fine[i].x);
        CHECK(e.control[i].v == fine[i].v);
        CHECK(e.control[i].n == fine[i].n);
        CHECK(e.control[i].acc == fine[i].acc);
        CHECK(e.control[i].theta_target == fine[i].theta_target);
        CHECK(e.control[i].t == ctrl[i].t);
        // the fine-scale particle is untouched
        CHECK(e.internal[i].x == fine[i].x);
        CHECK(e.internal[i].z == fine[i].z);
        CHECK(e.internal[i].n == fine[i].n);
        CHECK(e.internal[i].acc == fine[i].acc);
        CHECK(e.internal[i].theta_target == fine[i].theta_target);
    }
    const CouplingStats s = coupling_stats(e);
    CHECK(s.mean_abs_dx == 0.0);
    CHECK(s.mean_sq_dx == 0.0);
}

TEST_CASE("fine-scale evolution is invariant under any reinitialize schedule") {
    // identical advance chunking, with and without reinitialization between
    // chunks: the reinit must not perturb the fine-scale ensemble at all
    Ensemble plain = demo_ensemble(48, 5);
    Ensemble mixed = demo_ensemble(48, 5);
    for (int k = 1; k <= 9; ++k) {
        advance(plain, 10.0 * k);
        advance(mixed, 10.0 * k);
        reinitialize(mixed);
    }
    for (std::size_t i = 0; i < plain.size(); ++i) {
        CHECK(plain.internal[i].x == mixed.internal[i].x);
        CHECK(plain.internal[i].v == mixed.internal[i].v);
        CHECK(plain.internal[i].z == mixed.internal[i].z);
        CHECK(plain.internal[i].n == mixed.internal[i].n);
        CHECK(plain.internal[i].acc == mixed.internal[i].acc);
    }
}

TEST_CASE("coupling statistics are exact arithmetic") {
    Ensemble e = demo_ensemble(2, 17);
    e.internal[0].x = 5.0;
    e.control[0].x = 4.7;
    e.internal[1].x = 9.0;
    e.control[1].x = 9.0;
    const CouplingStats s = coupling_stats(e);
    CHECK(s.count == 2);
    CHECK(s.mean_abs_dx == Catch::Approx(0.15).epsilon(0.0).margin(1e-15));
    CHECK(s.mean_sq_dx == Catch::Approx(0.045).epsilon(0.0).margin(1e-15));
    const std::vector<double> d = coupling_deltas(e);
    REQUIRE(d.size() == 2);
    CHECK(d[0] == Catch::Approx(0.3).epsilon(0.0).margin(1e-15));
    CHECK(d[1] == 0.0);
}
