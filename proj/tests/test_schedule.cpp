#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "eitmem/errors.hpp"
#include "eitmem/schedule.hpp"

using namespace eitmem;

TEST_CASE("stop-retrieve cot schedule values") {
    const auto s = ControlSchedule::tanh_pulse_pair(ScheduleQuantity::cot_theta, 100, 0, 15, 125, 0.1);
    for (double t : {0.0, 15.0, 40.0, 70.0, 125.0, 160.0}) {
        const double ref = 100 * (1 - 0.5 * std::tanh(0.1 * (t - 15)) + 0.5 * std::tanh(0.1 * (t - 125)));
        CHECK(s.raw(t) == doctest::Approx(ref).epsilon(1e-14));
        CHECK(s.theta(t, 10) == doctest::Approx(std::atan(1 / ref)).epsilon(1e-12));
    }
    CHECK(std::abs(s.theta(70, 10) - std::numbers::pi / 2) < 4e-3);
}

TEST_CASE("representations agree") {
    const double gN2 = 7.0;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    for (int i = 0; i < 200; ++i) {
        const double c2 = u(rng);
        const auto a = ControlSchedule::constant(ScheduleQuantity::cos2_theta, c2);
        const double om = a.rabi(0, gN2);
        const auto b = ControlSchedule::constant(ScheduleQuantity::rabi, om);
        const auto c = ControlSchedule::constant(ScheduleQuantity::cos_theta, std::sqrt(c2));
        const auto d = ControlSchedule::constant(ScheduleQuantity::cot_theta, std::sqrt(c2 / (1 - c2)));
        for (const auto* s : {&a, &b, &c, &d}) {
            CHECK(s->cos2_theta(0, gN2) == doctest::Approx(om * om / (om * om + gN2)).epsilon(1e-12));
            CHECK(std::pow(std::cos(s->theta(0, gN2)), 2) == doctest::Approx(c2).epsilon(1e-12));
            CHECK(s->rabi(0, gN2) == doctest::Approx(om).epsilon(1e-12));
        }
    }
}

TEST_CASE("invalid values are rejected") {
    CHECK_THROWS_AS(ControlSchedule::constant(ScheduleQuantity::rabi, -1), ValidationError);
    CHECK_THROWS_AS(ControlSchedule::constant(ScheduleQuantity::cos_theta, 1.5), ValidationError);
    CHECK_THROWS_AS(ControlSchedule::tanh_ramp(ScheduleQuantity::rabi, 1, 2, 0, -1), ValidationError);
    CHECK_THROWS_AS(ControlSchedule::tabulated(ScheduleQuantity::rabi, {0, 0}, {1, 2}), ValidationError);
    const auto one = ControlSchedule::constant(ScheduleQuantity::cos_theta, 1.0);
    CHECK(one.theta(0, 1) == 0.0);
    CHECK_THROWS_AS(one.rabi(0, 1), DomainError);
    const auto zero = ControlSchedule::constant(ScheduleQuantity::rabi, 0.0);
    CHECK_THROWS_AS(zero.theta(0, 0), DomainError);
}

TEST_CASE("tanh ramp endpoints") {
    const auto s = ControlSchedule::tanh_ramp(ScheduleQuantity::rabi, 3, 1, 10, 2);
    CHECK(s.raw(-100) == doctest::Approx(3));
    CHECK(s.raw(100) == doctest::Approx(1));
    CHECK(s.raw(10) == doctest::Approx(2));
}

TEST_CASE("tabulated curve is monotone and interpolating") {
    const std::vector<double> xs{0, 1, 2, 4, 7}, ys{0, 0.1, 0.8, 0.9, 1.0};
    const auto s = ControlSchedule::tabulated(ScheduleQuantity::cos2_theta, xs, ys);
    for (std::size_t i = 0; i < xs.size(); ++i) CHECK(s.raw(xs[i]) == doctest::Approx(ys[i]));
    double prev = -1;
    for (int i = -10; i <= 800; ++i) {
        const double v = s.raw(i * 0.01);
        CHECK(v >= prev - 1e-15);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        prev = v;
    }
    CHECK_FALSE(s.smooth_near(2.0, 1e-3));
    CHECK(s.smooth_near(3.0, 1e-3));
    CHECK(s.raw(-5) == 0.0);
    CHECK(s.raw(50) == 1.0);
}

TEST_CASE("evaluation is deterministic") {
    const auto s = ControlSchedule::tanh_pulse_pair(ScheduleQuantity::cot_theta, 100, 0, 15, 125, 0.1);
    const auto t = s;
    for (int i = 0; i < 100; ++i) CHECK(s.rabi(i * 1.7, 10) == t.rabi(i * 1.7, 10));
}
