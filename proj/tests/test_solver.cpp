#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "eitmem/errors.hpp"
#include "eitmem/medium.hpp"
#include "eitmem/solver.hpp"
#include "eitmem/spectrum.hpp"

using namespace eitmem;

namespace {

Scenario free_space(std::size_t nz, double cfl, double t_end) {
    Scenario sc;
    sc.medium = MediumParams::vacuum();
    const double dz = 100.0 / nz;
    sc.grid = Grid(-30, 70, nz, t_end, cfl * dz);
    sc.pulse = GaussianPulse{0.0, 4.0, 1.0};
    sc.snapshot_times = {t_end};
    return sc;
}

double free_space_error(std::size_t nz, double cfl, double t_end) {
    const auto sc = free_space(nz, cfl, t_end);
    const auto r = run(sc);
    const auto& s = r.snapshots[0];
    std::vector<cplx> ref(nz);
    for (std::size_t i = 0; i < nz; ++i) {
        const double x = (sc.grid->z(i) - s.t) / 4.0;
        ref[i] = std::exp(-x * x);
    }
    return rel_l2(s.E, ref);
}

}  // namespace

TEST_CASE("grid enforces CFL") {
    CHECK_THROWS_AS(Grid(0, 10, 100, 1, 0.2), CflError);
    CHECK_THROWS_AS(Grid(0, 10, 10, 1, 0.01), ValidationError);
    const auto g = Grid::unit_cfl(0, 10, 100, 1);
    CHECK(g.exact_shift());
    CHECK(g.dz == doctest::Approx(0.1));
}

TEST_CASE("gamma dt bound") {
    Scenario sc;
    sc.medium = MediumParams::from_scales(10, 20, 1.0);
    sc.grid = Grid::unit_cfl(0, 100, 256, 1.0);  // dt = 0.39
    CHECK_THROWS_AS(sc.validate(), ValidationError);
}

TEST_CASE("free-space advection and convergence") {
    const double e1 = free_space_error(2048, 0.5, 20.0);
    const double e2 = free_space_error(4096, 0.5, 20.0);
    CHECK(e1 < 1e-3);
    const double order = std::log2(e1 / e2);
    CHECK(order >= 1.8);
    // Unit CFL transport is an exact shift.
    CHECK(free_space_error(1000, 1.0, 20.0) < 1e-12);
}

TEST_CASE("runs are bitwise deterministic") {
    Scenario sc;
    sc.medium = MediumParams::from_scales(10, 20);
    sc.grid = Grid::unit_cfl(-40, 60, 1000, 20);
    sc.control = ControlSchedule::tanh_ramp(ScheduleQuantity::cot_theta, 2, 0.5, 10, 0.3);
    sc.pulse = GaussianPulse{0, 6, 1};
    sc.snapshot_times = {5, 20};
    const auto a = run(sc), b = run(sc);
    for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t i = 0; i < 1000; ++i) {
            CHECK(a.snapshots[k].E[i] == b.snapshots[k].E[i]);
            CHECK(a.snapshots[k].S[i] == b.snapshots[k].S[i]);
            CHECK(a.snapshots[k].P[i] == b.snapshots[k].P[i]);
        }
}

TEST_CASE("single steps reproduce a run") {
    Scenario sc;
    sc.medium = MediumParams::from_scales(10, 20);
    sc.grid = Grid(-40, 60, 500, 2, 0.1);
    sc.control = ControlSchedule::tanh_ramp(ScheduleQuantity::rabi, 4, 1, 1, 1);
    sc.pulse = GaussianPulse{0, 6, 1};
    sc.snapshot_times = {2};
    const auto r = run(sc);
    FieldState s = initial_state(sc);
    for (int n = 0; n < 20; ++n) s = step(s, sc, 0.1);
    CHECK(rel_l2(s.E, r.snapshots[0].E) < 1e-12);
    CHECK(rel_l2(s.S, r.snapshots[0].S) < 1e-12);
}

TEST_CASE("slow light delay matches the dispersive closed form") {
    // gN2 = 10, Omega^2 = 10: v_gr = c / 2. Pulse injected at z_min.
    Scenario sc;
    sc.medium = MediumParams::from_scales(10, 20);
    sc.grid = Grid::unit_cfl(0, 80, 2048, 160);
    sc.control = ControlSchedule::constant(ScheduleQuantity::rabi, std::sqrt(10.0));
    sc.cold_start = true;
    const double T = 16.0, t0 = 50.0;
    auto wave = [=](double t) { return cplx(std::exp(-std::pow((t - t0) / T, 2)), 0.0); };
    sc.pulse = BoundaryInjection{wave};
    sc.probe_points = {10.0, 30.0};
    const auto r = run(sc);
    const auto& a = r.probes[0];
    const auto& b = r.probes[1];
    const double za = sc.grid->z(a.index), zb = sc.grid->z(b.index);
    // Waveform at a, delayed by (zb - za) / v_gr, predicts b.
    auto at_a = [&](double t) -> cplx {
        const double x = t / sc.grid->dt;
        const auto i = static_cast<std::size_t>(std::floor(x));
        if (x < 0 || i + 1 >= a.E.size()) return 0.0;
        const double f = x - i;
        return (1 - f) * a.E[i] + f * a.E[i + 1];
    };
    const double delay = propagation_delay([](double) { return 0.5; }, za, zb);
    CHECK(delay == doctest::Approx(2 * (zb - za)).epsilon(1e-12));
    std::vector<cplx> pred(b.E.size());
    for (std::size_t k = 0; k < b.E.size(); ++k) pred[k] = at_a(b.t[k] - delay);
    CHECK(rel_l2(b.E, pred) < 0.02);
}

TEST_CASE("propagation delay quadrature") {
    auto v = [](double z) { return 1.0 / (1.0 + z); };
    for (double z : {0.25, 0.5, 1.0}) CHECK(propagation_delay(v, 0, z) == doctest::Approx(z + z * z / 2).epsilon(1e-10));
    CHECK(propagation_delay([](double) { return 0.25; }, 0, 3) == doctest::Approx(12.0).epsilon(1e-14));
    CHECK_THROWS_AS(propagation_delay([](double z) { return 1.0 - z; }, 0, 2), DomainError);
    const auto prof = analytic_space_profile([](double t) { return cplx(t, 0); }, [](double) { return 2.0; }, 0.0,
                                             {0.0, 1.0, 4.0}, 5.0);
    CHECK(prof[0].real() == doctest::Approx(5.0));
    CHECK(prof[1].real() == doctest::Approx(4.5));
    CHECK(prof[2].real() == doctest::Approx(3.0));
}

TEST_CASE("time profile translation") {
    const std::size_t n = 2000;
    const double dz = 0.05, z0 = -20;
    std::vector<cplx> E0(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double z = z0 + i * dz;
        E0[i] = std::exp(-z * z / 9);
    }
    const auto frozen = analytic_time_profile(E0, z0, dz, [](double) { return 0.0; }, 30.0);
    CHECK(rel_l2(frozen, E0) < 1e-12);
    const auto moved = analytic_time_profile(E0, z0, dz, [](double t) { return 0.5 + 0.1 * std::sin(t); }, 20.0);
    const double shift = 10.0 + 0.1 * (1 - std::cos(20.0));
    std::vector<cplx> ref(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double z = z0 + i * dz - shift;
        ref[i] = std::exp(-z * z / 9);
    }
    CHECK(rel_l2(moved, ref) < 1e-6);
}

TEST_CASE("temporal spectrum narrows with the velocity") {
    // Frozen spatial shape passing a fixed point at two speeds.
    auto trace = [](double v) {
        std::vector<cplx> x(8192);
        for (int i = 0; i < 8192; ++i) {
            const double t = (i - 4096) * 0.02;
            const double z = v * t;
            x[i] = std::exp(-z * z / 4);
        }
        return spectrum(x, 0.02);
    };
    const auto a = trace(1.0), b = trace(0.5);
    CHECK(b.fwhm / a.fwhm == doctest::Approx(0.5).epsilon(0.05));
    CHECK(b.rms_width / a.rms_width == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("non-finite values abort with the last good state") {
    Scenario sc;
    sc.medium = MediumParams::vacuum();
    sc.grid = Grid::unit_cfl(0, 10, 100, 10);
    sc.pulse = BoundaryInjection{[](double t) { return t > 3 ? cplx(NAN, 0) : cplx(0, 0); }};
    try {
        run(sc);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.last_good.t <= 3.0);
        CHECK(e.last_good.E.size() == 100);
    }
}

TEST_CASE("weak-probe monitor") {
    Scenario sc;
    sc.medium = MediumParams::from_scales(10, 20);
    sc.grid = Grid::unit_cfl(-30, 30, 600, 1);
    sc.control = ControlSchedule::constant(ScheduleQuantity::rabi, 2.0);
    sc.pulse = GaussianPulse{0, 5, 1};
    sc.atom_number = 1e6;
    const auto s = initial_state(sc);
    const double g = std::sqrt(10.0 / 1e6);
    CHECK(weak_probe_ratio(s, sc) == doctest::Approx(g / 2.0).epsilon(1e-12));
    sc.atom_number = 1.0;
    CHECK(weak_probe_ratio(s, sc) > kWeakProbeThreshold);
}

TEST_CASE("adiabatic initial state and csv schema") {
    Scenario sc;
    sc.medium = MediumParams::from_scales(10, 20);
    sc.grid = Grid::unit_cfl(-30, 30, 600, 1);
    sc.control = ControlSchedule::constant(ScheduleQuantity::cot_theta, 2.0);
    sc.pulse = GaussianPulse{0, 5, 1};
    const auto s = initial_state(sc);
    for (std::size_t i = 0; i < s.E.size(); ++i) CHECK(std::abs(s.S[i] + 0.5 * s.E[i]) < 1e-15);
    const auto csv = snapshot_csv(s, *sc.grid);
    CHECK(csv.rfind("z,re_E,im_E,re_S,im_S,re_P,im_P\n", 0) == 0);
    sc.control = ControlSchedule::constant(ScheduleQuantity::cot_theta, 0.0);
    CHECK_THROWS_AS(initial_state(sc), ValidationError);
}
