#include "eitmem/polariton.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "eitmem/errors.hpp"
#include "eitmem/spectrum.hpp"

namespace eitmem {

// ---------------------------------------------------------------- rotation

PolaritonState to_polariton(const std::vector<cplx>& E, const std::vector<cplx>& S, double theta, double t) {
    return to_polariton(E, S, std::vector<double>{theta}, t);
}

PolaritonState to_polariton(const std::vector<cplx>& E, const std::vector<cplx>& S,
                            const std::vector<double>& theta, double t) {
    if (E.size() != S.size()) throw ValidationError("to_polariton: E and S lengths differ");
    if (theta.size() != 1 && theta.size() != E.size())
        throw ValidationError("to_polariton: theta must be scalar or match the grid");
    for (double th : theta)
        if (!(th >= 0 && th <= std::numbers::pi / 2 + 1e-15)) throw ValidationError("to_polariton: theta outside [0, pi/2]");
    PolaritonState p;
    p.t = t;
    p.theta = theta;
    p.Psi.resize(E.size());
    p.Phi.resize(E.size());
    for (std::size_t i = 0; i < E.size(); ++i) {
        const double th = theta.size() == 1 ? theta[0] : theta[i];
        const double c = std::cos(th), s = std::sin(th);
        p.Psi[i] = c * E[i] - s * S[i];
        p.Phi[i] = s * E[i] + c * S[i];
    }
    return p;
}

FieldPair from_polariton(const PolaritonState& p) {
    if (p.Psi.size() != p.Phi.size()) throw ValidationError("from_polariton: Psi and Phi lengths differ");
    if (p.theta.size() != 1 && p.theta.size() != p.Psi.size())
        throw ValidationError("from_polariton: theta must be scalar or match the grid");
    FieldPair f;
    f.E.resize(p.Psi.size());
    f.S.resize(p.Psi.size());
    for (std::size_t i = 0; i < p.Psi.size(); ++i) {
        const double th = p.theta.size() == 1 ? p.theta[0] : p.theta[i];
        const double c = std::cos(th), s = std::sin(th);
        f.E[i] = c * p.Psi[i] + s * p.Phi[i];
        f.S[i] = -s * p.Psi[i] + c * p.Phi[i];
    }
    return f;
}

// ---------------------------------------------------------------- transport

double dark_shift(const ControlSchedule& sched, double gN2, double c, double t0, double t1) {
    return c * integrate([&](double t) { return sched.cos2_theta(t, gN2); }, t0, t1, sched.features(), 1e-13);
}

std::vector<cplx> advect_dark(const std::vector<cplx>& Psi0, double z_min, double dz,
                              const ControlSchedule& sched, double gN2, double c, double t) {
    if (sched.domain() != ScheduleDomain::time) throw ValidationError("advect_dark: needs a time-domain schedule");
    return shift_resample(Psi0, z_min, dz, dark_shift(sched, gN2, c, 0.0, t));
}

// ---------------------------------------------------------------- derivatives

namespace {

void agree(double a, double b, double rel_tol, double abs_tol, double t) {
    if (!std::isfinite(a) || !std::isfinite(b) || std::abs(a - b) > abs_tol + rel_tol * std::abs(b)) {
        std::ostringstream os;
        os << "derivative undefined at t = " << t << ": stencils disagree (" << a << " vs " << b << ")";
        throw DomainError(os.str());
    }
}

double central1(const std::function<double(double)>& f, double t, double h) {
    const double d1 = (f(t + h) - f(t - h)) / (2 * h);
    const double d2 = (f(t + h / 2) - f(t - h / 2)) / h;
    return (4 * d2 - d1) / 3;
}

double central2(const std::function<double(double)>& f, double t, double h) {
    const double f0 = f(t);
    const double d1 = (f(t + h) - 2 * f0 + f(t - h)) / (h * h);
    const double d2 = (f(t + h / 2) - 2 * f0 + f(t - h / 2)) / (h * h / 4);
    return (4 * d2 - d1) / 3;
}

}  // namespace

double richardson_d1(const std::function<double(double)>& f, double t, double h, double rel_tol, double abs_tol) {
    const double a = central1(f, t, h), b = central1(f, t, h / 2);
    agree(a, b, rel_tol, abs_tol, t);
    return b;
}

double richardson_d2(const std::function<double(double)>& f, double t, double h, double rel_tol, double abs_tol) {
    const double a = central2(f, t, h), b = central2(f, t, h / 2);
    agree(a, b, rel_tol, abs_tol, t);
    return b;
}

namespace {

struct ThetaFns {
    const ControlSchedule& s;
    double gN2, h_inner;
    double theta(double t) const { return s.theta(t, gN2); }
    double theta_dot(double t) const {
        const auto f = [this](double x) { return theta(x); };
        return central1(f, t, h_inner);
    }
};

CorrectionCoeffs coeffs_unchecked(const ControlSchedule& sched, double t, const MediumParams& m,
                                  const DerivativeOptions& opt, bool check) {
    if (sched.domain() != ScheduleDomain::time) throw ValidationError("correction_coeffs: needs a time-domain schedule");
    if (m.is_vacuum()) throw ValidationError("correction_coeffs: needs atoms");
    if (check && !sched.smooth_near(t, 2 * opt.h))
        throw DomainError("correction_coeffs: schedule is not twice differentiable near t");
    const ThetaFns th{sched, m.gN2(), opt.h_inner};
    const double G2 = m.gN2(), g = m.gamma();
    const double rt = check ? opt.rel_tol : std::numeric_limits<double>::infinity();

    // Trigonometric factors come from cos^2 so that cos(theta) = 0 is exact.
    const auto c2 = [&](double x) { return sched.cos2_theta(x, G2); };
    const auto fa = [&](double x) {
        const double d = th.theta_dot(x);
        return d * d * (1 - c2(x)) / G2;
    };
    const auto fb = [&](double x) { return std::pow(1 - c2(x), 1.5); };
    const auto fc = [&](double x) {
        const double cc = c2(x), ss = 1 - cc;
        return ss * ss * cc / G2;
    };

    CorrectionCoeffs k;
    k.theta = th.theta(t);
    k.theta_dot = richardson_d1([&](double x) { return th.theta(x); }, t, opt.h, rt, opt.abs_tol);
    const double cc = c2(t), ss = 1 - cc;
    k.A = g * fa(t) + 0.5 * richardson_d1(fa, t, opt.h, rt, opt.abs_tol);
    k.B = std::sqrt(ss) / (3 * G2) * richardson_d2(fb, t, opt.h, rt, opt.abs_tol);
    k.C = g * fc(t) + 0.5 * richardson_d1(fc, t, opt.h, rt, opt.abs_tol);
    k.D = ss * ss * cc * cc / G2;
    k.a_negative = k.A < 0;
    k.c_negative = k.C < 0;
    return k;
}

}  // namespace

CorrectionCoeffs correction_coeffs(const ControlSchedule& sched, double t, const MediumParams& m,
                                   const DerivativeOptions& opt) {
    return coeffs_unchecked(sched, t, m, opt, true);
}

// ---------------------------------------------------------------- corrected propagator

namespace {

struct CoeffIntegrals {
    double A = 0, B = 0, C = 0, D = 0, cos2 = 0;
};

// Composite Simpson over [t0, t1] of the coefficient functions.
CoeffIntegrals integrate_coeffs(const ControlSchedule& sched, const MediumParams& m, double t0, double t1,
                                int intervals) {
    CoeffIntegrals r;
    if (t1 == t0) return r;
    int n = std::max(2, intervals);
    if (n % 2) ++n;
    const double h = (t1 - t0) / n;
    DerivativeOptions opt;
    opt.h = std::min(opt.h, std::abs(h));
    opt.h_inner = std::min(opt.h_inner, opt.h / 4);
    for (int i = 0; i <= n; ++i) {
        const double t = t0 + i * h;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        const auto k = coeffs_unchecked(sched, t, m, opt, false);
        r.A += w * k.A;
        r.B += w * k.B;
        r.C += w * k.C;
        r.D += w * k.D;
        r.cos2 += w * sched.cos2_theta(t, m.gN2());
    }
    const double f = h / 3;
    r.A *= f;
    r.B *= f;
    r.C *= f;
    r.D *= f;
    r.cos2 *= f;
    return r;
}

double edge_mass(const std::vector<cplx>& f, double fraction) {
    const std::size_t n = f.size();
    const auto band = std::max<std::size_t>(1, static_cast<std::size_t>(fraction * static_cast<double>(n)));
    double tot = 0, edge = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = std::norm(f[i]);
        tot += v;
        if (i < band || i + band >= n) edge += v;
    }
    return tot > 0 ? edge / tot : 0.0;
}

}  // namespace

CorrectedResult corrected_propagate(const std::vector<cplx>& Psi0, double z_min, double dz,
                                    const ControlSchedule& sched, const MediumParams& m, double t,
                                    const CorrectedOptions& opt) {
    (void)z_min;
    if (Psi0.size() < 64) throw ValidationError("corrected_propagate: need >= 64 grid points");
    CorrectedResult r;
    const double e0 = edge_mass(Psi0, opt.edge_fraction);
    if (e0 > opt.edge_tolerance) throw DomainError("corrected_propagate: initial Psi has mass at the window edges");

    const auto I = integrate_coeffs(sched, m, 0.0, t, opt.time_intervals);
    const double s = opt.coefficient_scale;
    r.int_A = s * I.A;
    r.int_B = s * I.B;
    r.int_C = s * I.C;
    r.int_D = s * I.D;
    r.int_cos2 = I.cos2;

    const double c = m.c();
    auto hat = dft(Psi0, true);
    const auto q = fft_wavenumbers(Psi0.size(), dz);
    for (std::size_t k = 0; k < hat.size(); ++k) {
        const double cq = c * q[k];
        const double re = -r.int_A - cq * cq * r.int_C;
        const double im = -cq * r.int_cos2 + cq * r.int_B + cq * cq * cq * r.int_D;
        hat[k] *= std::exp(cplx(re, im));
    }
    r.Psi = dft(hat, false);
    for (auto& v : r.Psi) v /= static_cast<double>(Psi0.size());
    r.edge_mass = edge_mass(r.Psi, opt.edge_fraction);
    if (r.edge_mass > opt.edge_tolerance) throw DomainError("corrected_propagate: Psi reached the window edges");
    return r;
}

double predicted_loss(const ControlSchedule& sched, const MediumParams& m, double t0, double t1, int intervals) {
    const auto I = integrate_coeffs(sched, m, t0, t1, intervals);
    return 1.0 - std::exp(-2.0 * I.A);
}

// ---------------------------------------------------------------- audits

namespace {

// 2 x rms width of |f|^2 sampled with spacing dx.
double pulse_length(const std::vector<cplx>& f, double dx) {
    std::vector<double> x(f.size()), w(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        x[i] = static_cast<double>(i) * dx;
        w[i] = std::norm(f[i]);
    }
    return 2 * rms_width(x, w);
}

}  // namespace

AdiabaticityReport adiabaticity_report(const Scenario& sc) {
    sc.validate();
    AdiabaticityReport rep;
    rep.propagation.name = "propagation";
    rep.rotation.name = "rotation";
    rep.bandwidth.name = "bandwidth";
    rep.switching.name = "switching";
    const Grid& g = *sc.grid;
    const MediumParams& m = sc.medium;
    const double c = m.c();

    double z_c = 0;
    if (const auto* gp = std::get_if<GaussianPulse>(&sc.pulse)) {
        rep.L_p = pulse_length(initial_state(sc).E, g.dz);
        z_c = gp->center;
    } else {
        const auto& wf = std::get<BoundaryInjection>(sc.pulse).waveform;
        const std::size_t n = 20001;
        std::vector<cplx> s(n);
        const double dt = g.t_end / static_cast<double>(n - 1);
        for (std::size_t i = 0; i < n; ++i) s[i] = wf(static_cast<double>(i) * dt);
        rep.L_p = c * pulse_length(s, dt);
        z_c = g.z_min;
    }
    rep.T_p = rep.L_p / c;

    if (m.is_vacuum()) {
        for (Margin* mg : {&rep.propagation, &rep.rotation, &rep.bandwidth, &rep.switching}) mg->pass = true;
        rep.all_pass = true;
        rep.v0 = c;
        return rep;
    }

    const double G2 = m.gN2(), gam = m.gamma();
    const bool space = sc.control && sc.control->domain() == ScheduleDomain::space;
    const auto theta = [&](double x) { return space ? sc.theta(x, 0.0) : sc.theta(0.0, x); };
    const auto omega = [&](double x) { return space ? sc.omega(x, 0.0) : sc.omega(0.0, x); };
    const std::vector<double> breaks = sc.control ? sc.control->features() : std::vector<double>{};
    const double h = 1e-4;
    // d theta / d x along the integration variable.
    const auto dtheta = [&](double x) { return central1(theta, x, h); };

    const double x0 = space ? z_c : 0.0;
    const double x1 = space ? g.z_min + g.dz * static_cast<double>(g.nz - 1) : g.t_end;
    rep.omega0 = omega(x0);
    rep.v0 = c * std::pow(std::cos(theta(x0)), 2);

    double i_prop = 0, i_simpl = 0, i_rot = 0, max_rate = 0;
    if (space) {
        // Along the trajectory dt = dz / v and thetadot = v dtheta/dz.
        i_prop = integrate([&](double z) { return std::pow(std::sin(theta(z)), 4) / c; }, x0, x1, breaks, 1e-10);
        i_simpl = (x1 - x0) / c;
        i_rot = integrate(
            [&](double z) {
                const double v = c * std::pow(std::cos(theta(z)), 2), d = dtheta(z), o = omega(z);
                return v * d * d / (G2 + o * o);
            },
            x0, x1, breaks, 1e-10);
        for (int i = 0; i <= 20000; ++i) {
            const double z = x0 + (x1 - x0) * i / 20000.0;
            max_rate = std::max(max_rate, std::abs(c * std::pow(std::cos(theta(z)), 2) * dtheta(z)));
        }
    } else {
        i_prop = integrate(
            [&](double t) {
                const double s = std::sin(theta(t)), co = std::cos(theta(t));
                return s * s * s * s * co * co;
            },
            x0, x1, breaks, 1e-10);
        i_simpl = integrate([&](double t) { return std::pow(std::cos(theta(t)), 2); }, x0, x1, breaks, 1e-10);
        i_rot = integrate(
            [&](double t) {
                const double d = dtheta(t), o = omega(t);
                return d * d / (G2 + o * o);
            },
            x0, x1, breaks, 1e-10);
        std::vector<double> pts;
        for (int i = 0; i <= 20000; ++i) pts.push_back(x0 + (x1 - x0) * i / 20000.0);
        for (double b : breaks)
            for (int k = -200; k <= 200; ++k) pts.push_back(b + k * 1e-3);
        for (double t : pts)
            if (t >= x0 && t <= x1) max_rate = std::max(max_rate, std::abs(dtheta(t)));
    }

    const double pre = gam * c * c / (G2 * rep.L_p * rep.L_p);
    rep.propagation.value = pre * i_prop;
    rep.propagation_simplified = pre * i_simpl;
    rep.rotation.value = gam * i_rot;
    rep.bandwidth.value = rep.omega0 > 0 ? std::sqrt(m.opacity()) * gam / (rep.omega0 * rep.omega0 * rep.T_p)
                                         : std::numeric_limits<double>::infinity();
    rep.T = max_rate > 0 ? 1.0 / max_rate : std::numeric_limits<double>::infinity();
    const double l_abs = c * gam / G2;
    rep.switching.value = max_rate > 0 ? (l_abs / c) * (rep.v0 / c) / rep.T : 0.0;
    rep.all_pass = true;
    for (Margin* mg : {&rep.propagation, &rep.rotation, &rep.bandwidth, &rep.switching}) {
        mg->pass = mg->value < kMarginThreshold;
        rep.all_pass = rep.all_pass && mg->pass;
    }
    return rep;
}

BandwidthCheck initial_bandwidth_check(const std::vector<cplx>& pulse, double dz, double omega_c0,
                                       const MediumParams& m) {
    if (!(omega_c0 > 0)) throw ValidationError("initial_bandwidth_check: control must be > 0");
    const auto sp = spectrum(pulse, dz);
    BandwidthCheck b;
    b.pulse_width = group_quantities(omega_c0, m).v_gr * sp.rms_width;
    b.transparency_width = transparency_width(omega_c0, m);
    b.ratio = b.pulse_width / b.transparency_width;
    b.pass = b.ratio < 0.1;
    return b;
}

}  // namespace eitmem
