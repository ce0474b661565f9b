#include "eitmem/solver.hpp"

#include <Eigen/Dense>
#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace eitmem {

using Mat3 = Eigen::Matrix3cd;

// ---------------------------------------------------------------- Grid

Grid::Grid(double z_min_, double z_max_, std::size_t nz_, double t_end_, double dt_, double c_)
    : z_min(z_min_), z_max(z_max_), nz(nz_), dz(0), t_end(t_end_), dt(dt_), c(c_) {
    if (!(z_max > z_min) || !std::isfinite(z_min) || !std::isfinite(z_max))
        throw ValidationError("grid: need finite z_min < z_max");
    if (nz < 64) throw ValidationError("grid: nz must be >= 64");
    if (!(dt > 0) || !(t_end >= 0) || !(c > 0)) throw ValidationError("grid: need dt > 0, t_end >= 0, c > 0");
    dz = (z_max - z_min) / static_cast<double>(nz);
    if (courant() > 1 + 1e-12) {
        std::ostringstream os;
        os << "grid: CFL number c dt/dz = " << courant() << " exceeds 1";
        throw CflError(os.str());
    }
}

Grid Grid::unit_cfl(double z_min, double z_max, std::size_t nz, double t_end, double c) {
    const double dz = (z_max - z_min) / static_cast<double>(nz);
    return Grid(z_min, z_max, nz, t_end, dz / c, c);
}

std::vector<double> Grid::points() const {
    std::vector<double> z(nz);
    for (std::size_t i = 0; i < nz; ++i) z[i] = this->z(i);
    return z;
}

bool Grid::exact_shift() const { return std::abs(courant() - 1.0) < 1e-12; }

std::vector<cplx> FieldState::rho_ab(double atom_number) const {
    std::vector<cplx> r(P);
    for (auto& v : r) v /= std::sqrt(atom_number);
    return r;
}

std::vector<cplx> FieldState::rho_cb(double atom_number) const {
    std::vector<cplx> r(S);
    for (auto& v : r) v /= std::sqrt(atom_number);
    return r;
}

// ---------------------------------------------------------------- Scenario

void Scenario::validate() const {
    if (!grid) throw ValidationError("scenario: grid missing");
    const Grid& g = *grid;
    if (std::abs(g.c - medium.c()) > 1e-12 * medium.c())
        throw ValidationError("scenario: grid and medium disagree on c");
    if (!medium.is_vacuum() && medium.gamma() * g.dt > 0.1 + 1e-12)
        throw ValidationError("scenario: gamma * dt must be <= 0.1");
    for (double t : snapshot_times)
        if (t < -1e-12 || t > g.t_end + 1e-9) throw ValidationError("scenario: snapshot time outside [0, t_end]");
    for (double z : probe_points)
        if (z < g.z_min || z > g.z_min + g.dz * static_cast<double>(g.nz - 1))
            throw ValidationError("scenario: probe point outside the grid");
    if (!(atom_number > 0)) throw ValidationError("scenario: atom_number must be > 0");
    if (const auto* gp = std::get_if<GaussianPulse>(&pulse)) {
        if (!(gp->width > 0)) throw ValidationError("scenario: pulse width must be > 0");
    } else {
        if (!std::get<BoundaryInjection>(pulse).waveform)
            throw ValidationError("scenario: injection waveform missing");
    }
}

double Scenario::omega(double z, double t) const {
    if (!control) return 0.0;
    const double x = control->domain() == ScheduleDomain::time ? t : z;
    return control->rabi(x, medium.gN2());
}

double Scenario::theta(double z, double t) const {
    if (medium.is_vacuum()) return 0.0;
    if (!control) return std::numbers::pi / 2;
    const double x = control->domain() == ScheduleDomain::time ? t : z;
    return control->theta(x, medium.gN2());
}

// ---------------------------------------------------------------- local step

namespace {

Mat3 local_matrix(double G, double gamma, double omega) {
    const cplx I(0, 1);
    Mat3 M;
    M << 0, I * G, 0,
         I * G, -gamma, I * omega,
         0, I * omega, 0;
    return M;
}

// Propagator of d(E,P,S)/dt = M(t)(E,P,S) over [t0, t0 + h] by RK4 substeps.
Mat3 local_propagator(double G, double gamma, const std::function<double(double)>& omega, double t0,
                      double h) {
    const double om = std::max({std::abs(omega(t0)), std::abs(omega(t0 + 0.5 * h)), std::abs(omega(t0 + h))});
    const double rate = std::sqrt(G * G + om * om) + gamma;
    const double substeps = std::ceil(h * rate / 0.4);
    if (!(substeps <= 1e7)) throw NumericalError("local step: control too strong for the time step");
    const int n = std::max(1, static_cast<int>(substeps));
    const double hs = h / n;
    const Mat3 Id = Mat3::Identity();
    Mat3 U = Id;
    for (int k = 0; k < n; ++k) {
        const double t = t0 + k * hs;
        const Mat3 M1 = local_matrix(G, gamma, omega(t));
        const Mat3 M2 = local_matrix(G, gamma, omega(t + 0.5 * hs));
        const Mat3 M3 = local_matrix(G, gamma, omega(t + hs));
        const Mat3 K1 = M1;
        const Mat3 K2 = M2 * (Id + 0.5 * hs * K1);
        const Mat3 K3 = M2 * (Id + 0.5 * hs * K2);
        const Mat3 K4 = M3 * (Id + hs * K3);
        U = (Id + hs / 6.0 * (K1 + 2.0 * K2 + 2.0 * K3 + K4)) * U;
    }
    return U;
}

void apply(const Mat3& U, cplx& e, cplx& p, cplx& s) {
    const cplx e2 = U(0, 0) * e + U(0, 1) * p + U(0, 2) * s;
    const cplx p2 = U(1, 0) * e + U(1, 1) * p + U(1, 2) * s;
    const cplx s2 = U(2, 0) * e + U(2, 1) * p + U(2, 2) * s;
    e = e2;
    p = p2;
    s = s2;
}

cplx inflow(const Scenario& sc, double t) {
    if (const auto* inj = std::get_if<BoundaryInjection>(&sc.pulse)) return inj->waveform(t);
    return 0.0;
}

// Advances E by one transport step of length dt (c dt / dz <= 1).
void transport(std::vector<cplx>& E, const Scenario& sc, double t, double dt, std::vector<cplx>& work) {
    const Grid& g = *sc.grid;
    const double nu = g.c * dt / g.dz;
    if (nu > 1 + 1e-12) throw CflError("transport: CFL number exceeds 1");
    const std::size_t n = E.size();
    if (std::abs(nu - 1.0) < 1e-12) {
        for (std::size_t i = n - 1; i > 0; --i) E[i] = E[i - 1];
    } else {
        work.assign(E.begin(), E.end());
        const double a = 0.5 * nu, b = 0.5 * nu * nu;
        const cplx right_ghost = 2.0 * work[n - 1] - work[n - 2];
        for (std::size_t i = 1; i < n; ++i) {
            const cplx em = work[i - 1], e0 = work[i];
            const cplx ep = i + 1 < n ? work[i + 1] : right_ghost;
            E[i] = e0 - a * (ep - em) + b * (ep - 2.0 * e0 + em);
        }
    }
    E[0] = inflow(sc, t + dt);
}

void check_finite(const FieldState& s, const FieldState& last) {
    double acc = 0;
    for (std::size_t i = 0; i < s.E.size(); ++i) acc += std::norm(s.E[i]) + std::norm(s.P[i]) + std::norm(s.S[i]);
    if (!std::isfinite(acc)) {
        std::ostringstream os;
        os << "non-finite field values at t = " << s.t << " (last good state at t = " << last.t << ")";
        throw DivergenceError(os.str(), last);
    }
}

// Caches propagators for a run with fixed dt.
class Stepper {
public:
    Stepper(const Scenario& sc, double dt) : sc_(sc), dt_(dt) {
        G_ = std::sqrt(sc.medium.gN2());
        gamma_ = sc.medium.is_vacuum() ? 0.0 : sc.medium.gamma();
        if (sc.control && sc.control->domain() == ScheduleDomain::space) {
            const Grid& g = *sc.grid;
            per_cell_.resize(g.nz);
            for (std::size_t i = 0; i < g.nz; ++i) {
                const double om = sc.omega(g.z(i), 0.0);
                per_cell_[i] = local_propagator(G_, gamma_, [om](double) { return om; }, 0.0, 0.5 * dt);
            }
        } else if (!sc.control) {
            fixed_ = local_propagator(G_, gamma_, [](double) { return 0.0; }, 0.0, 0.5 * dt);
        }
    }

    void advance(FieldState& s) {
        local(s, s.t);
        transport(s.E, sc_, s.t, dt_, work_);
        local(s, s.t + 0.5 * dt_);
        s.t += dt_;
    }

private:
    void local(FieldState& s, double t0) {
        const std::size_t n = s.E.size();
        if (!per_cell_.empty()) {
            for (std::size_t i = 0; i < n; ++i) apply(per_cell_[i], s.E[i], s.P[i], s.S[i]);
            return;
        }
        Mat3 U;
        if (fixed_) {
            U = *fixed_;
        } else {
            const auto& ctl = *sc_.control;
            const double gN2 = sc_.medium.gN2();
            U = local_propagator(G_, gamma_, [&](double t) { return ctl.rabi(t, gN2); }, t0, 0.5 * dt_);
        }
        for (std::size_t i = 0; i < n; ++i) apply(U, s.E[i], s.P[i], s.S[i]);
    }

    const Scenario& sc_;
    double dt_, G_ = 0, gamma_ = 0;
    std::vector<Mat3> per_cell_;
    std::optional<Mat3> fixed_;
    std::vector<cplx> work_;
};

}  // namespace

// ---------------------------------------------------------------- API

FieldState initial_state(const Scenario& sc) {
    sc.validate();
    const Grid& g = *sc.grid;
    FieldState s;
    s.t = 0;
    s.E.assign(g.nz, 0.0);
    s.P.assign(g.nz, 0.0);
    s.S.assign(g.nz, 0.0);
    if (const auto* gp = std::get_if<GaussianPulse>(&sc.pulse)) {
        for (std::size_t i = 0; i < g.nz; ++i) {
            const double x = (g.z(i) - gp->center) / gp->width;
            s.E[i] = gp->amplitude * std::exp(-x * x);
            if (!sc.cold_start && !sc.medium.is_vacuum() && std::abs(s.E[i]) > 0) {
                const double th = sc.theta(g.z(i), 0.0);
                if (std::cos(th) < 1e-8)
                    throw ValidationError("scenario: adiabatic start needs cos(theta) > 0 where the pulse lives");
                s.S[i] = -std::tan(th) * s.E[i];
            }
        }
    } else {
        s.E[0] = inflow(sc, 0.0);
    }
    return s;
}

FieldState step(const FieldState& state, const Scenario& sc, double dt) {
    sc.validate();
    if (state.E.size() != sc.grid->nz || state.P.size() != sc.grid->nz || state.S.size() != sc.grid->nz)
        throw ValidationError("step: state does not match the grid");
    if (sc.grid->c * dt / sc.grid->dz > 1 + 1e-12) throw CflError("step: CFL number exceeds 1");
    if (!sc.medium.is_vacuum() && sc.medium.gamma() * dt > 0.1 + 1e-12)
        throw ValidationError("step: gamma * dt must be <= 0.1");
    Stepper st(sc, dt);
    FieldState out(state);
    st.advance(out);
    check_finite(out, state);
    return out;
}

double weak_probe_ratio(const FieldState& s, const Scenario& sc) {
    if (sc.medium.is_vacuum()) return 0.0;
    const double g = std::sqrt(sc.medium.gN2() / sc.atom_number);
    const double sqrtN = std::sqrt(sc.atom_number);
    const Grid& grid = *sc.grid;
    const bool space = sc.control && sc.control->domain() == ScheduleDomain::space;
    const double om_t = space ? 0.0 : sc.omega(0.0, s.t);
    double worst = 0;
    for (std::size_t i = 0; i < s.E.size(); ++i) {
        const double om = space ? sc.omega(grid.z(i), s.t) : om_t;
        const double r = om > 0 ? g * std::abs(s.E[i]) / om : std::abs(s.S[i]) / sqrtN;
        worst = std::max(worst, r);
    }
    return worst;
}

Diagnostics diagnose(const FieldState& s, const Scenario& sc) {
    const Grid& g = *sc.grid;
    Diagnostics d;
    d.t = s.t;
    double m0 = 0, m1 = 0, p0 = 0, p1 = 0;
    const bool space = sc.control && sc.control->domain() == ScheduleDomain::space;
    const double th_t = space ? 0.0 : sc.theta(0.0, s.t);
    for (std::size_t i = 0; i < s.E.size(); ++i) {
        const double z = g.z(i);
        const double e2 = std::norm(s.E[i]);
        m0 += e2;
        m1 += e2 * z;
        d.peak = std::max(d.peak, std::abs(s.E[i]));
        d.spin_energy += std::norm(s.S[i]);
        d.optical_energy += std::norm(s.P[i]);
        const double th = space ? sc.theta(z, s.t) : th_t;
        const double psi2 = std::norm(std::cos(th) * s.E[i] - std::sin(th) * s.S[i]);
        p0 += psi2;
        p1 += psi2 * z;
    }
    d.field_energy = m0 * g.dz;
    d.spin_energy *= g.dz;
    d.optical_energy *= g.dz;
    d.total_excitation = d.field_energy + d.spin_energy + d.optical_energy;
    d.polariton_number = p0 * g.dz;
    if (m0 > 0) {
        d.centroid = m1 / m0;
        double m2 = 0;
        for (std::size_t i = 0; i < s.E.size(); ++i) {
            const double dzc = g.z(i) - d.centroid;
            m2 += std::norm(s.E[i]) * dzc * dzc;
        }
        d.rms_width = std::sqrt(m2 / m0);
    }
    if (p0 > 0) d.polariton_centroid = p1 / p0;
    d.weak_probe = weak_probe_ratio(s, sc);
    return d;
}

RunResult run(const Scenario& sc) {
    FieldState s = initial_state(sc);
    const Grid& g = *sc.grid;
    const auto nsteps = static_cast<std::size_t>(std::llround(g.t_end / g.dt));

    std::vector<std::pair<std::size_t, std::size_t>> snaps;  // (step, slot)
    for (std::size_t k = 0; k < sc.snapshot_times.size(); ++k)
        snaps.emplace_back(static_cast<std::size_t>(std::llround(sc.snapshot_times[k] / g.dt)), k);
    std::sort(snaps.begin(), snaps.end());

    RunResult r;
    r.snapshots.resize(snaps.size());
    r.diagnostics.resize(snaps.size());
    for (double zp : sc.probe_points) {
        ProbeTrace p;
        p.z = zp;
        p.index = static_cast<std::size_t>(std::llround((zp - g.z_min) / g.dz));
        p.t.reserve(nsteps + 1);
        p.E.reserve(nsteps + 1);
        r.probes.push_back(std::move(p));
    }
    auto record = [&](std::size_t n) {
        for (auto& p : r.probes) {
            p.t.push_back(s.t);
            p.E.push_back(s.E[p.index]);
        }
        const double wp = weak_probe_ratio(s, sc);
        r.max_weak_probe = std::max(r.max_weak_probe, wp);
        for (const auto& [k, slot] : snaps) {
            if (k != n) continue;
            r.snapshots[slot] = s;
            r.diagnostics[slot] = diagnose(s, sc);
        }
    };

    Stepper st(sc, g.dt);
    record(0);
    FieldState last = s;
    for (std::size_t n = 1; n <= nsteps; ++n) {
        st.advance(s);
        s.t = static_cast<double>(n) * g.dt;
        if (n % 64 == 0 || n == nsteps) {
            check_finite(s, last);
            last = s;
        }
        record(n);
    }
    r.steps = nsteps;
    r.weak_probe_flag = r.max_weak_probe > kWeakProbeThreshold;
    return r;
}

// ---------------------------------------------------------------- closed forms

double integrate(const std::function<double(double)>& f, double a, double b,
                 const std::vector<double>& breaks, double tol) {
    if (a == b) return 0.0;
    const double sign = b > a ? 1.0 : -1.0;
    const double lo = std::min(a, b), hi = std::max(a, b);
    std::vector<double> pts{lo};
    for (double x : breaks)
        if (x > lo && x < hi) pts.push_back(x);
    pts.push_back(hi);
    std::sort(pts.begin(), pts.end());
    double total = 0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        double err = 0;
        total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, pts[i], pts[i + 1], 20,
                                                                               tol, &err);
    }
    return sign * total;
}

double propagation_delay(const std::function<double(double)>& v_gr, double z0, double z,
                         const std::vector<double>& breaks) {
    auto inv = [&](double x) {
        const double v = v_gr(x);
        if (!(v > 0)) throw DomainError("propagation delay diverges: v_gr <= 0 on the interval");
        return 1.0 / v;
    };
    const double d = integrate(inv, z0, z, breaks, 1e-12);
    if (!std::isfinite(d)) throw DomainError("propagation delay diverges");
    return d;
}

std::vector<cplx> analytic_space_profile(const std::function<cplx(double)>& E0_at_z0,
                                         const std::function<double(double)>& v_gr, double z0,
                                         const std::vector<double>& z, double t,
                                         const std::vector<double>& breaks) {
    std::vector<cplx> out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = E0_at_z0(t - propagation_delay(v_gr, z0, z[i], breaks));
    return out;
}

std::vector<cplx> shift_resample(const std::vector<cplx>& f, double z_min, double dz, double shift) {
    const std::size_t n = f.size();
    std::vector<double> re(n), im(n);
    for (std::size_t i = 0; i < n; ++i) {
        re[i] = f[i].real();
        im[i] = f[i].imag();
    }
    using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;
    const Spline sr(re.begin(), re.end(), z_min, dz), si(im.begin(), im.end(), z_min, dz);
    const double z_max = z_min + dz * static_cast<double>(n - 1);
    std::vector<cplx> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = z_min + dz * static_cast<double>(i) - shift;
        if (x < z_min || x > z_max) continue;
        out[i] = cplx(sr(x), si(x));
    }
    return out;
}

std::vector<cplx> analytic_time_profile(const std::vector<cplx>& E0, double z_min, double dz,
                                        const std::function<double(double)>& v_gr, double t,
                                        const std::vector<double>& breaks) {
    const double shift = integrate(
        [&](double tau) {
            const double v = v_gr(tau);
            if (v < 0) throw DomainError("analytic_time_profile: v_gr must be >= 0");
            return v;
        },
        0.0, t, breaks, 1e-12);
    return shift_resample(E0, z_min, dz, shift);
}

double rel_l2(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    if (a.size() != b.size()) throw ValidationError("rel_l2: size mismatch");
    double num = 0, den = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += std::norm(a[i] - b[i]);
        den += std::norm(b[i]);
    }
    if (den == 0) return num == 0 ? 0.0 : INFINITY;
    return std::sqrt(num / den);
}

// ---------------------------------------------------------------- export

std::string snapshot_csv(const FieldState& s, const Grid& g) {
    std::string out = "z,re_E,im_E,re_S,im_S,re_P,im_P\n";
    char buf[256];
    for (std::size_t i = 0; i < s.E.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.9g,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e\n", g.z(i), s.E[i].real(),
                      s.E[i].imag(), s.S[i].real(), s.S[i].imag(), s.P[i].real(), s.P[i].imag());
        out += buf;
    }
    return out;
}

std::string diagnostics_json(const RunResult& r, int indent) {
    nlohmann::ordered_json j;
    j["steps"] = r.steps;
    j["max_weak_probe"] = r.max_weak_probe;
    j["weak_probe_flag"] = r.weak_probe_flag;
    auto& arr = j["snapshots"] = nlohmann::ordered_json::array();
    for (const auto& d : r.diagnostics) {
        arr.push_back({{"t", d.t},
                       {"centroid", d.centroid},
                       {"rms_width", d.rms_width},
                       {"peak", d.peak},
                       {"field_energy", d.field_energy},
                       {"spin_energy", d.spin_energy},
                       {"optical_energy", d.optical_energy},
                       {"total_excitation", d.total_excitation},
                       {"polariton_number", d.polariton_number},
                       {"polariton_centroid", d.polariton_centroid},
                       {"weak_probe", d.weak_probe}});
    }
    return j.dump(indent);
}

}  // namespace eitmem
