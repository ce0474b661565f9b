#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "eitmem/errors.hpp"
#include "eitmem/medium.hpp"
#include "eitmem/schedule.hpp"

namespace eitmem {

/// Uniform grid z_i = z_min + i dz, i = 0 .. nz-1, dz = (z_max - z_min) / nz.
struct Grid {
    Grid(double z_min, double z_max, std::size_t nz, double t_end, double dt, double c = 1.0);
    /// dt = dz / c, the exact-shift transport regime.
    static Grid unit_cfl(double z_min, double z_max, std::size_t nz, double t_end, double c = 1.0);

    double z(std::size_t i) const { return z_min + static_cast<double>(i) * dz; }
    std::vector<double> points() const;
    double courant() const { return c * dt / dz; }
    bool exact_shift() const;

    double z_min, z_max;
    std::size_t nz;
    double dz, t_end, dt, c;
};

/// Field envelopes at one instant. P and S are the sqrt(N)-scaled optical
/// and spin coherences; rho_ab = P / sqrt(N), rho_cb = S / sqrt(N).
struct FieldState {
    double t = 0;
    std::vector<cplx> E, P, S;

    std::vector<cplx> rho_ab(double atom_number) const;
    std::vector<cplx> rho_cb(double atom_number) const;
};

/// Non-finite values during integration. Carries the last good state.
class DivergenceError : public NumericalError {
public:
    DivergenceError(const std::string& what, FieldState last) : NumericalError(what), last_good(std::move(last)) {}
    FieldState last_good;
};

/// amplitude * exp(-((z - center) / width)^2), placed inside the medium.
struct GaussianPulse {
    double center = 0, width = 1, amplitude = 1;
};

/// E(z_min, t) prescribed; the grid starts empty.
struct BoundaryInjection {
    std::function<cplx(double)> waveform;
};

struct Scenario {
    MediumParams medium = MediumParams::vacuum();
    std::optional<Grid> grid;
    /// Time- or space-domain control. Absent means Omega = 0.
    std::optional<ControlSchedule> control;
    std::variant<GaussianPulse, BoundaryInjection> pulse = GaussianPulse{};
    /// S(z, 0) = 0 instead of the adiabatic S = -tan(theta) E.
    bool cold_start = false;
    /// Atom number used only for the weak-probe monitor, g = sqrt(gN2 / N).
    double atom_number = 1e8;
    std::vector<double> snapshot_times;
    /// Positions at which E(t) is recorded every step.
    std::vector<double> probe_points;

    void validate() const;
    double omega(double z, double t) const;
    double theta(double z, double t) const;
};

struct Diagnostics {
    double t = 0;
    double centroid = 0;    ///< of |E|^2
    double rms_width = 0;   ///< of |E|^2
    double peak = 0;        ///< max |E|
    double field_energy = 0;     ///< int |E|^2
    double spin_energy = 0;      ///< int |S|^2
    double optical_energy = 0;   ///< int |P|^2
    double total_excitation = 0; ///< sum of the three
    double polariton_number = 0; ///< int |Psi|^2
    double polariton_centroid = 0;
    double weak_probe = 0;       ///< max g|E|/Omega
};

struct ProbeTrace {
    double z = 0;
    std::size_t index = 0;
    std::vector<double> t;
    std::vector<cplx> E;
};

struct RunResult {
    std::vector<FieldState> snapshots;
    std::vector<Diagnostics> diagnostics;
    std::vector<ProbeTrace> probes;
    double max_weak_probe = 0;
    bool weak_probe_flag = false;
    std::size_t steps = 0;
};

inline constexpr double kWeakProbeThreshold = 0.3;

FieldState initial_state(const Scenario& sc);

/// One Strang step: local half step, transport of E, local half step.
FieldState step(const FieldState& state, const Scenario& sc, double dt);

RunResult run(const Scenario& sc);

Diagnostics diagnose(const FieldState& s, const Scenario& sc);

/// Ratio g|E|/Omega maximised over the grid; |S|/sqrt(N) where Omega = 0.
double weak_probe_ratio(const FieldState& s, const Scenario& sc);

/// int_a^b f by adaptive Gauss-Kronrod, split at the supplied breakpoints.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const std::vector<double>& breaks = {}, double tol = 1e-12);

/// E(z, t) = E0(t - int_{z0}^{z} dz' / v(z')).
std::vector<cplx> analytic_space_profile(const std::function<cplx(double)>& E0_at_z0,
                                         const std::function<double(double)>& v_gr, double z0,
                                         const std::vector<double>& z, double t,
                                         const std::vector<double>& breaks = {});
/// The delay int_{z0}^{z} dz'/v(z').
double propagation_delay(const std::function<double(double)>& v_gr, double z0, double z,
                         const std::vector<double>& breaks = {});

/// E(z, t) = E0(z - int_0^t v(tau) dtau), E0 given on a uniform grid and
/// resampled with a cubic B-spline; zero outside the sampled window.
std::vector<cplx> analytic_time_profile(const std::vector<cplx>& E0, double z_min, double dz,
                                        const std::function<double(double)>& v_gr, double t,
                                        const std::vector<double>& breaks = {});
std::vector<cplx> shift_resample(const std::vector<cplx>& f, double z_min, double dz, double shift);

/// Relative L2 distance ||a - b|| / ||b||.
double rel_l2(const std::vector<cplx>& a, const std::vector<cplx>& b);

std::string snapshot_csv(const FieldState& s, const Grid& g);
std::string diagnostics_json(const RunResult& r, int indent = 2);

}  // namespace eitmem
