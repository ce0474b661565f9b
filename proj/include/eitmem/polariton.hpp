#pragma once

#include <string>
#include <vector>

#include "eitmem/medium.hpp"
#include "eitmem/schedule.hpp"
#include "eitmem/solver.hpp"

namespace eitmem {

/// Psi = cos(theta) E - sin(theta) S,  Phi = sin(theta) E + cos(theta) S.
struct PolaritonState {
    double t = 0;
    std::vector<cplx> Psi, Phi;
    std::vector<double> theta;  ///< one entry per grid point, or a single shared entry
};

PolaritonState to_polariton(const std::vector<cplx>& E, const std::vector<cplx>& S, double theta,
                            double t = 0);
PolaritonState to_polariton(const std::vector<cplx>& E, const std::vector<cplx>& S,
                            const std::vector<double>& theta, double t = 0);

struct FieldPair {
    std::vector<cplx> E, S;
};
FieldPair from_polariton(const PolaritonState& p);

/// Distance travelled by the dark polariton, c * int_{t0}^{t1} cos^2(theta).
double dark_shift(const ControlSchedule& sched, double gN2, double c, double t0, double t1);

/// Psi(z, t) = Psi(z - c int_0^t cos^2 theta, 0) by cubic resampling.
std::vector<cplx> advect_dark(const std::vector<cplx>& Psi0, double z_min, double dz,
                              const ControlSchedule& sched, double gN2, double c, double t);

/// Coefficients of the first-order non-adiabatic correction
///   (d/dt + c cos^2 theta d/dz) Psi = -A Psi + B c Psi_z + C c^2 Psi_zz - D c^3 Psi_zzz.
struct CorrectionCoeffs {
    double A = 0, B = 0, C = 0, D = 0;
    double theta = 0, theta_dot = 0;
    bool a_negative = false;  ///< A < 0: the d/dt part dominates
    bool c_negative = false;
};

struct DerivativeOptions {
    double h = 1e-3;        ///< outer central-difference step
    double h_inner = 1e-4;  ///< step for theta' inside A
    double rel_tol = 1e-5;
    double abs_tol = 1e-7;
};

/// First and second derivatives by Richardson-extrapolated central
/// differences. Throws DomainError if the h and h/2 estimates disagree.
double richardson_d1(const std::function<double(double)>& f, double t, double h, double rel_tol = 1e-5,
                     double abs_tol = 1e-7);
double richardson_d2(const std::function<double(double)>& f, double t, double h, double rel_tol = 1e-5,
                     double abs_tol = 1e-7);

CorrectionCoeffs correction_coeffs(const ControlSchedule& sched, double t, const MediumParams& m,
                                   const DerivativeOptions& opt = {});

struct CorrectedOptions {
    double coefficient_scale = 1.0;  ///< multiplies A, B, C, D
    int time_intervals = 4000;       ///< composite Simpson intervals (made even)
    double edge_fraction = 1.0 / 32; ///< width of each window edge band
    double edge_tolerance = 1e-8;
};

struct CorrectedResult {
    std::vector<cplx> Psi;
    double int_A = 0, int_B = 0, int_C = 0, int_D = 0, int_cos2 = 0;
    double edge_mass = 0;
};

/// Solves the correction equation mode by mode in spatial Fourier space with
/// d/dz <-> iq. Each mode picks up
///   exp(-int A - c^2 q^2 int C + i(-c q int cos^2 + c q int B + c^3 q^3 int D)).
CorrectedResult corrected_propagate(const std::vector<cplx>& Psi0, double z_min, double dz,
                                    const ControlSchedule& sched, const MediumParams& m, double t,
                                    const CorrectedOptions& opt = {});

/// 1 - exp(-2 int_{t0}^{t1} A dt).
double predicted_loss(const ControlSchedule& sched, const MediumParams& m, double t0, double t1,
                      int intervals = 4000);

struct Margin {
    std::string name;
    double value = 0;
    bool pass = false;
};

/// Dimensionless adiabaticity margins, each required to be below
/// kMarginThreshold.
struct AdiabaticityReport {
    Margin propagation;   ///< gamma c^2 / (gN2 L_p^2) int sin^4 cos^2 dt
    double propagation_simplified = 0;  ///< same with sin(theta) = 1
    Margin rotation;      ///< gamma int thetadot^2 / (gN2 + Omega^2) dt
    Margin bandwidth;     ///< sqrt(alpha) gamma / (Omega0^2 T_p)
    Margin switching;     ///< (l_abs / c)(v0 / c) / T, T = 1 / max|thetadot|
    bool all_pass = false;
    double L_p = 0, T_p = 0, omega0 = 0, v0 = 0, T = 0;
};

inline constexpr double kMarginThreshold = 0.1;

AdiabaticityReport adiabaticity_report(const Scenario& sc);

struct BandwidthCheck {
    double pulse_width = 0;         ///< rms spectral width of the pulse, v0 * q_rms
    double transparency_width = 0;  ///< at omega_c0
    double ratio = 0;
    bool pass = false;
};

/// Compares the spectral width of a spatial pulse moving at v_gr(omega_c0)
/// with the initial transparency width; pass iff the ratio is below 0.1.
BandwidthCheck initial_bandwidth_check(const std::vector<cplx>& pulse, double dz, double omega_c0,
                                       const MediumParams& m);

}  // namespace eitmem
