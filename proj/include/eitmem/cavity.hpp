#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "eitmem/schedule.hpp"

namespace eitmem {

using cplx = std::complex<double>;

/// Single atom in a cavity, photon sector n. Basis ordering of every
/// 3-vector and 3x3 block: (|a,n>, |b,n+1>, |c,n>).
struct CavityParams {
    double g = 1;
    double gamma = 0;
    double kappa = 0;  ///< enters strong_coupling_margin only
    ControlSchedule schedule = ControlSchedule::constant(ScheduleQuantity::rabi, 0.0);
    int n = 1;

    void validate() const;
};

using TripletAmplitudes = Eigen::Vector3cd;

/// [[-i gamma, g sqrt(n), Omega], [g sqrt(n), 0, 0], [Omega, 0, 0]].
Eigen::Matrix3cd block_hamiltonian(const CavityParams& p, double t);

/// cos(theta_n) |b,n+1> - sin(theta_n) |c,n>, tan(theta_n) = g sqrt(n) / Omega.
TripletAmplitudes dark_state(const CavityParams& p, double t);
double dark_angle(const CavityParams& p, double t);

/// Amplitudes at each entry of t_grid (the first entry is psi0).
std::vector<TripletAmplitudes> evolve(const CavityParams& p, const TripletAmplitudes& psi0,
                                      const std::vector<double>& t_grid, double max_phase_step = 0.2);

double strong_coupling_margin(const CavityParams& p);

/// Transfer |b,n+1> -> |c,n> with Omega(t) = Omega0 (1 - tanh((t - 4T)/T)) / 2 on
/// [0, 8T], T = X gamma / (g^2 n) and Omega0 = 30 g sqrt(n).
struct StirapResult {
    double X = 0, T = 0;
    double pop_c = 0;     ///< final |c,n> population
    double pop_b = 0;
    double norm2 = 0;     ///< surviving norm
    double max_dark_residual = 0;  ///< max ||H phi0|| over the ramp
};
StirapResult stirap_transfer(double g, double gamma, int n, double X);

}  // namespace eitmem
