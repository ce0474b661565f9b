#pragma once

#include <complex>
#include <vector>

namespace eitmem {

using cplx = std::complex<double>;

/// Static constants of a Lambda-type EIT medium. Simulation units: c = 1,
/// gamma = 1 unless overridden. gN2 is the collective coupling g^2 N and is
/// tied to the others by gN2 = eta k c gamma.
class MediumParams {
public:
    MediumParams(double eta, double gamma, double k, double length_L, double c = 1.0);
    /// Same, with an explicitly supplied gN2 that must be consistent.
    MediumParams(double eta, double gamma, double k, double length_L, double c, double gN2);

    /// Convenience: k = 1, eta = (eta k c / gamma) * gamma / c, L = alpha / (eta k).
    static MediumParams from_scales(double etakc_over_gamma, double alpha, double gamma = 1.0,
                                    double c = 1.0);
    /// Empty space (no atoms). The only instance with eta = 0.
    static MediumParams vacuum(double c = 1.0, double length_L = 1.0);

    double eta() const { return eta_; }
    double gamma() const { return gamma_; }
    double k() const { return k_; }
    double length_L() const { return L_; }
    double c() const { return c_; }
    double gN2() const { return gN2_; }
    double opacity() const { return eta_ * k_ * L_; }
    bool is_vacuum() const { return eta_ == 0.0; }

private:
    MediumParams() = default;
    void validate() const;
    double eta_ = 0, gamma_ = 1, k_ = 1, L_ = 1, c_ = 1, gN2_ = 0;
};

struct GroupQuantities {
    double n_g;
    double v_gr;
};

cplx susceptibility(double delta, double omega_c, const MediumParams& m);

GroupQuantities group_quantities(double omega_c, const MediumParams& m);

/// cos^2(theta) with tan^2(theta) = gN2 / Omega^2.
double cos2_theta(double omega_c, double gN2);

double transparency_width(double omega_c, const MediumParams& m);

/// Same quantity written through the group velocity, (v_gr / L) sqrt(alpha).
/// Agrees with transparency_width when n_g >> 1.
double transparency_width_from_velocity(double omega_c, const MediumParams& m);

/// T(delta) = exp(-k L Im chi(delta)).
std::vector<double> transmission_spectrum(const std::vector<double>& delta_grid, double omega_c,
                                          const MediumParams& m);

/// Full width at half maximum of a single-peaked curve sampled on a sorted
/// grid, with linear interpolation of the crossings.
double fwhm(const std::vector<double>& x, const std::vector<double>& y);

/// RMS width of y used as a weight over x.
double rms_width(const std::vector<double>& x, const std::vector<double>& y);

double delay_ratio_bound(const MediumParams& m);

}  // namespace eitmem
