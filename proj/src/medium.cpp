#include "eitmem/medium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "eitmem/errors.hpp"

namespace eitmem {

MediumParams::MediumParams(double eta, double gamma, double k, double length_L, double c)
    : eta_(eta), gamma_(gamma), k_(k), L_(length_L), c_(c), gN2_(eta * k * c * gamma) {
    validate();
}

MediumParams::MediumParams(double eta, double gamma, double k, double length_L, double c,
                           double gN2)
    : eta_(eta), gamma_(gamma), k_(k), L_(length_L), c_(c), gN2_(gN2) {
    validate();
    const double ref = eta * k * c * gamma;
    if (std::abs(gN2 - ref) > 1e-12 * std::abs(ref)) {
        std::ostringstream os;
        os << "gN2 = " << gN2 << " inconsistent with eta*k*c*gamma = " << ref;
        throw ValidationError(os.str());
    }
}

MediumParams MediumParams::from_scales(double etakc_over_gamma, double alpha, double gamma,
                                       double c) {
    if (!(etakc_over_gamma > 0) || !(alpha > 0) || !(gamma > 0) || !(c > 0))
        throw ValidationError("medium scales must be positive");
    const double eta = etakc_over_gamma * gamma / c;
    return MediumParams(eta, gamma, 1.0, alpha / eta, c);
}

MediumParams MediumParams::vacuum(double c, double length_L) {
    if (!(c > 0) || !(length_L > 0)) throw ValidationError("vacuum needs c > 0 and L > 0");
    MediumParams m;
    m.eta_ = 0.0;
    m.c_ = c;
    m.L_ = length_L;
    m.gN2_ = 0.0;
    return m;
}

void MediumParams::validate() const {
    if (!(eta_ > 0) || !(gamma_ > 0) || !(k_ > 0) || !(L_ > 0) || !(c_ > 0))
        throw ValidationError("medium parameters eta, gamma, k, L, c must be positive");
    if (!std::isfinite(eta_ * k_ * c_ * gamma_ * L_))
        throw ValidationError("medium parameters must be finite");
}

cplx susceptibility(double delta, double omega_c, const MediumParams& m) {
    if (!(omega_c > 0)) throw ValidationError("susceptibility: control Rabi frequency must be > 0");
    const double g = m.gamma();
    const cplx den(omega_c * omega_c - delta * delta, -g * delta);
    const double scale = omega_c * omega_c + delta * delta + g * std::abs(delta);
    if (std::abs(den) < 64 * std::numeric_limits<double>::epsilon() * scale)
        throw SingularityError("susceptibility: detuning sits on a pole");
    return m.eta() * g * delta / den;
}

double cos2_theta(double omega_c, double gN2) {
    const double o2 = omega_c * omega_c;
    if (o2 + gN2 == 0.0) throw DomainError("mixing angle undefined for Omega = gN2 = 0");
    return o2 / (o2 + gN2);
}

GroupQuantities group_quantities(double omega_c, const MediumParams& m) {
    if (!(omega_c > 0)) throw ValidationError("group_quantities: control Rabi frequency must be > 0");
    const double ng = m.eta() * m.k() * m.c() * m.gamma() / (omega_c * omega_c);
    return {ng, m.c() / (1.0 + ng)};
}

double transparency_width(double omega_c, const MediumParams& m) {
    if (!(m.opacity() > 0)) throw ValidationError("transparency_width: opacity must be > 0");
    return omega_c * omega_c / m.gamma() / std::sqrt(m.opacity());
}

double transparency_width_from_velocity(double omega_c, const MediumParams& m) {
    const auto gq = group_quantities(omega_c, m);
    return gq.v_gr / m.length_L() * std::sqrt(m.opacity());
}

std::vector<double> transmission_spectrum(const std::vector<double>& delta_grid, double omega_c,
                                          const MediumParams& m) {
    for (std::size_t i = 0; i < delta_grid.size(); ++i) {
        if (!std::isfinite(delta_grid[i])) throw ValidationError("transmission_spectrum: non-finite detuning");
        if (i > 0 && delta_grid[i] < delta_grid[i - 1])
            throw ValidationError("transmission_spectrum: detuning grid must be sorted");
    }
    std::vector<double> T(delta_grid.size());
    const double kL = m.k() * m.length_L();
    for (std::size_t i = 0; i < delta_grid.size(); ++i)
        T[i] = std::exp(-kL * susceptibility(delta_grid[i], omega_c, m).imag());
    return T;
}

namespace {
double crossing(double x0, double y0, double x1, double y1, double level) {
    if (y1 == y0) return 0.5 * (x0 + x1);
    return x0 + (level - y0) * (x1 - x0) / (y1 - y0);
}
}  // namespace

double fwhm(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3) throw ValidationError("fwhm: need matching arrays of size >= 3");
    const auto ip = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
    const double half = 0.5 * y[ip];
    std::size_t l = ip, r = ip;
    while (l > 0 && y[l] >= half) --l;
    while (r + 1 < y.size() && y[r] >= half) ++r;
    if (y[l] >= half || y[r] >= half) throw DomainError("fwhm: curve does not fall to half maximum on the grid");
    const double xl = crossing(x[l], y[l], x[l + 1], y[l + 1], half);
    const double xr = crossing(x[r - 1], y[r - 1], x[r], y[r], half);
    return xr - xl;
}

double rms_width(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.empty()) throw ValidationError("rms_width: size mismatch");
    double w = 0, m1 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        w += y[i];
        m1 += y[i] * x[i];
    }
    if (!(w > 0)) throw DomainError("rms_width: weight has no mass");
    const double mu = m1 / w;
    double m2 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) m2 += y[i] * (x[i] - mu) * (x[i] - mu);
    return std::sqrt(m2 / w);
}

double delay_ratio_bound(const MediumParams& m) {
    if (!(m.opacity() > 0)) throw ValidationError("delay_ratio_bound: opacity must be > 0");
    return std::sqrt(m.opacity());
}

}  // namespace eitmem
