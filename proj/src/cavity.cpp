#include "eitmem/cavity.hpp"

#include <cmath>
#include <sstream>

#include "eitmem/errors.hpp"

namespace eitmem {

void CavityParams::validate() const {
    if (!(g >= 0) || !(gamma >= 0) || !(kappa >= 0)) throw ValidationError("cavity: rates must be >= 0");
    if (n < 1) throw ValidationError("cavity: photon sector n must be >= 1");
    if (schedule.quantity() != ScheduleQuantity::rabi || schedule.domain() != ScheduleDomain::time)
        throw ValidationError("cavity: schedule must give Omega(t)");
}

Eigen::Matrix3cd block_hamiltonian(const CavityParams& p, double t) {
    p.validate();
    const double gn = p.g * std::sqrt(static_cast<double>(p.n));
    const double om = p.schedule.raw(t);
    Eigen::Matrix3cd H;
    H << cplx(0, -p.gamma), gn, om,
         gn, 0, 0,
         om, 0, 0;
    return H;
}

double dark_angle(const CavityParams& p, double t) {
    p.validate();
    const double gn = p.g * std::sqrt(static_cast<double>(p.n));
    const double om = p.schedule.raw(t);
    if (gn == 0 && om == 0) throw DomainError("dark_state: g sqrt(n) and Omega both vanish");
    return std::atan2(gn, om);
}

TripletAmplitudes dark_state(const CavityParams& p, double t) {
    const double th = dark_angle(p, t);
    return TripletAmplitudes(0.0, std::cos(th), -std::sin(th));
}

std::vector<TripletAmplitudes> evolve(const CavityParams& p, const TripletAmplitudes& psi0,
                                      const std::vector<double>& t_grid, double max_phase_step) {
    p.validate();
    if (std::abs(psi0.squaredNorm() - 1.0) > 1e-12) throw ValidationError("evolve: psi0 must be normalised");
    if (t_grid.empty()) return {};
    const cplx mi(0, -1);
    auto rhs = [&](double t, const TripletAmplitudes& y) -> TripletAmplitudes { return mi * (block_hamiltonian(p, t) * y); };

    std::vector<TripletAmplitudes> out{psi0};
    TripletAmplitudes y = psi0;
    for (std::size_t k = 1; k < t_grid.size(); ++k) {
        const double t0 = t_grid[k - 1], t1 = t_grid[k];
        if (!(t1 > t0)) throw ValidationError("evolve: time grid must increase");
        const double scale = block_hamiltonian(p, t0).cwiseAbs().rowwise().sum().maxCoeff() +
                             block_hamiltonian(p, t1).cwiseAbs().rowwise().sum().maxCoeff();
        const int m = std::max(1, static_cast<int>(std::ceil((t1 - t0) * scale / (2 * max_phase_step))));
        const double h = (t1 - t0) / m;
        for (int j = 0; j < m; ++j) {
            const double t = t0 + j * h;
            const double before = y.squaredNorm();
            const auto k1 = rhs(t, y);
            const auto k2 = rhs(t + h / 2, y + h / 2 * k1);
            const auto k3 = rhs(t + h / 2, y + h / 2 * k2);
            const auto k4 = rhs(t + h, y + h * k3);
            y += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
            if (!y.allFinite() || y.squaredNorm() > before + 1e-10) {
                std::ostringstream os;
                os << "evolve: norm grew at t = " << t << "; step too large";
                throw NumericalError(os.str());
            }
        }
        out.push_back(y);
    }
    return out;
}

double strong_coupling_margin(const CavityParams& p) {
    p.validate();
    if (!(p.kappa > 0) || !(p.gamma > 0)) throw ValidationError("strong_coupling_margin: need kappa, gamma > 0");
    return p.g * p.g / (p.kappa * p.gamma);
}

StirapResult stirap_transfer(double g, double gamma, int n, double X) {
    if (!(g > 0) || !(gamma > 0) || !(X > 0)) throw ValidationError("stirap_transfer: need g, gamma, X > 0");
    StirapResult r;
    r.X = X;
    r.T = X * gamma / (g * g * n);
    const double om0 = 30 * g * std::sqrt(static_cast<double>(n));
    CavityParams p;
    p.g = g;
    p.gamma = gamma;
    p.n = n;
    p.schedule = ControlSchedule::tanh_ramp(ScheduleQuantity::rabi, om0, 0.0, 4 * r.T, 1.0 / r.T);
    std::vector<double> grid;
    for (int i = 0; i <= 400; ++i) grid.push_back(8 * r.T * i / 400.0);
    const auto traj = evolve(p, TripletAmplitudes(0, 1, 0), grid);
    for (double t : grid) r.max_dark_residual = std::max(r.max_dark_residual, (block_hamiltonian(p, t) * dark_state(p, t)).norm());
    const auto& y = traj.back();
    r.pop_c = std::norm(y(2));
    r.pop_b = std::norm(y(1));
    r.norm2 = y.squaredNorm();
    return r;
}

}  // namespace eitmem
