#include "eitmem/spectrum.hpp"

#include <fftw3.h>

#include <cmath>
#include <numbers>

#include "eitmem/errors.hpp"
#include "eitmem/medium.hpp"

namespace eitmem {

std::vector<cplx> dft(const std::vector<cplx>& x, bool forward) {
    const int n = static_cast<int>(x.size());
    std::vector<cplx> in(x), out(x.size());
    fftw_plan plan = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(in.data()),
                                      reinterpret_cast<fftw_complex*>(out.data()),
                                      forward ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!plan) throw NumericalError("fftw plan creation failed");
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    return out;
}

std::vector<double> fft_wavenumbers(std::size_t n, double dx) {
    std::vector<double> q(n);
    const double base = 2 * std::numbers::pi / (static_cast<double>(n) * dx);
    for (std::size_t k = 0; k < n; ++k) {
        const long kk = k < (n + 1) / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
        q[k] = base * static_cast<double>(kk);
    }
    return q;
}

PowerSpectrum spectrum(const std::vector<cplx>& samples, double spacing) {
    const std::size_t n = samples.size();
    if (n < 64) throw ValidationError("spectrum: need at least 64 samples");
    if (!(spacing > 0) || !std::isfinite(spacing)) throw ValidationError("spectrum: spacing must be > 0");
    const auto X = dft(samples, true);
    const auto w = fft_wavenumbers(n, spacing);

    PowerSpectrum s;
    s.d_omega = 2 * std::numbers::pi / (static_cast<double>(n) * spacing);
    s.omega.resize(n);
    s.power.resize(n);
    // Reorder into ascending frequency.
    const std::size_t half = (n + 1) / 2;
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t k = (j + half) % n;
        s.omega[j] = w[k];
        s.power[j] = std::norm(spacing * X[k]) / (2 * std::numbers::pi);
    }
    double et = 0, ew = 0;
    for (const auto& v : samples) et += std::norm(v) * spacing;
    for (double p : s.power) ew += p * s.d_omega;
    s.parseval_residual = et > 0 ? std::abs(ew - et) / et : 0.0;
    if (et > 0) {
        s.rms_width = rms_width(s.omega, s.power);
        s.fwhm = fwhm(s.omega, s.power);
    }
    return s;
}

PowerSpectrum spectrum(const std::vector<double>& samples, double spacing) {
    return spectrum(std::vector<cplx>(samples.begin(), samples.end()), spacing);
}

PowerSpectrum spectrum(const std::vector<double>& times, const std::vector<cplx>& samples) {
    if (times.size() != samples.size()) throw ValidationError("spectrum: size mismatch");
    if (times.size() < 2) throw ValidationError("spectrum: need at least 64 samples");
    const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    for (std::size_t i = 1; i < times.size(); ++i)
        if (std::abs((times[i] - times[i - 1]) - dt) > 1e-9 * std::abs(dt))
            throw ValidationError("spectrum: sampling is not uniform");
    return spectrum(samples, dt);
}

}  // namespace eitmem
