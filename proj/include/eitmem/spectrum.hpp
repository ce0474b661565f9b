#pragma once

#include <complex>
#include <vector>

namespace eitmem {

using cplx = std::complex<double>;

/// Power spectrum on an angular-frequency grid (ascending, zero included).
/// Normalised so that sum(power) * d_omega equals sum(|x|^2) * dt.
struct PowerSpectrum {
    std::vector<double> omega;
    std::vector<double> power;
    double d_omega = 0;
    double fwhm = 0;       ///< full width at half maximum of `power`
    double rms_width = 0;  ///< rms of omega weighted by `power`
    double parseval_residual = 0;  ///< relative mismatch of the two energy sums
};

PowerSpectrum spectrum(const std::vector<cplx>& samples, double spacing);
PowerSpectrum spectrum(const std::vector<double>& samples, double spacing);
/// Checks that `times` is uniformly spaced (relative 1e-9) before delegating.
PowerSpectrum spectrum(const std::vector<double>& times, const std::vector<cplx>& samples);

/// Unnormalised discrete Fourier transform with FFTW's sign convention
/// (forward: exp(-2 pi i jk / n)).
std::vector<cplx> dft(const std::vector<cplx>& x, bool forward);

/// Wavenumbers 2 pi k / (n dx) in FFT order.
std::vector<double> fft_wavenumbers(std::size_t n, double dx);

}  // namespace eitmem
