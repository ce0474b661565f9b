#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "eitmem/schedule.hpp"

namespace eitmem {

using cplx = std::complex<double>;

inline constexpr int kMaxExactAtoms = 14;

/// Amplitudes over {b, c}^N x {photon number 0 .. n_max}. Index
/// q * 2^N + mask, where bit j-1 of mask set means atom j is in |c>.
class CollectiveState {
public:
    CollectiveState(int N, int n_max);

    /// All atoms in |b>, no photons.
    static CollectiveState vacuum(int N, int n_max);
    /// Binomial dark state |D,n> at mixing angle theta built from Dicke states.
    static CollectiveState dark(int n, double theta, int N, int n_max);

    int N() const { return N_; }
    int n_max() const { return n_max_; }
    std::size_t spin_dim() const { return std::size_t{1} << N_; }
    std::size_t dim() const { return spin_dim() * static_cast<std::size_t>(n_max_ + 1); }

    cplx& at(int q, std::uint32_t mask) { return amp[static_cast<std::size_t>(q) * spin_dim() + mask]; }
    cplx at(int q, std::uint32_t mask) const { return amp[static_cast<std::size_t>(q) * spin_dim() + mask]; }
    double norm() const { return amp.norm(); }
    void normalize();

    Eigen::VectorXcd amp;

private:
    int N_, n_max_;
};

/// Symmetric-sector representation: amplitude of |s c-excitations (Dicke), q photons>.
struct SymmetricState {
    int N = 0, n_max = 0;
    Eigen::MatrixXcd a;  ///< (N + 1) x (n_max + 1), a(s, q)

    SymmetricState(int N, int n_max);
    CollectiveState to_full() const;
    /// Projection of a full state onto the symmetric sector.
    static SymmetricState from_full(const CollectiveState& s);
};

/// sqrt(C(n,k)) (-sin theta)^k cos^(n-k) theta for k = 0 .. n.
Eigen::VectorXd dark_state_coefficients(int n, double theta, int N);

enum class ModeDirection { create, annihilate };

/// Psi^dagger = cos(theta) a^dagger - sin(theta) N^(-1/2) sum_j sigma_cb^j.
CollectiveState apply_dark_creation(const CollectiveState& s, double theta);
CollectiveState apply_dark_annihilation(const CollectiveState& s, double theta);
/// l = 0: Phi_0^dagger = sin(theta) a^dagger + cos(theta) N^(-1/2) sum_j sigma_cb^j.
/// l = 1 .. N-1: Phi_l^dagger = N^(-1/2) sum_j exp(-2 pi i l j / N) sigma_cb^j.
CollectiveState apply_bright_mode(const CollectiveState& s, int l, ModeDirection dir, double theta);
CollectiveState apply_photon_creation(const CollectiveState& s);
CollectiveState apply_photon_annihilation(const CollectiveState& s);

/// sigma_cb^j, j = 1 .. N (raises atom j from |b> to |c>).
CollectiveState spin_flip(const CollectiveState& s, int j);

/// Probability per dark-excitation number d = 0 .. (total excitations).
/// The photon and the symmetric magnons of each collective-spin sector J
/// form two bosonic modes rotated by theta; d counts quanta of the dark
/// combination. At theta = pi/2 this is J + J_z.
std::vector<double> equivalence_class_distribution(const CollectiveState& s, double theta);

/// Damps every bright excitation (symmetric bright quanta plus non-symmetric
/// magnons) with amplitude factor exp(-(Omega^2/gamma) dt) per quantum.
CollectiveState bright_mode_decay(const CollectiveState& s, double omega, double gamma, double dt, double theta);

// ---------------------------------------------------------------- storage map

using DensityMatrix = Eigen::MatrixXcd;

void validate_density_matrix(const DensityMatrix& rho);

/// (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2. sigma may be sub-normalised.
double uhlmann_fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);

struct StoreRetrieveOptions {
    double gamma = 1.0;
    double G = 10.0;          ///< g sqrt(N)
    double cot_high = 100.0;  ///< cot(theta) before storage and after retrieval
    double rate = 0.1;
    double t_store = 30.0;    ///< centre of the storing ramp
    double t_retrieve = 130.0;
    double t_end = 160.0;
    double dt = 0.02;
};

struct StoreRetrieveResult {
    DensityMatrix stored;      ///< spin-wave state at the midpoint, over s = 0 .. n_max
    DensityMatrix retrieved;   ///< photon state at t_end (un-normalised)
    double storage_fidelity = 0;  ///< stored vs (-1)^(n+m) rho_nm
    double fidelity = 0;          ///< retrieved vs input
    double retrieved_trace = 0;
    double max_cross_sector = 0;  ///< largest propagator element between excitation sectors
    double rotation_margin = 0;   ///< gamma int thetadot^2 / (G^2 + Omega^2)
    bool margin_flag = false;
};

/// Stores an n_max-photon field state into N atoms by rotating theta from ~0
/// to pi/2 and back, integrating the symmetric-sector dynamics with the
/// excited state eliminated. Loss from the dark manifold lowers the fidelity.
StoreRetrieveResult store_retrieve(const DensityMatrix& rho_f, int N, const StoreRetrieveOptions& opt = {});

// ---------------------------------------------------------------- decoherence

/// Out-of-class probability after sigma_cb^j on |D,n> at theta = pi/2,
/// averaged over j = 1 .. N.
double forced_flip_leak(int N, int n);

struct DecoherenceResult {
    int N = 0, n = 0;
    double p = 0;
    long trials = 0;
    std::uint64_t seed = 0;
    double mean_fidelity = 0;
    double ci_half_width = 0;
    double mean_flips = 0;
    std::vector<double> class_distribution;  ///< trial-averaged
    std::string to_json(int indent = 2) const;
};

DecoherenceResult decoherence_fidelity(int N, double p, int n, long trials, std::uint64_t seed);

}  // namespace eitmem
