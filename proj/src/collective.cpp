#include "eitmem/collective.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>
#include <unordered_map>

#include <json.hpp>

#include "eitmem/errors.hpp"

namespace eitmem {

namespace {

constexpr double kOverflowTol = 1e-13;

double binom(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

double factorial(int n) {
    double r = 1;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

void check_sizes(int N, int n_max) {
    if (N < 1 || N > kMaxExactAtoms) throw ValidationError("collective: N must lie in 1 .. 14");
    if (n_max < 0) throw ValidationError("collective: n_max must be >= 0");
}

// Masks grouped by popcount, with positions inside each group.
struct SpinSpace {
    int N;
    std::vector<std::vector<std::uint32_t>> masks;
    std::vector<std::uint32_t> pos;

    explicit SpinSpace(int n) : N(n), masks(static_cast<std::size_t>(n + 1)), pos(std::size_t{1} << n) {
        for (std::uint32_t m = 0; m < (std::uint32_t{1} << n); ++m) {
            auto& grp = masks[static_cast<std::size_t>(std::popcount(m))];
            pos[m] = static_cast<std::uint32_t>(grp.size());
            grp.push_back(m);
        }
    }

    // J+ from popcount e to e + 1.
    Eigen::VectorXcd raise(int e, const Eigen::VectorXcd& v) const {
        Eigen::VectorXcd out = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(masks[e + 1].size()));
        const auto& src = masks[e];
        for (std::size_t i = 0; i < src.size(); ++i) {
            if (v[i] == 0.0) continue;
            for (int b = 0; b < N; ++b) {
                const std::uint32_t bit = std::uint32_t{1} << b;
                if (!(src[i] & bit)) out[pos[src[i] | bit]] += v[i];
            }
        }
        return out;
    }

    // J- from popcount e to e - 1.
    Eigen::VectorXcd lower(int e, const Eigen::VectorXcd& v) const {
        Eigen::VectorXcd out = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(masks[e - 1].size()));
        const auto& src = masks[e];
        for (std::size_t i = 0; i < src.size(); ++i) {
            if (v[i] == 0.0) continue;
            for (int b = 0; b < N; ++b) {
                const std::uint32_t bit = std::uint32_t{1} << b;
                if (src[i] & bit) out[pos[src[i] & ~bit]] += v[i];
            }
        }
        return out;
    }
};

const SpinSpace& spin_space(int N) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<SpinSpace>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[N];
    if (!slot) slot = std::make_unique<SpinSpace>(N);
    return *slot;
}

// Norm of J-^s acting on |J, -J + s>, 2J = N - 2 beta.
double ladder(int twoJ, int s) {
    double r = 1;
    for (int k = 1; k <= s; ++k) r *= static_cast<double>(k) * (twoJ - k + 1);
    return std::sqrt(r);
}

// <d, K-d | q, s> for the two-mode rotation a+ = c D+ + s F+, b+ = -s D+ + c F+.
double rotation_element(int d, int q, int s, double th) {
    const int K = q + s;
    const double co = std::cos(th), si = std::sin(th);
    double coef = 0;
    for (int i = std::max(0, d - s); i <= std::min(q, d); ++i) {
        coef += binom(q, i) * std::pow(co, i) * std::pow(si, q - i) * binom(s, d - i) * std::pow(-si, d - i) *
                std::pow(co, s - d + i);
    }
    return coef * std::sqrt(factorial(d) * factorial(K - d) / (factorial(q) * factorial(s)));
}

// Per (beta, q, s): lowest-weight vector of the sector-J component, with
// 2J = N - 2 beta and s symmetric magnons above the bottom.
struct Decomposition {
    int N = 0, n_max = 0;
    std::map<std::tuple<int, int, int>, Eigen::VectorXcd> u;
};

Decomposition decompose(const CollectiveState& st) {
    const int N = st.N();
    const SpinSpace& sp = spin_space(N);
    Decomposition dec;
    dec.N = N;
    dec.n_max = st.n_max();
    for (int q = 0; q <= st.n_max(); ++q) {
        for (int e = 0; e <= N; ++e) {
            const auto& grp = sp.masks[e];
            Eigen::VectorXcd v(static_cast<Eigen::Index>(grp.size()));
            for (std::size_t i = 0; i < grp.size(); ++i) v[static_cast<Eigen::Index>(i)] = st.at(q, grp[i]);
            if (v.squaredNorm() == 0.0) continue;
            const int bmax = std::min(e, N - e);
            // X = J+ J- on popcount e has eigenvalue (e - beta)(N - e - beta + 1) in sector beta.
            auto mu = [&](int b) { return static_cast<double>(e - b) * (N - e - b + 1); };
            auto X = [&](const Eigen::VectorXcd& x) -> Eigen::VectorXcd {
                if (e == 0) return Eigen::VectorXcd::Zero(x.size());
                return sp.raise(e - 1, sp.lower(e, x));
            };
            for (int b = 0; b <= bmax; ++b) {
                Eigen::VectorXcd w = v;
                // Largest eigenvalues first.
                for (int b2 = 0; b2 <= bmax; ++b2) {
                    if (b2 == b) continue;
                    w = (X(w) - mu(b2) * w) / (mu(b) - mu(b2));
                }
                const int s = e - b;
                for (int k = e; k > b; --k) w = sp.lower(k, w);
                w /= ladder(N - 2 * b, s);
                dec.u[{b, q, s}] = std::move(w);
            }
        }
    }
    return dec;
}

// Dark-number amplitude vectors x_d for sector beta, total symmetric quanta K.
std::vector<Eigen::VectorXcd> dark_components(const Decomposition& dec, int b, int K, double th, Eigen::Index dim) {
    std::vector<Eigen::VectorXcd> x(static_cast<std::size_t>(K + 1), Eigen::VectorXcd::Zero(dim));
    for (int q = 0; q <= K; ++q) {
        const auto it = dec.u.find({b, q, K - q});
        if (it == dec.u.end()) continue;
        for (int d = 0; d <= K; ++d) x[static_cast<std::size_t>(d)] += rotation_element(d, q, K - q, th) * it->second;
    }
    return x;
}

int max_symmetric_quanta(const Decomposition& dec, int b) {
    int K = -1;
    for (const auto& [key, vec] : dec.u)
        if (std::get<0>(key) == b) K = std::max(K, std::get<1>(key) + std::get<2>(key));
    return K;
}

}  // namespace

// ---------------------------------------------------------------- states

CollectiveState::CollectiveState(int N, int n_max) : N_(N), n_max_(n_max) {
    check_sizes(N, n_max);
    amp = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dim()));
}

CollectiveState CollectiveState::vacuum(int N, int n_max) {
    CollectiveState s(N, n_max);
    s.at(0, 0) = 1.0;
    return s;
}

void CollectiveState::normalize() {
    const double n = norm();
    if (n == 0) throw DomainError("cannot normalise the zero state");
    amp /= n;
}

CollectiveState CollectiveState::dark(int n, double theta, int N, int n_max) {
    if (n > n_max) throw ValidationError("dark state: n exceeds n_max");
    const auto coef = dark_state_coefficients(n, theta, N);
    SymmetricState sym(N, n_max);
    for (int k = 0; k <= n; ++k) sym.a(k, n - k) = coef[k];
    return sym.to_full();
}

SymmetricState::SymmetricState(int N_, int n_max_) : N(N_), n_max(n_max_) {
    check_sizes(N_, n_max_);
    a = Eigen::MatrixXcd::Zero(N_ + 1, n_max_ + 1);
}

CollectiveState SymmetricState::to_full() const {
    CollectiveState f(N, n_max);
    const SpinSpace& sp = spin_space(N);
    for (int s = 0; s <= N; ++s) {
        const double w = 1.0 / std::sqrt(binom(N, s));
        for (int q = 0; q <= n_max; ++q) {
            if (a(s, q) == 0.0) continue;
            for (auto m : sp.masks[s]) f.at(q, m) = a(s, q) * w;
        }
    }
    return f;
}

SymmetricState SymmetricState::from_full(const CollectiveState& f) {
    SymmetricState sym(f.N(), f.n_max());
    const SpinSpace& sp = spin_space(f.N());
    for (int s = 0; s <= f.N(); ++s) {
        const double w = 1.0 / std::sqrt(binom(f.N(), s));
        for (int q = 0; q <= f.n_max(); ++q) {
            cplx acc = 0;
            for (auto m : sp.masks[s]) acc += f.at(q, m);
            sym.a(s, q) = acc * w;
        }
    }
    return sym;
}

Eigen::VectorXd dark_state_coefficients(int n, double theta, int N) {
    if (n < 0) throw ValidationError("dark_state_coefficients: n must be >= 0");
    if (n >= N) throw ValidationError("dark_state_coefficients: need n < N");
    Eigen::VectorXd c(n + 1);
    for (int k = 0; k <= n; ++k)
        c[k] = std::sqrt(binom(n, k)) * std::pow(-std::sin(theta), k) * std::pow(std::cos(theta), n - k);
    return c;
}

// ---------------------------------------------------------------- operators

CollectiveState apply_photon_creation(const CollectiveState& s) {
    CollectiveState out(s.N(), s.n_max());
    const std::size_t D = s.spin_dim();
    for (int q = 0; q <= s.n_max(); ++q) {
        for (std::size_t m = 0; m < D; ++m) {
            const cplx v = s.at(q, static_cast<std::uint32_t>(m));
            if (v == 0.0) continue;
            if (q == s.n_max()) {
                if (std::abs(v) > kOverflowTol) throw DomainError("photon creation exceeds n_max");
                continue;
            }
            out.at(q + 1, static_cast<std::uint32_t>(m)) += std::sqrt(q + 1.0) * v;
        }
    }
    return out;
}

CollectiveState apply_photon_annihilation(const CollectiveState& s) {
    CollectiveState out(s.N(), s.n_max());
    const std::size_t D = s.spin_dim();
    for (int q = 1; q <= s.n_max(); ++q)
        for (std::size_t m = 0; m < D; ++m)
            out.at(q - 1, static_cast<std::uint32_t>(m)) += std::sqrt(static_cast<double>(q)) * s.at(q, static_cast<std::uint32_t>(m));
    return out;
}

namespace {

// sum_j w_j sigma_cb^j (or its adjoint with conj weights when lowering).
CollectiveState spin_sum(const CollectiveState& s, const std::vector<cplx>& w, bool raise) {
    CollectiveState out(s.N(), s.n_max());
    const std::size_t D = s.spin_dim();
    for (int q = 0; q <= s.n_max(); ++q) {
        for (std::size_t m = 0; m < D; ++m) {
            const cplx v = s.at(q, static_cast<std::uint32_t>(m));
            if (v == 0.0) continue;
            for (int j = 0; j < s.N(); ++j) {
                const std::uint32_t bit = std::uint32_t{1} << j;
                const bool up = m & bit;
                if (raise && !up) out.at(q, static_cast<std::uint32_t>(m | bit)) += w[static_cast<std::size_t>(j)] * v;
                if (!raise && up) out.at(q, static_cast<std::uint32_t>(m & ~bit)) += std::conj(w[static_cast<std::size_t>(j)]) * v;
            }
        }
    }
    return out;
}

std::vector<cplx> uniform_weights(int N, double scale) { return std::vector<cplx>(static_cast<std::size_t>(N), scale / std::sqrt(N)); }

}  // namespace

CollectiveState spin_flip(const CollectiveState& s, int j) {
    if (j < 1 || j > s.N()) throw ValidationError("spin_flip: atom index must lie in 1 .. N");
    std::vector<cplx> w(static_cast<std::size_t>(s.N()), 0.0);
    w[static_cast<std::size_t>(j - 1)] = 1.0;
    return spin_sum(s, w, true);
}

CollectiveState apply_dark_creation(const CollectiveState& s, double theta) {
    CollectiveState out = spin_sum(s, uniform_weights(s.N(), -std::sin(theta)), true);
    if (std::cos(theta) != 0.0) out.amp += std::cos(theta) * apply_photon_creation(s).amp;
    return out;
}

CollectiveState apply_dark_annihilation(const CollectiveState& s, double theta) {
    CollectiveState out = spin_sum(s, uniform_weights(s.N(), -std::sin(theta)), false);
    out.amp += std::cos(theta) * apply_photon_annihilation(s).amp;
    return out;
}

CollectiveState apply_bright_mode(const CollectiveState& s, int l, ModeDirection dir, double theta) {
    if (l < 0 || l >= s.N()) throw ValidationError("apply_bright_mode: l must lie in 0 .. N-1");
    const bool create = dir == ModeDirection::create;
    if (l == 0) {
        CollectiveState out = spin_sum(s, uniform_weights(s.N(), std::cos(theta)), create);
        if (std::sin(theta) != 0.0)
            out.amp += std::sin(theta) * (create ? apply_photon_creation(s) : apply_photon_annihilation(s)).amp;
        return out;
    }
    std::vector<cplx> w(static_cast<std::size_t>(s.N()));
    for (int j = 1; j <= s.N(); ++j)
        w[static_cast<std::size_t>(j - 1)] = std::polar(1.0 / std::sqrt(s.N()), -2 * std::numbers::pi * l * j / s.N());
    return spin_sum(s, w, create);
}

// ---------------------------------------------------------------- classes

std::vector<double> equivalence_class_distribution(const CollectiveState& s, double theta) {
    const auto dec = decompose(s);
    const SpinSpace& sp = spin_space(s.N());
    std::vector<double> dist;
    for (int b = 0; b <= s.N() / 2; ++b) {
        const int Kmax = max_symmetric_quanta(dec, b);
        const auto dim = static_cast<Eigen::Index>(sp.masks[b].size());
        for (int K = 0; K <= Kmax; ++K) {
            const auto x = dark_components(dec, b, K, theta, dim);
            for (int d = 0; d <= K; ++d) {
                if (static_cast<int>(dist.size()) <= d) dist.resize(static_cast<std::size_t>(d + 1), 0.0);
                dist[static_cast<std::size_t>(d)] += x[static_cast<std::size_t>(d)].squaredNorm();
            }
        }
    }
    const double tot = s.amp.squaredNorm();
    if (tot > 0)
        for (auto& p : dist) p /= tot;
    return dist;
}

CollectiveState bright_mode_decay(const CollectiveState& s, double omega, double gamma, double dt, double theta) {
    if (!(gamma > 0) || !(dt >= 0)) throw ValidationError("bright_mode_decay: need gamma > 0, dt >= 0");
    const double rate = omega * omega / gamma;
    const auto dec = decompose(s);
    const SpinSpace& sp = spin_space(s.N());
    CollectiveState out(s.N(), s.n_max());
    for (int b = 0; b <= s.N() / 2; ++b) {
        const int Kmax = max_symmetric_quanta(dec, b);
        const auto dim = static_cast<Eigen::Index>(sp.masks[b].size());
        const int twoJ = s.N() - 2 * b;
        for (int K = 0; K <= Kmax; ++K) {
            auto x = dark_components(dec, b, K, theta, dim);
            for (int d = 0; d <= K; ++d) x[static_cast<std::size_t>(d)] *= std::exp(-rate * (K - d + b) * dt);
            for (int q = 0; q <= K; ++q) {
                const int sm = K - q;
                Eigen::VectorXcd u = Eigen::VectorXcd::Zero(dim);
                for (int d = 0; d <= K; ++d) u += rotation_element(d, q, sm, theta) * x[static_cast<std::size_t>(d)];
                if (u.squaredNorm() == 0.0) continue;
                if (q > s.n_max() || sm > twoJ) {
                    if (u.norm() > 1e-12) throw DomainError("bright_mode_decay: state leaves the truncated space");
                    continue;
                }
                Eigen::VectorXcd w = u / ladder(twoJ, sm);
                for (int k = b; k < b + sm; ++k) w = sp.raise(k, w);
                const auto& grp = sp.masks[b + sm];
                for (std::size_t i = 0; i < grp.size(); ++i) out.at(q, grp[i]) += w[static_cast<Eigen::Index>(i)];
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------- storage

void validate_density_matrix(const DensityMatrix& rho) {
    if (rho.rows() != rho.cols() || rho.rows() == 0) throw ValidationError("density matrix must be square");
    if ((rho - rho.adjoint()).norm() > 1e-12) throw ValidationError("density matrix must be Hermitian");
    if (std::abs(rho.trace() - cplx(1, 0)) > 1e-12) throw ValidationError("density matrix must have unit trace");
    Eigen::SelfAdjointEigenSolver<DensityMatrix> es(rho);
    if (es.eigenvalues().minCoeff() < -1e-10) throw ValidationError("density matrix must be positive semidefinite");
}

namespace {
DensityMatrix psd_sqrt(const DensityMatrix& m) {
    Eigen::SelfAdjointEigenSolver<DensityMatrix> es(0.5 * (m + m.adjoint()));
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}
}  // namespace

double uhlmann_fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
    if (rho.rows() != sigma.rows()) throw ValidationError("uhlmann_fidelity: size mismatch");
    const DensityMatrix r = psd_sqrt(rho);
    const DensityMatrix inner = psd_sqrt(r * sigma * r);
    const double t = inner.trace().real();
    return t * t;
}

StoreRetrieveResult store_retrieve(const DensityMatrix& rho_f, int N, const StoreRetrieveOptions& opt) {
    validate_density_matrix(rho_f);
    const int n_max = static_cast<int>(rho_f.rows()) - 1;
    if (n_max >= N) throw ValidationError("store_retrieve: need n_max < N");
    if (!(opt.dt > 0) || !(opt.t_end > 0) || !(opt.gamma > 0) || !(opt.G > 0))
        throw ValidationError("store_retrieve: invalid options");

    const auto sched = ControlSchedule::tanh_pulse_pair(ScheduleQuantity::cot_theta, opt.cot_high, 0.0, opt.t_store,
                                                        opt.t_retrieve, opt.rate);
    const double G2 = opt.G * opt.G, g = opt.G / std::sqrt(N);

    // Symmetric basis |s, q> with s + q <= n_max.
    std::vector<std::pair<int, int>> basis;
    std::map<std::pair<int, int>, int> index;
    for (int K = 0; K <= n_max; ++K)
        for (int s = 0; s <= K; ++s) {
            index[{s, K - s}] = static_cast<int>(basis.size());
            basis.emplace_back(s, K - s);
        }
    const auto dim = static_cast<Eigen::Index>(basis.size());

    // sum_j L_j^dagger L_j with L_j = g a sigma_ab^j + Omega sigma_ac^j.
    auto generator = [&](double omega) {
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dim, dim);
        for (Eigen::Index i = 0; i < dim; ++i) {
            const auto [s, q] = basis[static_cast<std::size_t>(i)];
            M(i, i) = g * g * q * (N - s) + omega * omega * s;
            if (q > 0 && s < N) {
                const auto it = index.find({s + 1, q - 1});
                if (it != index.end()) {
                    const double v = g * omega * std::sqrt(static_cast<double>(q) * (s + 1) * (N - s));
                    M(it->second, i) += v;
                    M(i, it->second) += v;
                }
            }
        }
        return M;
    };

    const int steps = static_cast<int>(std::ceil(opt.t_end / opt.dt));
    const double h = opt.t_end / steps;
    const int mid_step = static_cast<int>(std::llround(0.5 * (opt.t_store + opt.t_retrieve) / h));
    Eigen::MatrixXcd U = Eigen::MatrixXcd::Identity(dim, dim), U_mid = U;
    for (int k = 0; k < steps; ++k) {
        const double om = sched.rabi((k + 0.5) * h, G2);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(generator(om));
        const Eigen::VectorXd decay = (-es.eigenvalues().array().cwiseMax(0.0) * h / opt.gamma).exp();
        const Eigen::MatrixXd step = es.eigenvectors() * decay.asDiagonal() * es.eigenvectors().transpose();
        U = step.cast<cplx>() * U;
        if (k + 1 == mid_step) U_mid = U;
    }

    StoreRetrieveResult r;
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j) {
            const int Ki = basis[static_cast<std::size_t>(i)].first + basis[static_cast<std::size_t>(i)].second;
            const int Kj = basis[static_cast<std::size_t>(j)].first + basis[static_cast<std::size_t>(j)].second;
            if (Ki != Kj) r.max_cross_sector = std::max({r.max_cross_sector, std::abs(U(i, j)), std::abs(U_mid(i, j))});
        }

    // Input lives on |s = 0, q = n>.
    Eigen::MatrixXcd rho_in = Eigen::MatrixXcd::Zero(dim, dim);
    for (int n = 0; n <= n_max; ++n)
        for (int m = 0; m <= n_max; ++m) rho_in(index[{0, n}], index[{0, m}]) = rho_f(n, m);
    const Eigen::MatrixXcd rho_mid = U_mid * rho_in * U_mid.adjoint();
    const Eigen::MatrixXcd rho_out = U * rho_in * U.adjoint();

    r.stored = DensityMatrix::Zero(n_max + 1, n_max + 1);
    r.retrieved = DensityMatrix::Zero(n_max + 1, n_max + 1);
    DensityMatrix target_store(n_max + 1, n_max + 1);
    for (int n = 0; n <= n_max; ++n)
        for (int m = 0; m <= n_max; ++m) {
            r.stored(n, m) = rho_mid(index[{n, 0}], index[{m, 0}]);
            r.retrieved(n, m) = rho_out(index[{0, n}], index[{0, m}]);
            target_store(n, m) = ((n + m) % 2 ? -1.0 : 1.0) * rho_f(n, m);
        }
    r.retrieved_trace = r.retrieved.trace().real();
    r.fidelity = uhlmann_fidelity(rho_f, r.retrieved);
    r.storage_fidelity = uhlmann_fidelity(target_store, r.stored);

    // gamma int thetadot^2 / (G^2 + Omega^2) by the midpoint rule on a fine grid.
    const int fine = 200000;
    const double hf = opt.t_end / fine;
    for (int k = 0; k < fine; ++k) {
        const double t = (k + 0.5) * hf;
        const double d = (sched.theta(t + 1e-5, G2) - sched.theta(t - 1e-5, G2)) / 2e-5;
        const double om = sched.rabi(t, G2);
        r.rotation_margin += opt.gamma * d * d / (G2 + om * om) * hf;
    }
    r.margin_flag = r.rotation_margin >= 0.1;
    return r;
}

// ---------------------------------------------------------------- decoherence

double forced_flip_leak(int N, int n) {
    if (n >= N) throw ValidationError("forced_flip_leak: need n < N");
    const auto d = CollectiveState::dark(n, std::numbers::pi / 2, N, n);
    double acc = 0;
    for (int j = 1; j <= N; ++j) {
        auto f = spin_flip(d, j);
        f.normalize();
        const auto dist = equivalence_class_distribution(f, std::numbers::pi / 2);
        acc += 1.0 - (static_cast<int>(dist.size()) > n ? dist[static_cast<std::size_t>(n)] : 0.0);
    }
    return acc / N;
}

DecoherenceResult decoherence_fidelity(int N, double p, int n, long trials, std::uint64_t seed) {
    if (N < 2 || N > kMaxExactAtoms) throw ValidationError("decoherence_fidelity: N must lie in 2 .. 14");
    if (!(p >= 0 && p <= 1)) throw ValidationError("decoherence_fidelity: p must lie in [0, 1]");
    if (n < 0 || n >= N) throw ValidationError("decoherence_fidelity: need 0 <= n < N");
    if (trials < 100) throw ValidationError("decoherence_fidelity: need at least 100 trials");

    const double th = std::numbers::pi / 2;
    const auto base = CollectiveState::dark(n, th, N, n);
    struct Outcome {
        double fidelity;
        std::vector<double> dist;
    };
    std::unordered_map<std::uint32_t, Outcome> memo;
    auto evaluate = [&](std::uint32_t flips) -> const Outcome& {
        auto it = memo.find(flips);
        if (it != memo.end()) return it->second;
        CollectiveState s = base;
        for (int j = 1; j <= N; ++j)
            if (flips & (std::uint32_t{1} << (j - 1))) s = spin_flip(s, j);
        Outcome o;
        if (s.norm() < 1e-12) {
            o.fidelity = 0;
        } else {
            s.normalize();
            o.dist = equivalence_class_distribution(s, th);
            o.fidelity = static_cast<int>(o.dist.size()) > n ? o.dist[static_cast<std::size_t>(n)] : 0.0;
        }
        return memo.emplace(flips, std::move(o)).first->second;
    };

    DecoherenceResult r;
    r.N = N;
    r.n = n;
    r.p = p;
    r.trials = trials;
    r.seed = seed;
    double sum = 0, sum2 = 0, flips_total = 0;
    for (long t = 0; t < trials; ++t) {
        std::seed_seq ss{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                         static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(static_cast<std::uint64_t>(t) >> 32)};
        std::mt19937_64 rng(ss);
        std::bernoulli_distribution flip(p);
        std::uint32_t mask = 0;
        for (int j = 0; j < N; ++j)
            if (flip(rng)) mask |= std::uint32_t{1} << j;
        flips_total += std::popcount(mask);
        const auto& o = evaluate(mask);
        sum += o.fidelity;
        sum2 += o.fidelity * o.fidelity;
        if (r.class_distribution.size() < o.dist.size()) r.class_distribution.resize(o.dist.size(), 0.0);
        for (std::size_t k = 0; k < o.dist.size(); ++k) r.class_distribution[k] += o.dist[k];
    }
    const double T = static_cast<double>(trials);
    r.mean_fidelity = sum / T;
    const double var = std::max(0.0, (sum2 - sum * sum / T) / (T - 1));
    r.ci_half_width = 1.96 * std::sqrt(var / T);
    r.mean_flips = flips_total / T;
    for (auto& v : r.class_distribution) v /= T;
    return r;
}

std::string DecoherenceResult::to_json(int indent) const {
    nlohmann::ordered_json j;
    j["N"] = N;
    j["n"] = n;
    j["p"] = p;
    j["trials"] = trials;
    j["seed"] = seed;
    j["mean_fidelity"] = mean_fidelity;
    j["ci95_low"] = mean_fidelity - ci_half_width;
    j["ci95_high"] = mean_fidelity + ci_half_width;
    j["mean_flips"] = mean_flips;
    j["class_distribution"] = class_distribution;
    return j.dump(indent);
}

}  // namespace eitmem
