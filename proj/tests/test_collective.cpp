#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cmath>
#include <numbers>
#include <random>

#include <json.hpp>

#include "eitmem/collective.hpp"
#include "eitmem/errors.hpp"

using namespace eitmem;

namespace {
constexpr double kPi = std::numbers::pi;

CollectiveState random_state(int N, int n_max, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> nd;
    CollectiveState s(N, n_max);
    for (Eigen::Index i = 0; i < s.amp.size(); ++i) s.amp[i] = cplx(nd(rng), nd(rng));
    s.normalize();
    return s;
}

// Independent oracle: symmetric Dicke amplitudes by direct enumeration.
CollectiveState dark_by_enumeration(int n, double th, int N) {
    CollectiveState s(N, n);
    for (std::uint32_t m = 0; m < (1u << N); ++m) {
        const int k = std::popcount(m);
        if (k > n) continue;
        double choose_nk = 1, choose_Nk = 1;
        for (int i = 1; i <= k; ++i) {
            choose_nk = choose_nk * (n - k + i) / i;
            choose_Nk = choose_Nk * (N - k + i) / i;
        }
        s.at(n - k, m) = std::sqrt(choose_nk / choose_Nk) * std::pow(-std::sin(th), k) * std::pow(std::cos(th), n - k);
    }
    return s;
}

double overlap2(const CollectiveState& a, const CollectiveState& b) { return std::norm(a.amp.dot(b.amp)); }

double class_prob(const std::vector<double>& d, int n) {
    return n < static_cast<int>(d.size()) ? d[static_cast<std::size_t>(n)] : 0.0;
}
}  // namespace

TEST_CASE("dark state coefficients") {
    const auto c = dark_state_coefficients(2, kPi / 4, 6);
    CHECK(c[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(c[1] == doctest::Approx(-std::sqrt(2.0) / 2).epsilon(1e-14));
    CHECK(c[2] == doctest::Approx(0.5).epsilon(1e-14));
    for (int n = 0; n < 5; ++n) CHECK(dark_state_coefficients(n, 0.37, 8).squaredNorm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(dark_state_coefficients(6, 0.3, 6), ValidationError);
}

TEST_CASE("dark state matches enumeration and is normalised") {
    for (int n = 0; n <= 3; ++n) {
        const auto d = CollectiveState::dark(n, 0.7, 7, n);
        CHECK(d.norm() == doctest::Approx(1.0).epsilon(1e-13));
        CHECK((d.amp - dark_by_enumeration(n, 0.7, 7).amp).norm() < 1e-13);
    }
}

TEST_CASE("symmetric and full representations agree") {
    SymmetricState sym(6, 2);
    std::mt19937 rng(3);
    std::normal_distribution<double> nd;
    for (int s = 0; s <= 6; ++s)
        for (int q = 0; q <= 2; ++q) sym.a(s, q) = cplx(nd(rng), nd(rng));
    const auto back = SymmetricState::from_full(sym.to_full());
    CHECK((back.a - sym.a).norm() < 1e-12);
    CHECK(sym.to_full().norm() == doctest::Approx(sym.a.norm()).epsilon(1e-12));
}

TEST_CASE("repeated dark creation: exact for one excitation, 1/N deviation above") {
    const double th = 0.9;
    for (int N : {6, 12}) {
        CollectiveState s = CollectiveState::vacuum(N, 3);
        double fact = 1;
        for (int n = 1; n <= 3; ++n) {
            s = apply_dark_creation(s, th);
            fact *= n;
            CollectiveState scaled = s;
            scaled.amp /= std::sqrt(fact);
            const auto d = CollectiveState::dark(n, th, N, 3);
            const double err = (scaled.amp - d.amp).norm();
            if (n == 1) {
                CHECK(err < 1e-13);
            } else {
                CHECK(err > 1e-6);
                CHECK(err < 1.5 * n * n / static_cast<double>(N));
            }
        }
    }
}

TEST_CASE("mode number operators sum to the excitation number") {
    const int N = 5;
    const double th = 0.6;
    auto s = random_state(N, 2, 11);
    for (std::uint32_t m = 0; m < (1u << N); ++m) s.at(2, m) = 0;
    Eigen::VectorXcd total = apply_dark_creation(apply_dark_annihilation(s, th), th).amp;
    for (int l = 0; l < N; ++l)
        total += apply_bright_mode(apply_bright_mode(s, l, ModeDirection::annihilate, th), l, ModeDirection::create, th).amp;
    Eigen::VectorXcd number = Eigen::VectorXcd::Zero(s.amp.size());
    for (int q = 0; q <= 2; ++q)
        for (std::uint32_t m = 0; m < (1u << N); ++m)
            number[static_cast<Eigen::Index>(q * (1u << N) + m)] = static_cast<double>(q + std::popcount(m)) * s.at(q, m);
    CHECK((total - number).norm() < 1e-12);
}

TEST_CASE("single-atom flip decomposes into collective modes") {
    for (auto [N, j, th] : {std::tuple{4, 2, kPi / 2}, std::tuple{6, 5, 0.4}, std::tuple{5, 1, 1.2}}) {
        const auto s = random_state(N, 2, static_cast<unsigned>(N * 10 + j));
        // Avoid the truncated photon level.
        CollectiveState low = s;
        for (std::uint32_t m = 0; m < (1u << N); ++m) low.at(2, m) = 0;
        Eigen::VectorXcd rhs = -std::sin(th) * apply_dark_creation(low, th).amp;
        rhs += std::cos(th) * apply_bright_mode(low, 0, ModeDirection::create, th).amp;
        for (int l = 1; l < N; ++l)
            rhs += std::polar(1.0, 2 * kPi * l * j / N) * apply_bright_mode(low, l, ModeDirection::create, th).amp;
        rhs /= std::sqrt(N);
        CHECK((spin_flip(low, j).amp - rhs).norm() < 1e-12);
    }
    CHECK_THROWS_AS(spin_flip(CollectiveState::vacuum(4, 0), 5), ValidationError);
}

TEST_CASE("class distribution of dark and bright excitations") {
    const int N = 8;
    for (double th : {kPi / 2, 0.8, 0.2}) {
        for (int n = 0; n <= 3; ++n) {
            const auto dist = equivalence_class_distribution(CollectiveState::dark(n, th, N, 3), th);
            CHECK(class_prob(dist, n) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    // Non-symmetric bright magnons keep the dark number at theta = pi/2.
    for (int n = 0; n <= 2; ++n) {
        auto s = apply_bright_mode(CollectiveState::dark(n, kPi / 2, N, 2), 3, ModeDirection::create, kPi / 2);
        s.normalize();
        CHECK(class_prob(equivalence_class_distribution(s, kPi / 2), n) == doctest::Approx(1.0).epsilon(1e-12));
    }
    // Bright-mode creation preserves the dark number at general theta to O(1/N).
    double prev = 1;
    for (int n_atoms : {6, 9, 12}) {
        auto s = apply_bright_mode(CollectiveState::dark(1, 0.7, n_atoms, 2), 0, ModeDirection::create, 0.7);
        s.normalize();
        const double leak = 1 - class_prob(equivalence_class_distribution(s, 0.7), 1);
        CHECK(leak < 1.0 / n_atoms);
        CHECK(leak < prev);
        prev = leak;
    }
}

TEST_CASE("forced flip leaks (n + 1)/N out of the class") {
    for (int N : {4, 6, 10})
        for (int n = 0; n <= 2; ++n) CHECK(forced_flip_leak(N, n) == doctest::Approx((n + 1.0) / N).epsilon(1e-12));
    const double leak = forced_flip_leak(10, 1);
    CHECK(1 - leak == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("bright decay damps bright quanta and spares dark ones") {
    const int N = 6;
    const double th = 0.9, om = 2.0, ga = 1.0, t = 0.1;
    auto bright = apply_bright_mode(CollectiveState::vacuum(N, 1), 2, ModeDirection::create, th);
    const auto decayed = bright_mode_decay(bright, om, ga, t, th);
    CHECK(decayed.amp.squaredNorm() == doctest::Approx(std::exp(-2 * om * om * t / ga)).epsilon(1e-12));

    auto bright0 = apply_bright_mode(CollectiveState::vacuum(N, 1), 0, ModeDirection::create, th);
    CHECK(bright_mode_decay(bright0, om, ga, t, th).amp.squaredNorm() ==
          doctest::Approx(std::exp(-2 * om * om * t / ga)).epsilon(1e-12));

    CollectiveState mix(N, 2);
    mix.amp = (CollectiveState::dark(1, th, N, 2).amp + CollectiveState::dark(2, th, N, 2).amp) / std::sqrt(2.0);
    const auto kept = bright_mode_decay(mix, om, ga, 5.0, th);
    CHECK((kept.amp - mix.amp).norm() < 1e-12);
    const auto before = equivalence_class_distribution(mix, th);
    const auto after = equivalence_class_distribution(kept, th);
    for (std::size_t k = 0; k < before.size(); ++k) CHECK(after[k] == doctest::Approx(before[k]).epsilon(1e-12));
}

TEST_CASE("store and retrieve of photon states") {
    DensityMatrix vac = DensityMatrix::Zero(1, 1);
    vac(0, 0) = 1;
    const auto rv = store_retrieve(vac, 6);
    CHECK(rv.fidelity == doctest::Approx(1.0).epsilon(1e-12));

    DensityMatrix one = DensityMatrix::Zero(2, 2);
    one(1, 1) = 1;
    const auto r1 = store_retrieve(one, 8);
    CHECK(r1.fidelity > 0.99);
    CHECK(r1.storage_fidelity > 0.99);
    CHECK(r1.max_cross_sector < 1e-10);
    CHECK_FALSE(r1.margin_flag);

    DensityMatrix sup = DensityMatrix::Constant(2, 2, 0.5);
    const auto rs = store_retrieve(sup, 8);
    CHECK(std::abs(rs.retrieved(0, 1)) > 0.99 * 0.5);
    CHECK(rs.fidelity > 0.99);
    CHECK(rs.stored(0, 1).real() < 0);

    DensityMatrix bad = DensityMatrix::Zero(2, 2);
    bad(0, 0) = 0.7;
    CHECK_THROWS_AS(store_retrieve(bad, 8), ValidationError);
}

TEST_CASE("fidelity of pure states is the squared overlap") {
    Eigen::VectorXcd a(2), b(2);
    a << 1, 0;
    b << std::cos(0.3), std::sin(0.3);
    CHECK(uhlmann_fidelity(a * a.adjoint(), b * b.adjoint()) == doctest::Approx(std::pow(std::cos(0.3), 2)).epsilon(1e-10));
}

TEST_CASE("Monte Carlo decoherence") {
    const auto clean = decoherence_fidelity(6, 0.0, 1, 200, 7);
    CHECK(clean.mean_fidelity == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(clean.ci_half_width == doctest::Approx(0.0));

    const auto a = decoherence_fidelity(6, 0.05, 1, 2000, 42);
    const auto b = decoherence_fidelity(12, 0.05, 1, 2000, 42);
    CHECK(std::abs(a.mean_fidelity - b.mean_fidelity) < a.ci_half_width + b.ci_half_width + 0.02);
    CHECK(a.mean_fidelity < 1.0);

    const auto again = decoherence_fidelity(6, 0.05, 1, 2000, 42);
    CHECK(again.mean_fidelity == a.mean_fidelity);

    CHECK_THROWS_AS(decoherence_fidelity(6, 0.05, 1, 99, 1), ValidationError);
    CHECK_THROWS_AS(decoherence_fidelity(6, 1.5, 1, 200, 1), ValidationError);

    const auto j = nlohmann::json::parse(a.to_json());
    CHECK(j["trials"] == 2000);
    CHECK(j["ci95_low"].get<double>() <= j["mean_fidelity"].get<double>());
}
