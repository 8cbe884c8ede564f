#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "dafc/kernels.hpp"

using namespace dafc;

namespace {

std::vector<double> random_vec(std::mt19937_64& gen, std::size_t n, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    std::vector<double> v(n);
    for (double& x : v) x = u(gen);
    return v;
}

// Restores the dispatch choice on scope exit.
struct BackendGuard {
    kernels::Backend saved = kernels::active_backend();
    ~BackendGuard() { kernels::set_backend(saved); }
};

} // namespace

TEST_CASE("scalar dot against a long double accumulation") {
    std::mt19937_64 gen(1);
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 16u, 33u, 1000u}) {
        const auto a = random_vec(gen, n), b = random_vec(gen, n);
        long double want = 0.0L;
        for (std::size_t i = 0; i < n; ++i) want += static_cast<long double>(a[i]) * b[i];
        CHECK(kernels::scalar::dot(a, b) == doctest::Approx(static_cast<double>(want)).epsilon(1e-13));
    }
}

TEST_CASE("scalar blend_outer against the formula") {
    std::mt19937_64 gen(2);
    const std::size_t n = 5;
    auto F = random_vec(gen, n * n);
    const auto F0 = F;
    const auto psi = random_vec(gen, n);
    kernels::scalar::blend_outer(F, psi, 0.3);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            CHECK(F[i * n + j] == doctest::Approx(F0[i * n + j] + 0.3 * (psi[i] * psi[j] - F0[i * n + j])));
}

TEST_CASE("scalar bin_projection against std::polar") {
    std::mt19937_64 gen(3);
    const auto x = random_vec(gen, 777);
    const double cycles = 0.0123;
    const std::int64_t k0 = 123456789;
    std::complex<long double> want = 0.0L;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const long double ph = -2.0L * std::numbers::pi_v<long double> *
                               std::fmod(static_cast<long double>(cycles) * static_cast<long double>(k0 + static_cast<std::int64_t>(i)), 1.0L);
        want += static_cast<long double>(x[i]) * std::polar(1.0L, ph);
    }
    const auto got = kernels::scalar::bin_projection(x, cycles, k0);
    CHECK(std::abs(got.real() - static_cast<double>(want.real())) < 1e-9);
    CHECK(std::abs(got.imag() - static_cast<double>(want.imag())) < 1e-9);
}

TEST_CASE("scalar lagged_gram against explicit delay vectors") {
    std::mt19937_64 gen(4);
    const auto x = random_vec(gen, 100);
    const std::size_t m = 4;
    std::vector<double> out(m * m);
    kernels::scalar::lagged_gram(x, m, out);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double s = 0.0;
            std::size_t count = 0;
            for (std::size_t t = m - 1; t < x.size(); ++t, ++count) s += x[t - i] * x[t - j];
            CHECK(out[i * m + j] == doctest::Approx(s / static_cast<double>(count)).epsilon(1e-12));
        }
}

TEST_CASE("AVX2 kernels are equivalent to the scalar reference") {
    if (!kernels::avx2_available()) {
        MESSAGE("AVX2/FMA not available on this CPU; equivalence not exercised");
        return;
    }
    std::mt19937_64 gen(5);
    for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 8u, 9u, 10u, 31u, 64u, 1001u}) {
        const auto a = random_vec(gen, n, 10.0), b = random_vec(gen, n, 10.0);
        const double s = kernels::scalar::dot(a, b), v = kernels::avx2::dot(a, b);
        double mag = 0.0;
        for (std::size_t i = 0; i < n; ++i) mag += std::abs(a[i] * b[i]);
        CHECK(std::abs(s - v) <= 1e-14 * mag);

        auto F1 = random_vec(gen, n * n), F2 = F1;
        const auto psi = random_vec(gen, n);
        kernels::scalar::blend_outer(F1, psi, 0.01);
        kernels::avx2::blend_outer(F2, psi, 0.01);
        for (std::size_t i = 0; i < F1.size(); ++i) CHECK(std::abs(F1[i] - F2[i]) <= 1e-14 * (1.0 + std::abs(F1[i])));

        const auto x = random_vec(gen, 40 * n + 3);
        const auto p1 = kernels::scalar::bin_projection(x, 0.0287, 99);
        const auto p2 = kernels::avx2::bin_projection(x, 0.0287, 99);
        CHECK(std::abs(p1 - p2) <= 1e-11 * static_cast<double>(x.size()));

        const std::size_t m = 1 + n % 12;
        std::vector<double> g1(m * m), g2(m * m);
        kernels::scalar::lagged_gram(x, m, g1);
        kernels::avx2::lagged_gram(x, m, g2);
        for (std::size_t i = 0; i < g1.size(); ++i) CHECK(std::abs(g1[i] - g2[i]) <= 1e-13);
    }
}

TEST_CASE("backend selection") {
    BackendGuard guard;
    kernels::set_backend(kernels::Backend::Scalar);
    CHECK(kernels::active_backend() == kernels::Backend::Scalar);
    CHECK(kernels::backend_name(kernels::Backend::Scalar) == "scalar");
    if (kernels::avx2_available()) {
        kernels::set_backend(kernels::Backend::Avx2);
        CHECK(kernels::active_backend() == kernels::Backend::Avx2);
    } else {
        CHECK_THROWS_AS(kernels::set_backend(kernels::Backend::Avx2), std::invalid_argument);
    }
}
