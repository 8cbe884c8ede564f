#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "dafc/error.hpp"
#include "dafc/lti.hpp"
#include "dafc/phase.hpp"
#include "dafc/regressor.hpp"

using namespace dafc;

namespace {

DisturbanceSpec table1_spec() {
    const double T = 1.0 / 41760.0;
    std::vector<double> w;
    for (int i = 1; i <= 4; ++i) w.push_back(kTwoPi * 120.0 * i);
    return DisturbanceSpec(w, {1.0, 0.6, 0.4, 0.25}, {0.3, -1.1, 2.0, 0.7}, T);
}

} // namespace

TEST_CASE("disturbance spec validation") {
    CHECK_THROWS_AS(DisturbanceSpec::frequencies_only({2.0, 1.0}, 1.0), SpecValidationError);
    CHECK_THROWS_AS(DisturbanceSpec::frequencies_only({1.0, 1.0}, 1.0), SpecValidationError);
    CHECK_THROWS_AS(DisturbanceSpec::frequencies_only({3.2}, 1.0), SpecValidationError);
    CHECK_THROWS_AS(DisturbanceSpec::frequencies_only({0.0}, 1.0), SpecValidationError);
    CHECK_THROWS_AS(DisturbanceSpec({1.0}, {-1.0}, {0.0}, 1.0), SpecValidationError);
    CHECK_THROWS_AS(DisturbanceSpec({1.0}, {1.0, 2.0}, {0.0}, 1.0), SpecValidationError);
}

TEST_CASE("common period of commensurate harmonics") {
    CHECK(table1_spec().period() == 348);
    const std::vector<double> cycles{0.25, 0.1};
    CHECK(common_period(cycles) == 20);
    const std::vector<double> irrational{1.0 / std::numbers::pi};
    CHECK_FALSE(common_period(irrational, 100000).has_value());
}

TEST_CASE("phi_R layout and values") {
    const auto spec = table1_spec();
    const auto p0 = phi_R(spec, 0);
    for (int i = 0; i < 4; ++i) {
        CHECK(p0[2 * i] == 0.0);
        CHECK(p0[2 * i + 1] == 1.0);
    }
    for (std::int64_t k : {1, 17, 347, 1000}) {
        const auto p = phi_R(spec, k);
        for (std::size_t i = 0; i < 4; ++i) {
            const double a = spec.omegas()[i] * spec.sample_period() * static_cast<double>(k);
            CHECK(p[2 * static_cast<Eigen::Index>(i)] == doctest::Approx(std::sin(a)).epsilon(1e-12));
            CHECK(p[2 * static_cast<Eigen::Index>(i) + 1] == doctest::Approx(std::cos(a)).epsilon(1e-12));
        }
    }
}

TEST_CASE("phi_R is periodic at very large k") {
    const auto spec = table1_spec();
    for (std::int64_t k : {std::int64_t{5}, std::int64_t{1000003}, std::int64_t{9048000000005}}) {
        const auto a = phi_R(spec, k);
        const auto b = phi_R(spec, k + 348);
        CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-9);
        CHECK(a.squaredNorm() == doctest::Approx(4.0).epsilon(1e-14));
    }
}

TEST_CASE("phase reduction stays exact for large k") {
    // oracle: the double c is M 2^-s exactly, so frac(c k) comes from 128-bit
    // integer arithmetic
    const double c = 120.0 / 41760.0;
    int e = 0;
    const double m = std::frexp(c, &e);
    const auto M = static_cast<std::int64_t>(std::ldexp(m, 53));
    const int s = 53 - e;
    REQUIRE(s < 127);
    for (std::int64_t k : {std::int64_t{1} << 40, (std::int64_t{1} << 50) + 123, std::int64_t{987654321987}}) {
        const unsigned __int128 P = static_cast<unsigned __int128>(M) * static_cast<unsigned __int128>(k);
        const unsigned __int128 mask = (static_cast<unsigned __int128>(1) << s) - 1;
        long double frac = std::ldexp(static_cast<long double>(P & mask), -s);
        frac -= std::floor(frac + 0.5L);
        CHECK(std::abs(phase_cycles(c, k) - static_cast<double>(frac)) < 1e-15);
    }
}

TEST_CASE("disturbance_value reproduces the configured harmonics") {
    const auto spec = table1_spec();
    const auto theta = spec.theta();
    for (std::int64_t k : {0, 3, 100, 12345}) {
        double want = 0.0;
        for (std::size_t i = 0; i < 4; ++i)
            want += spec.amps()[i] * std::sin(spec.omegas()[i] * spec.sample_period() * static_cast<double>(k) + spec.phases()[i]);
        CHECK(disturbance_value(theta, spec, k) == doctest::Approx(want).epsilon(1e-12));
    }
    CHECK_THROWS_AS(disturbance_value(Eigen::VectorXd::Zero(3), spec, 0), DimensionError);
}

TEST_CASE("regressor bank keeps most recent samples first") {
    RegressorBank bank(3);
    bank.push(1.0, 10.0, 100.0);
    bank.push(2.0, 20.0, 200.0);
    CHECK(bank.phi_e()[0] == 2.0);
    CHECK(bank.phi_e()[1] == 1.0);
    CHECK(bank.phi_e()[2] == 0.0);
    CHECK(bank.phi_u()[0] == 20.0);
    CHECK(bank.phi_uA()[1] == 100.0);
    CHECK(bank.k() == 2);
    CHECK_THROWS_AS(bank.push(std::nan(""), 0.0, 0.0), NumericFault);
}

TEST_CASE("filtering theta^T phi_R equals theta^T D_L phi_R") {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const auto spec = DisturbanceSpec::frequencies_only({0.2, 0.9, 2.1}, 1.0);
    for (int t = 0; t < 10; ++t) {
        std::vector<double> c(1 + static_cast<std::size_t>(t % 6));
        for (double& x : c) x = u(gen);
        Eigen::VectorXd theta(6);
        for (Eigen::Index i = 0; i < 6; ++i) theta[i] = u(gen);
        const auto D = lti::build_transform(lti::Polynomial(c), spec.omegas(), 1.0);

        // direct convolution of the sinusoid sum
        std::vector<double> s;
        for (std::int64_t k = 0; k < 200; ++k) s.push_back(theta.dot(phi_R(spec, k)));
        for (std::int64_t k = 50; k < 200; ++k) {
            double y = 0.0;
            for (std::size_t i = 0; i < c.size(); ++i) y += c[i] * s[static_cast<std::size_t>(k) - i];
            const auto phi = phi_R(spec, k);
            Eigen::VectorXd out(6);
            D.apply({phi.data(), 6}, {out.data(), 6});
            CHECK(theta.dot(out) == doctest::Approx(y).epsilon(1e-12));
        }
    }
}
