#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "dafc/error.hpp"
#include "dafc/lti.hpp"
#include "dafc/regressor.hpp"
#include "dafc/synthesis.hpp"

using namespace dafc;

namespace {

Eigen::MatrixXd dense(const lti::BlockDiagTransform& D) {
    const auto n = static_cast<Eigen::Index>(D.size());
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c) M(2 * i + r, 2 * i + c) = D.block(static_cast<std::size_t>(i))(r, c);
    return M;
}

} // namespace

TEST_CASE("gain validation") {
    SynthesisConfig table1;
    table1.alpha = 4e-5;
    table1.beta = 1.0 - 2e-7;
    CHECK(table1.violations().empty());

    SynthesisConfig bad;
    bad.alpha = 0.5;
    bad.beta = 0.4;
    const auto v = bad.violations();
    REQUIRE_FALSE(v.empty());
    CHECK(v.front().find("0 < alpha << beta < 1") != std::string::npos);
    CHECK_THROWS_AS(bad.validate(), SpecValidationError);

    SynthesisConfig integrator;
    integrator.beta = 1.0;
    CHECK_FALSE(integrator.violations().empty());
}

TEST_CASE("residue factor for the reference gains") {
    const auto r = ResidueTarget::from_gains(4e-5, 1.0 - 2e-7);
    CHECK(r.factor == doctest::Approx(2e-7 / (2e-7 + 4e-5)).epsilon(1e-8));
    CHECK(r.factor == doctest::Approx(4.975124e-3).epsilon(1e-5));
    CHECK(20.0 * std::log10(r.factor) == doctest::Approx(-46.06).epsilon(1e-3));
}

TEST_CASE("rebuild_DB_hat") {
    const std::vector<double> w{0.3, 1.1, 2.0};
    const auto delay = rebuild_DB_hat(Eigen::VectorXd::Constant(1, 1.0), w, 1.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
        CHECK(delay.block(i).magnitude() == doctest::Approx(1.0));
        CHECK(delay.block(i).phase() == doctest::Approx(-w[i]));
    }
    const auto neg = rebuild_DB_hat(Eigen::VectorXd::Constant(1, -0.4), w, 1.0);
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(neg.block(i).magnitude() == doctest::Approx(0.4));

    const Eigen::Vector2d b(0.7, -0.2);
    const auto one = rebuild_DB_hat(b, w, 1.0);
    const auto two = rebuild_DB_hat(2.0 * b, w, 1.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
        const std::complex<double> want = 0.7 * std::exp(std::complex<double>(0, -w[i])) - 0.2 * std::exp(std::complex<double>(0, -2 * w[i]));
        CHECK(std::abs(one.block(i).value() - want) < 1e-14);
        CHECK(std::abs(two.block(i).value() - 2.0 * want) < 1e-14);
    }
    CHECK_THROWS_AS(rebuild_DB_hat(Eigen::VectorXd::Constant(1, 0.01), w, 1.0, 0.1), SingularityError);
}

TEST_CASE("block inversion") {
    const auto inv = invert_block(lti::RotationBlock::from_polar(2.0, 0.3));
    CHECK(inv.magnitude() == doctest::Approx(0.5));
    CHECK(inv.phase() == doctest::Approx(-0.3));
    CHECK(std::abs(invert_block(lti::RotationBlock::identity()).value() - 1.0) < 1e-15);

    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> u(0.05, 5.0), ph(-3.1, 3.1);
    for (int t = 0; t < 100; ++t) {
        const auto b = lti::RotationBlock::from_polar(u(gen), ph(gen));
        const auto p = b * invert_block(b);
        CHECK(std::abs(p.value() - 1.0) < 1e-12);
    }
    CHECK_THROWS_AS(invert_block(lti::RotationBlock::from_polar(0.01, 0.0), 0.05), SingularityError);
}

TEST_CASE("synthesis step against a dense matrix evaluation") {
    std::mt19937_64 gen(6);
    std::normal_distribution<double> nd;
    auto ctrl = ControllerState::initial(3, 1e-3, 0.99);
    ctrl.DB_hat = rebuild_DB_hat(Eigen::Vector3d(0.5, -0.3, 0.2), std::vector<double>{0.2, 0.9, 1.7}, 1.0);
    const Eigen::MatrixXd M = dense(ctrl.DB_hat);
    Eigen::VectorXd want = Eigen::VectorXd::Zero(6);
    for (int t = 0; t < 50; ++t) {
        Eigen::VectorXd thM(6);
        for (Eigen::Index i = 0; i < 6; ++i) thM[i] = nd(gen);
        want = 0.99 * want - 1e-3 * M.inverse().transpose() * thM;
        synthesis_step(ctrl, thM);
        CHECK((ctrl.theta_D - want).norm() <= 1e-12 * (1.0 + want.norm()));
    }

    const Eigen::VectorXd before = ctrl.theta_D;
    synthesis_step(ctrl, Eigen::VectorXd::Zero(6));
    CHECK((ctrl.theta_D - 0.99 * before).norm() < 1e-15);

    Eigen::VectorXd bad = Eigen::VectorXd::Zero(6);
    bad[2] = std::nan("");
    const Eigen::VectorXd kept = ctrl.theta_D;
    CHECK_THROWS_AS(synthesis_step(ctrl, bad), NumericFault);
    CHECK(ctrl.theta_D == kept);
}

TEST_CASE("frozen inputs converge to the closed-form fixed point") {
    const double alpha = 1e-4, beta = 0.999;
    auto ctrl = ControllerState::initial(2, alpha, beta);
    ctrl.DB_hat = rebuild_DB_hat(Eigen::Vector2d(0.8, 0.3), std::vector<double>{0.4, 1.2}, 1.0);
    const Eigen::Vector4d thM(0.3, -0.7, 1.1, 0.2);
    const Eigen::MatrixXd M = dense(ctrl.DB_hat);
    const Eigen::VectorXd star = -alpha / (1.0 - beta) * M.inverse().transpose() * thM;
    CHECK((synthesis_fixed_point(ctrl, thM) - star).norm() < 1e-12);
    CHECK((beta * star - alpha * M.inverse().transpose() * thM - star).norm() < 1e-9);

    const int iters = static_cast<int>(10.0 / (1.0 - beta));
    for (int k = 0; k < iters; ++k) synthesis_step(ctrl, thM);
    // geometric convergence: remaining fraction beta^iters ~ e^-10
    CHECK((ctrl.theta_D - star).norm() <= 1e-4 * star.norm() + std::pow(beta, iters) * star.norm());
}

TEST_CASE("leakage keeps theta_D bounded") {
    const double alpha = 1e-3, beta = 0.995;
    auto ctrl = ControllerState::initial(1, alpha, beta);
    ctrl.DB_hat = rebuild_DB_hat(Eigen::VectorXd::Constant(1, 0.5), std::vector<double>{0.6}, 1.0);
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    // |D^-T theta_M| <= 2 |theta_M| <= 2 sqrt(2)
    const double bound = alpha * 2.0 * std::sqrt(2.0) / (1.0 - beta);
    for (int k = 0; k < 20000; ++k) {
        synthesis_step(ctrl, Eigen::Vector2d(u(gen), u(gen)));
        CHECK(ctrl.theta_D.norm() <= bound * (1.0 + 1e-12));
    }
}

TEST_CASE("control output") {
    const auto spec = DisturbanceSpec::frequencies_only({0.3, 1.4}, 1.0);
    auto ctrl = ControllerState::initial(2, 1e-4, 0.999);
    CHECK(control_output(ctrl, phi_R(spec, 7)) == 0.0);
    ctrl.theta_D << 1.0, 0.0, 0.0, 0.0;
    CHECK(control_output(ctrl, phi_R(spec, 7)) == doctest::Approx(std::sin(0.3 * 7)));
    ctrl.theta_D << 0.4, -1.2, 0.7, 2.0;
    for (std::int64_t k = 0; k < 500; ++k)
        CHECK(std::abs(control_output(ctrl, phi_R(spec, k))) <= ctrl.theta_D.norm() * std::sqrt(2.0) + 1e-12);
    CHECK_THROWS_AS(control_output(ctrl, Eigen::VectorXd::Zero(3)), DimensionError);
}
