#include "dafc/synthesis.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "dafc/error.hpp"
#include "dafc/kernels.hpp"

namespace dafc {

std::vector<std::string> SynthesisConfig::violations() const {
    std::vector<std::string> out;
    auto fmt = [](double x) {
        std::ostringstream os;
        os.precision(6);
        os << x;
        return os.str();
    };
    const std::string pair = " (alpha=" + fmt(alpha) + ", beta=" + fmt(beta) + ")";
    if (!(alpha > 0.0)) out.push_back("synthesis.alpha must be > 0: gains must satisfy 0 < alpha << beta < 1" + pair);
    if (!(beta > 0.0 && beta < 1.0))
        out.push_back("synthesis.beta must lie in (0, 1): gains must satisfy 0 < alpha << beta < 1; beta = 1 leaves "
                      "an open integrator pole" + pair);
    if (alpha > 0.0 && beta > 0.0 && !(alpha <= alpha_beta_max * beta))
        out.push_back("synthesis.alpha must be much smaller than beta (alpha <= " + fmt(alpha_beta_max) +
                      " * beta): gains must satisfy 0 < alpha << beta < 1" + pair);
    if (alpha > 0.0 && beta < 1.0 && !(alpha <= (1.0 - beta) * ratio_max))
        out.push_back("synthesis: alpha / (1 - beta) = " + fmt(alpha / (1.0 - beta)) + " exceeds ratio_max " +
                      fmt(ratio_max) + pair);
    if (db_refresh_stride == 0) out.push_back("synthesis.db_refresh_stride must be >= 1");
    return out;
}

void SynthesisConfig::validate() const {
    const auto v = violations();
    if (v.empty()) return;
    std::string msg;
    for (const auto& s : v) msg += (msg.empty() ? "" : "; ") + s;
    throw SpecValidationError(msg);
}

ControllerState ControllerState::initial(std::size_t harmonics, double alpha, double beta) {
    ControllerState c;
    c.theta_D = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 * harmonics));
    c.alpha = alpha;
    c.beta = beta;
    c.DB_hat = lti::BlockDiagTransform(std::vector<lti::RotationBlock>(harmonics, lti::RotationBlock::identity()));
    return c;
}

lti::BlockDiagTransform rebuild_DB_hat(const Eigen::VectorXd& theta_B_hat, std::span<const double> omegas, double T,
                                       double b_floor) {
    std::vector<double> c(static_cast<std::size_t>(theta_B_hat.size()) + 1, 0.0);
    for (Eigen::Index i = 0; i < theta_B_hat.size(); ++i) c[static_cast<std::size_t>(i) + 1] = theta_B_hat[i];
    auto db = lti::build_transform(lti::Polynomial(std::move(c)), omegas, T);
    for (std::size_t i = 0; i < db.size(); ++i)
        if (!(db.block(i).magnitude() >= b_floor))
            throw SingularityError("D_B_hat block " + std::to_string(i + 1) + " magnitude " +
                                   std::to_string(db.block(i).magnitude()) + " below b_floor");
    return db;
}

lti::RotationBlock invert_block(const lti::RotationBlock& rb, double min_magnitude) {
    const double m = rb.magnitude();
    if (!(m > min_magnitude) || m == 0.0) throw SingularityError("rotation block is singular (magnitude " + std::to_string(m) + ")");
    return lti::RotationBlock(1.0 / rb.value());
}

void synthesis_step(ControllerState& ctrl, const Eigen::VectorXd& theta_M_hat, double min_magnitude) {
    if (theta_M_hat.size() != ctrl.theta_D.size()) throw DimensionError("synthesis_step: theta_M length mismatch");
    const Eigen::VectorXd previous = ctrl.theta_D;
    for (std::size_t i = 0; i < ctrl.DB_hat.size(); ++i) {
        // row vector [m0 m1] times the inverse block == inverse block transposed times [m0; m1]
        const auto inv = invert_block(ctrl.DB_hat.block(i), min_magnitude);
        const double c = inv.value().real();
        const double s = inv.value().imag();
        const auto j = static_cast<Eigen::Index>(2 * i);
        const double m0 = theta_M_hat[j];
        const double m1 = theta_M_hat[j + 1];
        ctrl.theta_D[j] = ctrl.beta * ctrl.theta_D[j] - ctrl.alpha * (c * m0 - s * m1);
        ctrl.theta_D[j + 1] = ctrl.beta * ctrl.theta_D[j + 1] - ctrl.alpha * (s * m0 + c * m1);
    }
    if (!ctrl.theta_D.allFinite()) {
        ctrl.theta_D = previous;
        throw NumericFault("synthesis_step produced a non-finite theta_D");
    }
}

Eigen::VectorXd synthesis_fixed_point(const ControllerState& ctrl, const Eigen::VectorXd& theta_M_hat) {
    Eigen::VectorXd out(theta_M_hat.size());
    const double gain = -ctrl.alpha / (1.0 - ctrl.beta);
    for (std::size_t i = 0; i < ctrl.DB_hat.size(); ++i) {
        const auto inv = invert_block(ctrl.DB_hat.block(i));
        const double c = inv.value().real();
        const double s = inv.value().imag();
        const auto j = static_cast<Eigen::Index>(2 * i);
        out[j] = gain * (c * theta_M_hat[j] - s * theta_M_hat[j + 1]);
        out[j + 1] = gain * (s * theta_M_hat[j] + c * theta_M_hat[j + 1]);
    }
    return out;
}

double control_output(const ControllerState& ctrl, const Eigen::VectorXd& phi_R) {
    if (phi_R.size() != ctrl.theta_D.size()) throw DimensionError("control_output: phi_R length mismatch");
    return kernels::dot({ctrl.theta_D.data(), static_cast<std::size_t>(ctrl.theta_D.size())},
                        {phi_R.data(), static_cast<std::size_t>(phi_R.size())});
}

} // namespace dafc
