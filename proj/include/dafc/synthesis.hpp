#pragma once

// Feedforward synthesis by leaky gradient descent on the Ridge cost:
//
//   theta_D^T <- beta theta_D^T - alpha theta_M_hat^T D_B_hat^-1
//   u_A(k)     = theta_D^T phi_R(k)
//
// With theta_M_hat and D_B_hat exact, the residual parameters settle at
// (1 - beta) / (1 - beta + alpha) times the uncompensated ones.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dafc/lti.hpp"

namespace dafc {

struct SynthesisConfig {
    double alpha = 4e-5;
    double beta = 1.0 - 2e-7;
    /// D_B_hat is rebuilt every `db_refresh_stride` samples.
    std::size_t db_refresh_stride = 1;
    /// Upper bound on alpha / (1 - beta).
    double ratio_max = 1000.0;
    /// Upper bound on alpha / beta ("alpha much smaller than beta").
    double alpha_beta_max = 1e-2;

    /// Every violated gain constraint, empty when valid.
    std::vector<std::string> violations() const;
    /// Throws SpecValidationError listing the violations.
    void validate() const;
};

struct ResidueTarget {
    double factor = 1.0;

    static ResidueTarget from_gains(double alpha, double beta) { return {(1.0 - beta) / (1.0 - beta + alpha)}; }
};

struct ControllerState {
    Eigen::VectorXd theta_D;
    double alpha = 0.0;
    double beta = 0.0;
    lti::BlockDiagTransform DB_hat;

    /// theta_D = 0, D_B_hat = identity blocks.
    static ControllerState initial(std::size_t harmonics, double alpha, double beta);
};

/// Blocks from B_hat(exp(-j w_i T)), B_hat = theta_B_hat[0] q^-1 + ...
/// Throws SingularityError when a block magnitude is below b_floor (the
/// projection upstream should have prevented it).
lti::BlockDiagTransform rebuild_DB_hat(const Eigen::VectorXd& theta_B_hat, std::span<const double> omegas, double T,
                                       double b_floor = 0.0);

/// Magnitude 1/m, phase negated. Throws SingularityError if m <= min_magnitude.
lti::RotationBlock invert_block(const lti::RotationBlock& rb, double min_magnitude = 0.0);

/// theta_D <- beta theta_D - alpha D_B_hat^-T theta_M_hat, blockwise.
/// Restores the previous theta_D and throws NumericFault on a non-finite result.
void synthesis_step(ControllerState& ctrl, const Eigen::VectorXd& theta_M_hat, double min_magnitude = 0.0);

/// Fixed point of synthesis_step for frozen theta_M_hat and D_B_hat:
/// -alpha / (1 - beta) D_B_hat^-T theta_M_hat.
Eigen::VectorXd synthesis_fixed_point(const ControllerState& ctrl, const Eigen::VectorXd& theta_M_hat);

/// theta_D^T phi_R(k). Throws DimensionError.
double control_output(const ControllerState& ctrl, const Eigen::VectorXd& phi_R);

} // namespace dafc
