#pragma once

// Joint recursive estimation of the plant polynomials and the residual
// disturbance parameters:
//
//   y_hat(k)  = theta_A^T phi_e(k) + theta_B^T phi_u(k) + theta_M^T phi_R(k)
//   eps0(k)   = e(k) - y_hat(k)
//   [theta_A; theta_B] += gamma1 F^-1 [phi_e; phi_u] eps0
//   theta_M            += gamma2 f^-1 phi_R eps0
//   F <- F + gamma1 (psi psi^T - F),  f <- f + gamma2 (|phi_R|^2 - f)
//
// followed by projection of theta_A into the Schur-stable set and theta_B
// into the magnitude band at every compensation frequency.
//
// By default the recursion itself runs on the unprojected estimates and the
// projected pair is what the rest of the loop sees. Writing the projection
// back into the recursion (project_recursion = true) breaks the least-squares
// identity R_k theta_k = sum psi e and lets repeated projections walk the
// estimate away from the data.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dafc/lti.hpp"
#include "dafc/regressor.hpp"

namespace dafc {

/// gamma(k) = max(c / (k + offset)^p, floor). A positive offset keeps
/// gamma(1) below one so the initial F is not discarded on the first step.
struct GainSchedule {
    double c = 1.0;
    double p = 1.0;
    double floor = 0.0;
    double offset = 0.0;

    double operator()(std::int64_t k) const;
    /// Throws SpecValidationError unless c > 0, p in (0, 1], floor >= 0,
    /// offset >= 0 and gamma(1) <= 1.
    void validate() const;
};

struct ProjectionConfig {
    double b_floor = 0.01;
    /// Upper band |B_hat| <= b_ceil_ratio * nominal_magnitude[h]; disabled
    /// when either is missing.
    std::optional<double> b_ceil_ratio;
    std::vector<double> nominal_magnitude;
    double schur_margin = 1e-9;
    double shrink_rho = 0.9;
    /// Relative clearance added when a bound is restored.
    double eta = 0.1;

    std::optional<double> b_ceil(std::size_t h) const;
    void validate(std::size_t harmonics) const;
};

/// Which F (and f) scales the parameter step: the one updated with the
/// current regressor (as in recursive least squares), or the previous one.
enum class GainTiming { Updated, Lagged };

struct EstimatorConfig {
    std::size_t n_a = 1;
    GainSchedule gamma1{1.0, 1.0, 0.0};
    GainSchedule gamma2{1.0, 0.75, 0.0};
    ProjectionConfig projection;
    double f0 = 1.0;
    double regularization = 1e-8;
    GainTiming timing = GainTiming::Updated;
    bool project_recursion = false;
};

struct EstimatorState {
    Eigen::VectorXd theta_A;  ///< -a_1 .. -a_nA
    Eigen::VectorXd theta_B;  ///<  b_1 .. b_nA
    Eigen::VectorXd theta_M;
    /// Unprojected recursion estimates; empty means "same as theta_A/theta_B".
    Eigen::VectorXd raw_A;
    Eigen::VectorXd raw_B;
    Eigen::MatrixXd F;
    double f = 1.0;
    std::int64_t k = 0;

    /// Zero estimates, F = f0 I, f = n.
    static EstimatorState initial(std::size_t n_a, std::size_t harmonics, double f0 = 1.0);

    const Eigen::VectorXd& recursion_A() const { return raw_A.size() ? raw_A : theta_A; }
    const Eigen::VectorXd& recursion_B() const { return raw_B.size() ? raw_B : theta_B; }

    lti::Polynomial a_poly() const;  ///< 1 - theta_A[0] q^-1 - ...
    lti::Polynomial b_poly() const;  ///< theta_B[0] q^-1 + ...
};

struct ProjectionResult {
    Eigen::VectorXd value;
    bool fired = false;
};

struct PaaResult {
    double epsilon0 = 0.0;
    bool projected_A = false;
    bool projected_B = false;
};

/// A-priori prediction with the current (k-1) recursion estimates. Throws
/// DimensionError.
double predict(const EstimatorState& est, const RegressorBank& bank, const Eigen::VectorXd& phi_R);

/// F <- F + gamma1 (psi psi^T - F) with psi = [phi_e; phi_u], then
/// f <- f + gamma2 (phi_R^T phi_R - f). Adds regularization * I whenever the
/// smallest Cholesky pivot of F falls below it.
void update_gains(Eigen::MatrixXd& F, double& f, const Eigen::VectorXd& phi_e, const Eigen::VectorXd& phi_u,
                  const Eigen::VectorXd& phi_R, double gamma1, double gamma2, double regularization = 1e-8);

/// Shrinks a_i <- rho^i a_i (roots pushed outward) until Schur-stable.
ProjectionResult project_A(const Eigen::VectorXd& theta_A, const ProjectionConfig& cfg);

/// Rescales theta_B so that every |B_hat(exp(-j w_h T))| lies in
/// [b_floor, b_ceil(h)]; an all-zero theta_B gets the canonical kick
/// b_1 = b_floor (1 + eta). The floor wins when both bounds cannot hold.
ProjectionResult project_B(const Eigen::VectorXd& theta_B, std::span<const double> omegas, double T,
                           const ProjectionConfig& cfg);

/// Re(B / B_hat) > 0 at each compensation frequency. Diagnostic only.
std::vector<bool> check_assumption_H(const Eigen::VectorXd& theta_B_hat, const lti::Polynomial& true_B,
                                     std::span<const double> omegas, double T);

/// One full adaptation step on `est`. The pre-step state is restored if any
/// quantity turns non-finite, and NumericFault is thrown.
PaaResult paa_step(EstimatorState& est, const RegressorBank& bank, const Eigen::VectorXd& phi_R, double e,
                   double gamma1, double gamma2, const EstimatorConfig& cfg, std::span<const double> omegas, double T);

/// Owns an estimator state together with its configuration and schedules.
class ParameterAdapter {
public:
    ParameterAdapter(EstimatorConfig cfg, std::vector<double> omegas, double T);

    /// Uses gamma1(k+1), gamma2(k+1) from the configured schedules.
    PaaResult step(const RegressorBank& bank, const Eigen::VectorXd& phi_R, double e);

    const EstimatorState& state() const noexcept { return state_; }
    EstimatorState& mutable_state() noexcept { return state_; }
    const EstimatorConfig& config() const noexcept { return cfg_; }
    std::span<const double> omegas() const noexcept { return omegas_; }
    double sample_period() const noexcept { return T_; }

private:
    EstimatorConfig cfg_;
    std::vector<double> omegas_;
    double T_;
    EstimatorState state_;
};

} // namespace dafc
