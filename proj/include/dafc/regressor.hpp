#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace dafc {

/// Known compensation frequencies plus the per-harmonic amplitude and phase
/// used as simulation ground truth for r(k) = sum_i amp_i sin(omega_i k T + phase_i).
class DisturbanceSpec {
public:
    /// Throws SpecValidationError unless omegas are strictly increasing inside
    /// (0, pi/T), amplitudes are non-negative and all lists have equal length.
    DisturbanceSpec(std::vector<double> omegas, std::vector<double> amps, std::vector<double> phases, double T);

    /// Frequencies only; amplitudes and phases zero.
    static DisturbanceSpec frequencies_only(std::vector<double> omegas, double T);

    std::size_t size() const noexcept { return omegas_.size(); }
    double sample_period() const noexcept { return T_; }
    std::span<const double> omegas() const noexcept { return omegas_; }
    std::span<const double> amps() const noexcept { return amps_; }
    std::span<const double> phases() const noexcept { return phases_; }

    /// omega_i T / 2pi, the per-sample phase advance in cycles.
    double cycles(std::size_t i) const { return cycles_.at(i); }

    /// Smallest N with every omega_i N T / 2pi an integer, when one exists
    /// below 2^31 (commensurate harmonics).
    std::optional<std::int64_t> period() const noexcept { return period_; }

    /// Packed parameters [amp_1 cos phase_1, amp_1 sin phase_1, ...] so that
    /// theta^T phi_R(k) reproduces r(k).
    Eigen::VectorXd theta() const;

private:
    std::vector<double> omegas_;
    std::vector<double> amps_;
    std::vector<double> phases_;
    std::vector<double> cycles_;
    double T_;
    std::optional<std::int64_t> period_;
};

/// Smallest N >= 1 making every cycles[i] * N integral within tol, searched
/// via continued fractions; nullopt if none exists below max_period.
std::optional<std::int64_t> common_period(std::span<const double> cycles, std::int64_t max_period = (std::int64_t{1} << 31),
                                          double tol = 1e-9);

/// [sin(w_1 kT), cos(w_1 kT), ..., sin(w_n kT), cos(w_n kT)]. Phases are
/// computed from the exact integer k; past 2^52 samples k is first reduced
/// modulo the period of commensurate specs.
void phi_R(const DisturbanceSpec& spec, std::int64_t k, std::span<double> out);
Eigen::VectorXd phi_R(const DisturbanceSpec& spec, std::int64_t k);

/// theta^T phi_R(k). Throws DimensionError if theta is not 2n long.
double disturbance_value(const Eigen::VectorXd& theta, const DisturbanceSpec& spec, std::int64_t k);

/// Rolling measured-signal histories, most recent first: entry j of each
/// history is the signal at time k-1-j.
class RegressorBank {
public:
    explicit RegressorBank(std::size_t n_a);

    /// Throws NumericFault on non-finite input.
    void push(double e, double u, double u_a);

    const Eigen::VectorXd& phi_e() const noexcept { return phi_e_; }
    const Eigen::VectorXd& phi_u() const noexcept { return phi_u_; }
    const Eigen::VectorXd& phi_uA() const noexcept { return phi_ua_; }
    std::int64_t k() const noexcept { return k_; }
    std::size_t order() const noexcept { return static_cast<std::size_t>(phi_e_.size()); }

private:
    Eigen::VectorXd phi_e_;
    Eigen::VectorXd phi_u_;
    Eigen::VectorXd phi_ua_;
    std::int64_t k_ = 0;
};

} // namespace dafc
