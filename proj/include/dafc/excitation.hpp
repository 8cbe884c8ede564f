#pragma once

// Exogenous excitation u(k) injected at the plant input for identification.
//
// Shaped mode places sinusoid pairs symmetrically around each compensation
// frequency; for every shift d in `delta_u`
//
//   u(k) += alpha_u(k)/2 * sum_i [sin((w_i + d) kT) + sin((w_i - d) kT)]
//         = alpha_u(k) cos(d kT) * sum_i sin(w_i kT),
//
// and the right-hand form reuses the sine slots of phi_R(k).

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dafc/regressor.hpp"

namespace dafc {

enum class ExcitationMode { Off, Shaped, Prbs };

/// Constant gain, or an exponential decay toward `floor` with time constant
/// `decay_steps` samples when decay_steps > 0.
struct AmplitudeSchedule {
    double initial = 0.0;
    double floor = 0.0;
    double decay_steps = 0.0;

    double operator()(std::int64_t k) const;
};

struct ExcitationSpec {
    ExcitationMode mode = ExcitationMode::Shaped;
    AmplitudeSchedule alpha_u;
    std::vector<double> delta_u;  ///< rad/s, one sideband pair per entry and harmonic
    std::uint64_t prbs_seed = 1;

    /// Default single shift: 2% of the smallest compensation frequency.
    static std::vector<double> default_delta(const DisturbanceSpec& dist) { return {0.02 * dist.omegas().front()}; }

    /// Every violated constraint (shift range, sideband collisions, Nyquist),
    /// empty when valid.
    std::vector<std::string> violations(const DisturbanceSpec& dist) const;

    /// Guaranteed persistency-of-excitation order: 2n per shift in shaped
    /// mode, unbounded (returned as SIZE_MAX) for PRBS, 0 when off.
    std::size_t pe_order_bound(const DisturbanceSpec& dist) const;
};

double excitation_direct(const ExcitationSpec& spec, const DisturbanceSpec& dist, std::int64_t k);

/// Product form; phi_R must be the regressor at the same k.
double excitation_fast(const ExcitationSpec& spec, const Eigen::VectorXd& phi_R, std::int64_t k, double T);

/// Galois shift register over x^31 + x^3 + 1 (maximal length, period
/// 2^31 - 1). Output k is +amplitude when the top state bit is set after k
/// shifts, -amplitude otherwise. Seeds map onto the non-zero states.
class Prbs {
public:
    Prbs(std::uint64_t seed, double amplitude);

    double next();

    /// The value next() returns after k earlier calls, in O(log k) by
    /// polynomial exponentiation over GF(2).
    static double at(std::uint64_t seed, double amplitude, std::int64_t k);

private:
    static std::uint32_t seed_state(std::uint64_t seed);

    std::uint32_t state_;
    double amplitude_;
};

double prbs(std::uint64_t seed, double amplitude, std::int64_t k);

/// Streaming excitation source for a run: shaped mode goes through the
/// product form, PRBS through the shift register.
class ExcitationSource {
public:
    ExcitationSource(ExcitationSpec spec, double T);

    double next(std::int64_t k, const Eigen::VectorXd& phi_R);
    const ExcitationSpec& spec() const noexcept { return spec_; }

private:
    ExcitationSpec spec_;
    double T_;
    Prbs prbs_;
};

struct PeResult {
    bool persistent = false;
    double min_eigenvalue = 0.0;
};

/// Persistency of excitation of order m: smallest eigenvalue of the
/// time-averaged Gram matrix of m-length delay vectors, compared with
/// tol * (mean signal power). Throws InsufficientDataError when the window is
/// shorter than 10 m.
PeResult pe_order(std::span<const double> window, std::size_t m, double tol = 1e-9);

} // namespace dafc
