#pragma once

// Closed-loop desk experiment. Per sample k:
//   phi_R(k) -> excitation u(k) -> u_A(k) = theta_D^T phi_R(k)
//   -> e(k) = B/A [u + u_A] + 1/A [w] + r_bar(k)
//   -> adaptation step -> D_B_hat refresh -> synthesis step -> regressor push

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dafc/adaptation.hpp"
#include "dafc/config.hpp"
#include "dafc/lti.hpp"
#include "dafc/regressor.hpp"
#include "dafc/synthesis.hpp"

namespace dafc {

/// 64-bit Mersenne Twister with portable uniform and Gaussian mappings
/// (53-bit uniforms, Box-Muller pairs), so streams match across standard
/// libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform();                  ///< [0, 1)
    double uniform(double lo, double hi);
    double gaussian();                 ///< N(0, 1)

private:
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

struct PlantTruth {
    lti::TransferFunction tf;
    Eigen::VectorXd theta_R_bar;  ///< parameters of r_bar in the phi_R basis
    double noise_sigma = 0.0;
    std::uint64_t seed = 1;
};

/// True plant difference equation A e_y = B (u + u_A) + w, plus r_bar at
/// the output. Memory starts at zero.
class Plant {
public:
    Plant(PlantTruth truth, DisturbanceSpec dist);

    /// e(k); u_k and uA_k only affect later samples (one-sample delay).
    /// Throws NumericFault on a non-finite input or state.
    double step(double u_k, double uA_k, std::int64_t k);

    const PlantTruth& truth() const noexcept { return truth_; }

private:
    PlantTruth truth_;
    DisturbanceSpec dist_;
    Rng rng_;
    std::vector<double> y_hist_;  // y(k-1), y(k-2), ...
    std::vector<double> v_hist_;  // v(k-1), v(k-2), ...
};

struct HarmonicAmplitude {
    double omega = 0.0;
    double amplitude = 0.0;
};

/// (2/N) |sum_k x(k) exp(-j omega (k0 + k) T)| over the window. Throws
/// WindowingError unless the window spans an integer number of periods.
HarmonicAmplitude harmonic_amplitude(std::span<const double> window, double omega, double T, std::int64_t k0 = 0);

/// theta_R = D_A^T theta_R_bar: the disturbance seen through A.
Eigen::VectorXd ground_truth_theta_R(const PlantTruth& truth, std::span<const double> omegas, double T);

/// Random Schur-stable plant of the given order: reciprocal-A roots with
/// modulus in [pole_min, pole_max] (conjugate pairs plus one real root for
/// odd orders) and B redrawn until |B| >= b_min at every frequency.
lti::TransferFunction random_stable_plant(const RandomPlantSpec& spec, std::span<const double> omegas, double T);

/// Largest root modulus of z^n + a_1 z^(n-1) + ... + a_n.
double spectral_radius(const lti::Polynomial& a);

struct TraceRecord {
    std::int64_t k = 0;
    double e = 0.0;
    double u = 0.0;
    double u_A = 0.0;
    double epsilon0 = 0.0;
    double theta_M_norm = 0.0;
    bool projected_A = false;
    bool projected_B = false;
    Eigen::VectorXd theta_A;
    Eigen::VectorXd theta_B;
    Eigen::VectorXd theta_M;
    Eigen::VectorXd theta_D;
};

struct HarmonicReport {
    double omega = 0.0;
    double freq_hz = 0.0;
    double before = 0.0;          ///< adaptation-off baseline
    std::optional<double> after;  ///< last window of the adaptive phase
    std::optional<double> replay; ///< last window of the frozen replay phase
};

struct RunSummary {
    std::string name;
    std::int64_t steps = 0;
    std::optional<std::int64_t> freeze_at;
    std::optional<std::int64_t> window;
    std::optional<std::int64_t> replay_window;
    double runtime_s = 0.0;
    std::string backend;

    std::vector<HarmonicReport> harmonics;

    double plant_relative_error = 0.0;  ///< |[th_A; th_B] - truth| / |truth|
    double theta_A_error = 0.0;
    double theta_B_error = 0.0;
    double theta_M_norm = 0.0;
    double theta_R_norm = 0.0;
    double residue_factor = 1.0;  ///< (1 - beta) / (1 - beta + alpha)
    std::int64_t projections_A = 0;
    std::int64_t projections_B = 0;
    std::vector<bool> assumption_H;

    EstimatorState estimator;
    Eigen::VectorXd theta_D;
    Eigen::VectorXd theta_R;
    lti::TransferFunction truth;
};

struct SimTrace {
    std::vector<TraceRecord> records;  ///< every `decimate`-th step, unless streamed
    std::vector<double> error;         ///< undecimated e(k)
    RunSummary summary;
};

struct RunHooks {
    /// Receives each decimated record instead of storing it in SimTrace.
    std::function<void(const TraceRecord&)> on_record;
    /// Skip the baseline run used for the "before" amplitudes.
    bool skip_baseline = false;
};

/// Analysis window: smallest span holding an integer number of periods of
/// every tone in the loop (harmonics and, in shaped mode, the sidebands).
std::optional<std::int64_t> analysis_window(const ExperimentConfig& cfg);

/// Runs the configured experiment. Numeric faults propagate as NumericFault
/// tagged with the failing step.
SimTrace run_experiment(const ExperimentConfig& cfg, const RunHooks& hooks = {});

/// Per-harmonic error amplitudes with adaptation off, measured over one
/// analysis window after the plant transient has died out.
std::vector<double> baseline_amplitudes(const ExperimentConfig& cfg, std::int64_t window);

struct StationaryCheck {
    double update_norm = 0.0;   ///< norm of the period-averaged update direction
    double theta_R_norm = 0.0;
    std::int64_t period = 0;
};

/// Places every estimate at the equilibrium (true plant, theta_M at the
/// residue target, theta_D at its fixed point), runs the noiseless loop with
/// adaptation frozen, and averages the update direction of the adaptation
/// and synthesis laws over one disturbance period.
StationaryCheck stationary_point_check(const ExperimentConfig& cfg, std::int64_t warmup = 0);

} // namespace dafc
