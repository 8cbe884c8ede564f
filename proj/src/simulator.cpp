#include "dafc/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "dafc/error.hpp"
#include "dafc/excitation.hpp"
#include "dafc/kernels.hpp"
#include "dafc/phase.hpp"

namespace dafc {

namespace {

Eigen::VectorXd true_theta_A(const lti::TransferFunction& tf) {
    Eigen::VectorXd th(static_cast<Eigen::Index>(tf.order()));
    for (std::size_t i = 0; i < tf.order(); ++i) th[static_cast<Eigen::Index>(i)] = -tf.a[i + 1];
    return th;
}

Eigen::VectorXd true_theta_B(const lti::TransferFunction& tf) {
    Eigen::VectorXd th(static_cast<Eigen::Index>(tf.order()));
    for (std::size_t i = 0; i < tf.order(); ++i) th[static_cast<Eigen::Index>(i)] = tf.b[i + 1];
    return th;
}

double relative(const Eigen::VectorXd& est, const Eigen::VectorXd& truth) {
    const double n = truth.norm();
    return n > 0.0 ? (est - truth).norm() / n : (est - truth).norm();
}

std::vector<double> tone_cycles(const ExperimentConfig& cfg) {
    const double T = cfg.disturbance.sample_period;
    std::vector<double> out;
    for (double w : cfg.disturbance.omegas()) {
        out.push_back(w * T / kTwoPi);
        if (cfg.excitation.mode == ExcitationMode::Shaped)
            for (double d : cfg.excitation.delta_u) {
                out.push_back((w + d) * T / kTwoPi);
                out.push_back((w - d) * T / kTwoPi);
            }
    }
    return out;
}

PlantTruth make_truth(const ExperimentConfig& cfg) {
    PlantTruth t;
    t.tf = cfg.plant.tf;
    t.theta_R_bar = cfg.disturbance.spec().theta();
    t.noise_sigma = cfg.plant.noise_sigma;
    t.seed = cfg.noise_seed();
    return t;
}

// Amplitudes of every harmonic over error[start, start + len).
std::vector<double> amplitudes(const std::vector<double>& error, std::int64_t start, std::int64_t len,
                               const DisturbanceSpec& dist) {
    std::vector<double> out;
    const std::span<const double> win(error.data() + start, static_cast<std::size_t>(len));
    for (double w : dist.omegas()) out.push_back(harmonic_amplitude(win, w, dist.sample_period(), start).amplitude);
    return out;
}

} // namespace

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::gaussian() {
    if (spare_) {
        const double v = *spare_;
        spare_.reset();
        return v;
    }
    double u1 = 0.0;
    do u1 = uniform(); while (u1 == 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(kTwoPi * u2);
    return r * std::cos(kTwoPi * u2);
}

Plant::Plant(PlantTruth truth, DisturbanceSpec dist)
    : truth_(std::move(truth)), dist_(std::move(dist)), rng_(truth_.seed), y_hist_(truth_.tf.order(), 0.0),
      v_hist_(truth_.tf.order(), 0.0) {
    if (truth_.theta_R_bar.size() != static_cast<Eigen::Index>(2 * dist_.size()))
        throw DimensionError("plant: theta_R_bar must have 2n entries");
    if (!(truth_.noise_sigma >= 0.0)) throw SpecValidationError("plant: noise_sigma must be >= 0");
}

double Plant::step(double u_k, double uA_k, std::int64_t k) {
    const double v = u_k + uA_k;
    if (!std::isfinite(v)) throw NumericFault("plant: non-finite input", k);
    const auto& a = truth_.tf.a;
    const auto& b = truth_.tf.b;
    const std::size_t n = truth_.tf.order();
    double y = truth_.noise_sigma > 0.0 ? truth_.noise_sigma * rng_.gaussian() : 0.0;
    for (std::size_t i = 0; i < n; ++i) y += b[i + 1] * v_hist_[i] - a[i + 1] * y_hist_[i];
    if (!std::isfinite(y)) throw NumericFault("plant: state diverged", k);
    if (n > 0) {
        std::copy_backward(y_hist_.begin(), y_hist_.end() - 1, y_hist_.end());
        std::copy_backward(v_hist_.begin(), v_hist_.end() - 1, v_hist_.end());
        y_hist_[0] = y;
        v_hist_[0] = v;
    }
    return y + disturbance_value(truth_.theta_R_bar, dist_, k);
}

HarmonicAmplitude harmonic_amplitude(std::span<const double> window, double omega, double T, std::int64_t k0) {
    if (window.empty()) throw WindowingError("harmonic_amplitude: empty window");
    const double cycles = omega * T / kTwoPi;
    const double n = static_cast<double>(window.size());
    const double periods = cycles * n;
    if (std::abs(periods - std::round(periods)) > 1e-9 * std::max(1.0, periods) || std::round(periods) < 1.0)
        throw WindowingError("harmonic_amplitude: window of " + std::to_string(window.size()) +
                             " samples does not span an integer number of periods (" + std::to_string(periods) + ")");
    const auto bin = kernels::bin_projection(window, cycles, k0);
    return {omega, 2.0 / n * std::abs(bin)};
}

Eigen::VectorXd ground_truth_theta_R(const PlantTruth& truth, std::span<const double> omegas, double T) {
    const auto DA = lti::build_transform(truth.tf.a, omegas, T);
    Eigen::VectorXd out(truth.theta_R_bar.size());
    DA.apply_transposed({truth.theta_R_bar.data(), static_cast<std::size_t>(truth.theta_R_bar.size())},
                        {out.data(), static_cast<std::size_t>(out.size())});
    return out;
}

lti::TransferFunction random_stable_plant(const RandomPlantSpec& spec, std::span<const double> omegas, double T) {
    if (spec.order == 0) throw SpecValidationError("random plant: order must be >= 1");
    if (!(spec.pole_min > 0.0 && spec.pole_min <= spec.pole_max && spec.pole_max < 1.0))
        throw SpecValidationError("random plant: pole moduli must satisfy 0 < pole_min <= pole_max < 1");
    if (!(spec.b_min_magnitude > 0.0)) throw SpecValidationError("random plant: b_min_magnitude must be positive");
    Rng rng(spec.seed);

    // monic z^n + a_1 z^(n-1) + ... built root by root
    std::vector<std::complex<double>> poly{1.0};
    auto multiply = [&](std::complex<double> root) {
        poly.push_back(0.0);
        for (std::size_t i = poly.size() - 1; i > 0; --i) poly[i] -= root * poly[i - 1];
    };
    std::size_t placed = 0;
    while (placed + 2 <= spec.order) {
        const auto root = std::polar(rng.uniform(spec.pole_min, spec.pole_max), rng.uniform(0.0, std::numbers::pi));
        multiply(root);
        multiply(std::conj(root));
        placed += 2;
    }
    if (placed < spec.order) {
        const double r = rng.uniform(spec.pole_min, spec.pole_max);
        multiply(rng.uniform() < 0.5 ? -r : r);
    }
    std::vector<double> a(poly.size());
    for (std::size_t i = 0; i < poly.size(); ++i) a[i] = poly[i].real();
    a[0] = 1.0;

    for (int attempt = 0; attempt < 10000; ++attempt) {
        std::vector<double> b(spec.order + 1, 0.0);
        for (std::size_t i = 1; i <= spec.order; ++i) b[i] = rng.uniform(-1.0, 1.0);
        const lti::Polynomial bp(b);
        bool ok = true;
        for (double w : omegas) ok = ok && std::abs(bp.evaluate(w * T)) >= spec.b_min_magnitude;
        if (ok) return lti::TransferFunction::make(std::move(a), std::move(b));
    }
    throw SpecValidationError("random plant: could not draw B with the requested magnitude floor");
}

double spectral_radius(const lti::Polynomial& a) {
    const auto n = static_cast<Eigen::Index>(a.degree());
    if (n == 0) return 0.0;
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) C(0, j) = -a[static_cast<std::size_t>(j) + 1] / a[0];
    for (Eigen::Index i = 1; i < n; ++i) C(i, i - 1) = 1.0;
    return C.eigenvalues().cwiseAbs().maxCoeff();
}

std::optional<std::int64_t> analysis_window(const ExperimentConfig& cfg) {
    if (cfg.run.window) return cfg.run.window;
    return common_period(tone_cycles(cfg));
}

std::vector<double> baseline_amplitudes(const ExperimentConfig& cfg, std::int64_t window) {
    const auto dist = cfg.disturbance.spec();
    Plant plant(make_truth(cfg), dist);
    const std::int64_t settle = std::max<std::int64_t>(window, 2000);
    std::vector<double> error(static_cast<std::size_t>(settle + window));
    for (std::int64_t k = 0; k < settle + window; ++k) error[static_cast<std::size_t>(k)] = plant.step(0.0, 0.0, k);
    return amplitudes(error, settle, window, dist);
}

SimTrace run_experiment(const ExperimentConfig& cfg, const RunHooks& hooks) {
    const auto started = std::chrono::steady_clock::now();
    const auto dist = cfg.disturbance.spec();
    const auto omegas = cfg.disturbance.omegas();
    const double T = cfg.disturbance.sample_period;
    const std::size_t n = dist.size();
    const std::int64_t steps = cfg.run.steps;
    const std::int64_t freeze = cfg.run.freeze_at ? std::min(*cfg.run.freeze_at, steps) : steps;
    const std::int64_t decimate = std::max<std::int64_t>(cfg.run.decimate, 1);

    PlantTruth truth = make_truth(cfg);
    Plant plant(truth, dist);
    ExcitationSpec exc_spec = cfg.excitation;
    exc_spec.prbs_seed = cfg.prbs_seed();
    ExcitationSource excitation(exc_spec, T);
    ParameterAdapter adapter(cfg.estimator, omegas, T);
    ControllerState ctrl = ControllerState::initial(n, cfg.synthesis.alpha, cfg.synthesis.beta);
    RegressorBank bank(cfg.estimator.n_a);
    const double b_guard = cfg.estimator.projection.b_floor * (1.0 - 1e-9);
    const std::size_t stride = std::max<std::size_t>(cfg.synthesis.db_refresh_stride, 1);

    SimTrace trace;
    trace.error.reserve(static_cast<std::size_t>(steps));
    if (!hooks.on_record) trace.records.reserve(static_cast<std::size_t>(steps / decimate + 1));
    RunSummary& s = trace.summary;
    Eigen::VectorXd phi(static_cast<Eigen::Index>(2 * n));

    for (std::int64_t k = 0; k < steps; ++k) {
        try {
            const bool adaptive = cfg.run.adapt && k < freeze;
            phi_R(dist, k, {phi.data(), static_cast<std::size_t>(phi.size())});
            const double u = k < freeze ? excitation.next(k, phi) : 0.0;
            const double uA = control_output(ctrl, phi);
            const double e = plant.step(u, uA, k);

            PaaResult paa;
            if (adaptive) {
                paa = adapter.step(bank, phi, e);
                if (paa.projected_A) ++s.projections_A;
                if (paa.projected_B) ++s.projections_B;
                if (k % static_cast<std::int64_t>(stride) == 0)
                    ctrl.DB_hat = rebuild_DB_hat(adapter.state().theta_B, omegas, T, b_guard);
                synthesis_step(ctrl, adapter.state().theta_M);
            }
            bank.push(e, u, uA);
            trace.error.push_back(e);

            if (k % decimate == 0) {
                const auto& est = adapter.state();
                TraceRecord r;
                r.k = k;
                r.e = e;
                r.u = u;
                r.u_A = uA;
                r.epsilon0 = paa.epsilon0;
                r.theta_M_norm = est.theta_M.norm();
                r.projected_A = paa.projected_A;
                r.projected_B = paa.projected_B;
                r.theta_A = est.theta_A;
                r.theta_B = est.theta_B;
                r.theta_M = est.theta_M;
                r.theta_D = ctrl.theta_D;
                if (hooks.on_record)
                    hooks.on_record(r);
                else
                    trace.records.push_back(std::move(r));
            }
        } catch (const NumericFault& f) {
            if (f.step()) throw;
            throw NumericFault(f.what(), k);
        } catch (const SingularityError& f) {
            throw NumericFault(f.what(), k);
        }
    }

    s.name = cfg.name;
    s.steps = steps;
    if (cfg.run.freeze_at) s.freeze_at = freeze;
    s.backend = std::string(kernels::backend_name(kernels::active_backend()));
    s.estimator = adapter.state();
    s.theta_D = ctrl.theta_D;
    s.truth = truth.tf;
    s.theta_R = ground_truth_theta_R(truth, omegas, T);
    s.theta_R_norm = s.theta_R.norm();
    s.theta_M_norm = s.estimator.theta_M.norm();
    s.residue_factor = ResidueTarget::from_gains(cfg.synthesis.alpha, cfg.synthesis.beta).factor;
    s.assumption_H = check_assumption_H(s.estimator.theta_B, truth.tf.b, omegas, T);
    if (cfg.estimator.n_a == truth.tf.order()) {
        const Eigen::VectorXd ta = true_theta_A(truth.tf);
        const Eigen::VectorXd tb = true_theta_B(truth.tf);
        Eigen::VectorXd est(2 * ta.size()), tru(2 * ta.size());
        est << s.estimator.theta_A, s.estimator.theta_B;
        tru << ta, tb;
        s.plant_relative_error = relative(est, tru);
        s.theta_A_error = relative(s.estimator.theta_A, ta);
        s.theta_B_error = relative(s.estimator.theta_B, tb);
    } else {
        s.plant_relative_error = s.theta_A_error = s.theta_B_error = std::numeric_limits<double>::quiet_NaN();
    }

    s.harmonics.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        s.harmonics[i].omega = omegas[i];
        s.harmonics[i].freq_hz = omegas[i] / kTwoPi;
    }
    const auto window = analysis_window(cfg);
    if (window && *window > 0) {
        s.window = window;
        if (!hooks.skip_baseline) {
            const auto before = baseline_amplitudes(cfg, *window);
            for (std::size_t i = 0; i < n; ++i) s.harmonics[i].before = before[i];
        }
        if (freeze >= *window) {
            const auto after = amplitudes(trace.error, freeze - *window, *window, dist);
            for (std::size_t i = 0; i < n; ++i) s.harmonics[i].after = after[i];
        }
    }
    if (dist.period() && freeze < steps) {
        const std::int64_t P = *dist.period();
        const std::int64_t periods = (steps - freeze) / P;
        if (periods >= 2) {
            // the first period after the switch is left for the excitation response to die out
            const std::int64_t len = (periods - 1) * P;
            s.replay_window = len;
            const auto replay = amplitudes(trace.error, steps - len, len, dist);
            for (std::size_t i = 0; i < n; ++i) s.harmonics[i].replay = replay[i];
        }
    }
    s.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return trace;
}

StationaryCheck stationary_point_check(const ExperimentConfig& cfg, std::int64_t warmup) {
    const auto dist = cfg.disturbance.spec();
    const auto omegas = cfg.disturbance.omegas();
    const double T = cfg.disturbance.sample_period;
    const std::size_t n = dist.size();
    if (!dist.period()) throw WindowingError("stationary_point_check: harmonics have no common period");
    if (cfg.estimator.n_a != cfg.plant.tf.order())
        throw DimensionError("stationary_point_check: estimator order must match the plant order");

    PlantTruth truth = make_truth(cfg);
    truth.noise_sigma = 0.0;
    Plant plant(truth, dist);
    ExcitationSpec exc_spec = cfg.excitation;
    exc_spec.prbs_seed = cfg.prbs_seed();
    ExcitationSource excitation(exc_spec, T);

    EstimatorState est = EstimatorState::initial(cfg.estimator.n_a, n, cfg.estimator.f0);
    est.theta_A = true_theta_A(truth.tf);
    est.theta_B = true_theta_B(truth.tf);
    est.raw_A = est.theta_A;
    est.raw_B = est.theta_B;
    const Eigen::VectorXd theta_R = ground_truth_theta_R(truth, omegas, T);
    const double rho = ResidueTarget::from_gains(cfg.synthesis.alpha, cfg.synthesis.beta).factor;
    est.theta_M = rho * theta_R;

    ControllerState ctrl = ControllerState::initial(n, cfg.synthesis.alpha, cfg.synthesis.beta);
    ctrl.DB_hat = rebuild_DB_hat(est.theta_B, omegas, T);
    ctrl.theta_D = synthesis_fixed_point(ctrl, est.theta_M);

    RegressorBank bank(cfg.estimator.n_a);
    const std::int64_t P = *dist.period();
    const std::int64_t start = std::max<std::int64_t>(warmup, static_cast<std::int64_t>(cfg.estimator.n_a));
    const auto na = static_cast<Eigen::Index>(cfg.estimator.n_a);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(2 * na + 4 * static_cast<Eigen::Index>(n));
    Eigen::VectorXd phi(static_cast<Eigen::Index>(2 * n));

    for (std::int64_t k = 0; k < start + P; ++k) {
        phi_R(dist, k, {phi.data(), static_cast<std::size_t>(phi.size())});
        const double u = excitation.next(k, phi);
        const double uA = control_output(ctrl, phi);
        const double e = plant.step(u, uA, k);
        const double eps = e - predict(est, bank, phi);
        const std::int64_t kk = k + 1;
        update_gains(est.F, est.f, bank.phi_e(), bank.phi_u(), phi, cfg.estimator.gamma1(kk),
                     cfg.estimator.gamma2(kk), cfg.estimator.regularization);
        if (k >= start) {
            Eigen::VectorXd psi(2 * na);
            psi << bank.phi_e(), bank.phi_u();
            ControllerState next = ctrl;
            synthesis_step(next, est.theta_M);
            Eigen::VectorXd dir(sum.size());
            dir << est.F.llt().solve(psi) * eps, phi * (eps / est.f), next.theta_D - ctrl.theta_D;
            sum += dir;
        }
        bank.push(e, u, uA);
    }
    StationaryCheck out;
    out.period = P;
    out.theta_R_norm = theta_R.norm();
    out.update_norm = (sum / static_cast<double>(P)).norm();
    return out;
}

} // namespace dafc
