// Acceptance suite: one PASS/FAIL line per criterion with its runtime.
// A criterion fails when its property fails or it exceeds its time budget.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dafc/adaptation.hpp"
#include "dafc/config.hpp"
#include "dafc/excitation.hpp"
#include "dafc/kernels.hpp"
#include "dafc/lti.hpp"
#include "dafc/phase.hpp"
#include "dafc/regressor.hpp"
#include "dafc/simulator.hpp"
#include "dafc/synthesis.hpp"
#include "dafc/trace_io.hpp"

using namespace dafc;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = o.passed && dt < budget_s;
    if (!ok) ++failures;
    std::printf("criterion %d %s %-26s %7.3f s (budget %4.0f s)  %s%s\n", id, ok ? "PASS" : "FAIL", name, dt, budget_s,
                o.detail.c_str(), o.passed && dt >= budget_s ? " [over budget]" : "");
    std::fflush(stdout);
}

// Largest root modulus of z^n + c_1 z^(n-1) + ... (c[0] == 1).
double max_root(const std::vector<double>& c) {
    const auto n = static_cast<Eigen::Index>(c.size() - 1);
    if (n == 0) return 0.0;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) M(0, j) = -c[static_cast<std::size_t>(j) + 1];
    for (Eigen::Index i = 1; i < n; ++i) M(i, i - 1) = 1.0;
    return M.eigenvalues().cwiseAbs().maxCoeff();
}

// Real monic polynomial from random roots inside the disc.
std::vector<double> random_stable_poly(std::mt19937_64& gen, std::size_t degree, double r_max) {
    std::uniform_real_distribution<double> mod(0.05, r_max), ang(0.0, std::numbers::pi);
    std::vector<std::complex<double>> p{1.0};
    auto mul = [&](std::complex<double> r) {
        p.push_back(0.0);
        for (std::size_t i = p.size() - 1; i > 0; --i) p[i] -= r * p[i - 1];
    };
    std::size_t placed = 0;
    while (placed + 2 <= degree) {
        const auto r = std::polar(mod(gen), ang(gen));
        mul(r);
        mul(std::conj(r));
        placed += 2;
    }
    if (placed < degree) mul(mod(gen) * (ang(gen) < std::numbers::pi / 2 ? 1.0 : -1.0));
    std::vector<double> c(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) c[i] = p[i].real();
    return c;
}

Outcome excitation_identity() {
    std::mt19937_64 gen(101);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int s = 0; s < 20; ++s) {
        const double T = 1.0 / (1e3 + 1e5 * u(gen));
        const std::size_t n = 1 + static_cast<std::size_t>(s % 6);
        const double w0 = (0.01 + 0.1 * u(gen)) * std::numbers::pi / T / static_cast<double>(n);
        std::vector<double> w;
        for (std::size_t i = 1; i <= n; ++i) w.push_back(w0 * static_cast<double>(i) * (1.0 + 0.01 * u(gen)));
        const auto dist = DisturbanceSpec::frequencies_only(w, T);
        ExcitationSpec ex;
        ex.alpha_u = {0.1 + 2.0 * u(gen), 0.0, 0.0};
        ex.delta_u = {w0 * (0.001 + 0.05 * u(gen))};
        Eigen::VectorXd phi(static_cast<Eigen::Index>(2 * n));
        for (std::int64_t k = 0; k < 10000; ++k) {
            phi_R(dist, k, {phi.data(), static_cast<std::size_t>(phi.size())});
            worst = std::max(worst, std::abs(excitation_fast(ex, phi, k, T) - excitation_direct(ex, dist, k)));
        }
    }
    return {worst <= 1e-12, "max gap " + fmt("%.2e", worst)};
}

Outcome lemma1() {
    std::mt19937_64 gen(202);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        const std::size_t deg = 1 + static_cast<std::size_t>(t % 8);
        const auto c = random_stable_poly(gen, deg, 0.95);
        const double rho = max_root(c);
        const std::size_t n = 1 + static_cast<std::size_t>(t % 4);
        std::vector<double> w;
        for (std::size_t i = 1; i <= n; ++i) w.push_back(0.6 * static_cast<double>(i) + 0.1 * u(gen));
        const auto dist = DisturbanceSpec::frequencies_only(w, 1.0);
        Eigen::VectorXd theta(static_cast<Eigen::Index>(2 * n));
        for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = u(gen);

        const auto D = lti::build_transform(lti::Polynomial(c), w, 1.0);
        std::vector<lti::RotationBlock> inv;
        for (const auto& b : D.blocks()) inv.push_back(lti::RotationBlock(1.0 / b.value()));
        const lti::BlockDiagTransform Dinv(inv);

        // in-test difference equations: y = p s (FIR) and p z = s (IIR)
        const auto transient = static_cast<std::int64_t>(std::ceil(40.0 / (1.0 - rho)));
        const std::int64_t N = transient + 20000;
        std::vector<double> s(static_cast<std::size_t>(N)), z(static_cast<std::size_t>(N), 0.0);
        double e_fir = 0.0, e_iir = 0.0, p_fir = 0.0, p_iir = 0.0;
        Eigen::VectorXd phi(theta.size()), out(theta.size());
        for (std::int64_t k = 0; k < N; ++k) {
            phi_R(dist, k, {phi.data(), static_cast<std::size_t>(phi.size())});
            const auto kk = static_cast<std::size_t>(k);
            s[kk] = theta.dot(phi);
            double y = 0.0, acc = s[kk];
            for (std::size_t i = 0; i <= deg && i <= kk; ++i) y += c[i] * s[kk - i];
            for (std::size_t i = 1; i <= deg && i <= kk; ++i) acc -= c[i] * z[kk - i];
            z[kk] = acc;
            if (k < transient) continue;
            D.apply({phi.data(), static_cast<std::size_t>(phi.size())}, {out.data(), static_cast<std::size_t>(out.size())});
            const double yf = theta.dot(out);
            Dinv.apply({phi.data(), static_cast<std::size_t>(phi.size())}, {out.data(), static_cast<std::size_t>(out.size())});
            const double yi = theta.dot(out);
            e_fir += (y - yf) * (y - yf);
            p_fir += yf * yf;
            e_iir += (z[kk] - yi) * (z[kk] - yi);
            p_iir += yi * yi;
        }
        worst = std::max({worst, std::sqrt(e_fir / p_fir), std::sqrt(e_iir / p_iir)});
    }
    return {worst <= 1e-6, "worst relative RMS gap " + fmt("%.2e", worst) + " (FIR and all-pole forms)"};
}

Outcome pe_orders() {
    std::vector<double> sine(5000);
    for (std::size_t k = 0; k < sine.size(); ++k) sine[k] = std::sin(0.37 * static_cast<double>(k) + 0.5);
    const bool s2 = pe_order(sine, 2).persistent;
    const bool s3 = pe_order(sine, 3).persistent;

    const auto dist = DisturbanceSpec::frequencies_only({0.3, 0.9, 1.7}, 1.0);
    ExcitationSpec ex;
    ex.alpha_u = {1.0, 0.0, 0.0};
    ex.delta_u = {0.05};
    std::vector<double> u(20000);
    for (std::size_t k = 0; k < u.size(); ++k) u[k] = excitation_direct(ex, dist, static_cast<std::int64_t>(k));
    const auto r6 = pe_order(u, 6);

    // independent Gram matrix through Eigen
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(6, 6);
    for (std::size_t t = 5; t < u.size(); ++t)
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) G(i, j) += u[t - static_cast<std::size_t>(i)] * u[t - static_cast<std::size_t>(j)];
    G /= static_cast<double>(u.size() - 5);
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(G).eigenvalues();
    const bool agree = std::abs(ev.minCoeff() - r6.min_eigenvalue) <= 1e-9 * ev.maxCoeff();

    const bool ok = s2 && !s3 && r6.persistent && agree && ev.minCoeff() > 1e-6 * ev.maxCoeff();
    return {ok, std::string("sine order2 ") + (s2 ? "yes" : "no") + ", order3 " + (s3 ? "yes" : "no") +
                    "; sideband n=3 order6 " + (r6.persistent ? "yes" : "no") + " (min eig " +
                    fmt("%.3g", r6.min_eigenvalue) + ", Eigen " + fmt("%.3g", ev.minCoeff()) + ")"};
}

Outcome identification() {
    auto cfg = table1_analog_config();
    cfg.excitation.mode = ExcitationMode::Prbs;
    cfg.excitation.alpha_u = {300.0, 300.0, 0.0};
    cfg.estimator.gamma1 = {1.0, 1.0, 0.0, 0.0};
    cfg.run.steps = 200000;
    cfg.run.decimate = 1;
    cfg.run.freeze_at.reset();
    std::vector<double> u;
    u.reserve(static_cast<std::size_t>(cfg.run.steps));
    RunHooks hooks;
    hooks.skip_baseline = true;
    hooks.on_record = [&](const TraceRecord& r) { u.push_back(r.u); };
    const auto t = run_experiment(cfg, hooks);
    const auto pe = pe_order(std::span<const double>(u.data(), 50000), 10);
    const double err = t.summary.plant_relative_error;
    return {pe.persistent && err < 0.02,
            "relative error " + fmt("%.3e", err) + ", input PE order 10 " + (pe.persistent ? "yes" : "no")};
}

Outcome residue_law() {
    const auto cfg = table1_analog_config();
    const double reference = ResidueTarget::from_gains(4e-5, 1.0 - 2e-7).factor;
    const auto t = run_experiment(cfg);
    const auto& s = t.summary;
    const double ratio = s.theta_M_norm / s.theta_R_norm;
    const double target = s.residue_factor;
    bool ok = std::abs(reference - 4.975e-3) < 1e-6 && std::abs(target - reference) < 1e-15 && ratio >= 0.5 * target &&
              ratio <= 2.0 * target;
    std::string att;
    for (const auto& h : s.harmonics) {
        const double db = h.after ? 20.0 * std::log10(*h.after / h.before) : 0.0;
        ok = ok && h.after && db <= -40.0;
        att += (att.empty() ? "" : " ") + fmt("%.1f", db);
    }
    return {ok, "ratio " + fmt("%.4e", ratio) + " vs target " + fmt("%.4e", target) + "; dB [" + att + "]"};
}

Outcome stationary() {
    const auto r = stationary_point_check(table1_analog_config());
    const double rel = r.update_norm / r.theta_R_norm;
    return {rel <= 1e-6, "update norm / |theta_R| = " + fmt("%.2e", rel) + " over " + std::to_string(r.period) + " samples"};
}

struct AdversarialCase {
    std::string label;
    ExperimentConfig cfg;
};

Outcome projection_safety() {
    std::vector<AdversarialCase> cases;
    const auto base = table1_analog_config();
    const double T = base.disturbance.sample_period;
    const double w1T = base.disturbance.omegas().front() * T;

    auto slow = base;
    // pole at 0.98 plus a fast pair, identified with too few parameters and noise
    {
        const auto a = lti::Polynomial({1.0, -0.98}) * lti::Polynomial({1.0, -0.6, 0.25}) * lti::Polynomial({1.0, 0.3});
        const auto& ac = a.coeffs();
        std::vector<double> b{0.0, 0.5, -0.3, 0.2, 0.1};
        slow.plant.tf = lti::TransferFunction::make(std::vector<double>(ac.begin(), ac.end()), b);
        slow.plant.random.reset();
        slow.plant.noise_sigma = 0.2;
        slow.estimator.n_a = 2;
        slow.excitation.alpha_u = {30.0, 1.0, 20000.0};
    }
    for (bool wb : {false, true}) {
        auto c = slow;
        c.estimator.project_recursion = wb;
        cases.push_back({std::string("slow pole, n_a 2, noise, write_back ") + (wb ? "on" : "off"), c});
    }

    auto notch = base;
    // B with an exact zero at the first compensation frequency
    notch.plant.tf = lti::TransferFunction::make({1.0, -0.5, 0.06}, {0.0, 1.0, -2.0 * std::cos(w1T)});
    notch.plant.tf.b = lti::Polynomial({0.0, 1.0, -2.0 * std::cos(w1T), 1.0});
    notch.plant.tf.a = lti::Polynomial({1.0, -0.5, 0.06, 0.0});
    notch.plant.random.reset();
    notch.estimator.n_a = 3;
    for (bool wb : {false, true}) {
        auto c = notch;
        c.estimator.project_recursion = wb;
        cases.push_back({std::string("B zero at w1, write_back ") + (wb ? "on" : "off"), c});
    }

    auto lagged = base;
    lagged.estimator.timing = GainTiming::Lagged;
    lagged.estimator.gamma1 = {1.0, 0.5, 0.05, 0.0};
    lagged.excitation.alpha_u = {1000.0, 1000.0, 0.0};
    cases.push_back({"lagged gain, large excitation", lagged});

    std::int64_t steps_checked = 0, violations = 0, projections = 0;
    std::string detail;
    for (auto& c : cases) {
        c.cfg.run.steps = 100000;
        c.cfg.run.decimate = 1;
        c.cfg.run.freeze_at.reset();
        const double floor = c.cfg.estimator.projection.b_floor;
        const auto omegas = c.cfg.disturbance.omegas();
        RunHooks hooks;
        hooks.skip_baseline = true;
        std::int64_t local = 0;
        hooks.on_record = [&](const TraceRecord& r) {
            ++steps_checked;
            ++local;
            std::vector<double> a(static_cast<std::size_t>(r.theta_A.size()) + 1);
            a[0] = 1.0;
            for (Eigen::Index i = 0; i < r.theta_A.size(); ++i) a[static_cast<std::size_t>(i) + 1] = -r.theta_A[i];
            bool ok = max_root(a) < 1.0;
            for (double w : omegas) {
                std::complex<double> b = 0.0;
                for (Eigen::Index i = 0; i < r.theta_B.size(); ++i)
                    b += r.theta_B[i] * std::exp(std::complex<double>(0.0, -w * T * static_cast<double>(i + 1)));
                ok = ok && std::abs(b) >= floor * (1.0 - 1e-9);
            }
            if (!ok) ++violations;
        };
        const auto t = run_experiment(c.cfg, hooks);
        projections += t.summary.projections_A + t.summary.projections_B;
        if (local != c.cfg.run.steps) ++violations;
    }
    detail = std::to_string(cases.size()) + " runs, " + std::to_string(steps_checked) + " steps checked, " +
             std::to_string(violations) + " violations, " + std::to_string(projections) + " projections fired";
    return {violations == 0 && projections > 0, detail};
}

Outcome determinism() {
    auto cfg = table1_analog_config();
    cfg.run.steps = 100000;
    cfg.run.decimate = 10;
    cfg.plant.noise_sigma = 0.05;
    cfg.run.freeze_at.reset();
    auto render = [&] {
        std::ostringstream os;
        io::TraceWriter w(os, cfg.estimator.n_a, cfg.disturbance.harmonics.size());
        RunHooks hooks;
        hooks.skip_baseline = true;
        hooks.on_record = [&](const TraceRecord& r) { w.write(r); };
        run_experiment(cfg, hooks);
        return os.str();
    };
    const auto a = render();
    const auto b = render();
    return {a == b && a.size() > 100000, std::to_string(a.size()) + " bytes, " + (a == b ? "identical" : "different")};
}

Outcome replay() {
    auto cfg = table1_analog_config();
    const std::int64_t P = 348;
    cfg.run.freeze_at = cfg.run.steps;
    cfg.run.steps = *cfg.run.freeze_at + 101 * P;
    const auto t = run_experiment(cfg);
    const auto& s = t.summary;
    bool ok = s.replay_window && *s.replay_window == 100 * P;
    std::string detail;
    for (const auto& h : s.harmonics) {
        const double r = h.replay && h.after ? *h.replay / *h.after : 0.0;
        ok = ok && r >= 0.5 && r <= 2.0;
        detail += (detail.empty() ? "" : " ") + fmt("%.3f", r);
    }
    return {ok, "replay/after [" + detail + "] over " + std::to_string(s.replay_window.value_or(0)) + " samples"};
}

} // namespace

int main() {
    std::printf("acceptance suite (%s kernels)\n", std::string(kernels::backend_name(kernels::active_backend())).c_str());
    criterion(1, "excitation identity", 1.0, excitation_identity);
    criterion(2, "Lemma-1 equivalence", 10.0, lemma1);
    criterion(3, "PE order", 5.0, pe_orders);
    criterion(4, "identification", 30.0, identification);
    criterion(5, "residue law", 60.0, residue_law);
    criterion(6, "stationary point", 5.0, stationary);
    criterion(7, "projection safety", 20.0, projection_safety);
    criterion(8, "determinism", 10.0, determinism);
    criterion(9, "frozen replay", 15.0, replay);
    std::printf("%d of 9 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
