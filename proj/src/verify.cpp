#include "dafc/verify.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "dafc/adaptation.hpp"
#include "dafc/config.hpp"
#include "dafc/excitation.hpp"
#include "dafc/lti.hpp"
#include "dafc/phase.hpp"
#include "dafc/regressor.hpp"
#include "dafc/simulator.hpp"
#include "dafc/synthesis.hpp"

namespace dafc::verify {

namespace {

std::string sci(double x) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << x;
    return os.str();
}

PropertyResult bound(std::string name, double value, double limit) {
    return {std::move(name), value <= limit, sci(value) + " <= " + sci(limit)};
}

// Polynomial 1 + c_1 q^-1 + ... with every root of the reciprocal inside
// radius r_max.
lti::Polynomial random_stable(Rng& rng, std::size_t degree, double r_max) {
    std::vector<std::complex<double>> poly{1.0};
    auto mul = [&](std::complex<double> z) {
        poly.push_back(0.0);
        for (std::size_t i = poly.size() - 1; i > 0; --i) poly[i] -= z * poly[i - 1];
    };
    std::size_t placed = 0;
    while (placed + 2 <= degree) {
        const auto z = std::polar(rng.uniform(0.0, r_max), rng.uniform(0.0, std::numbers::pi));
        mul(z);
        mul(std::conj(z));
        placed += 2;
    }
    if (placed < degree) mul(rng.uniform(-r_max, r_max));
    std::vector<double> c;
    for (auto z : poly) c.push_back(z.real());
    return lti::Polynomial(std::move(c));
}

DisturbanceSpec random_spec(Rng& rng, std::size_t n, double T) {
    std::vector<double> w;
    const double nyq = std::numbers::pi / T;
    for (std::size_t i = 0; i < n; ++i) w.push_back(nyq * (0.05 + 0.8 * (static_cast<double>(i) + rng.uniform()) / static_cast<double>(n)));
    return DisturbanceSpec::frequencies_only(std::move(w), T);
}

SuiteResult lemma1(std::uint64_t seed) {
    Rng rng(seed);
    double worst_fir = 0.0, worst_iir = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 4);
        const auto spec = random_spec(rng, n, 1.0);
        Eigen::VectorXd theta(static_cast<Eigen::Index>(2 * n));
        for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = rng.uniform(-1.0, 1.0);
        const std::size_t degree = 1 + static_cast<std::size_t>(rng.uniform() * 8);
        const auto p = random_stable(rng, degree, 0.9);
        std::vector<double> c(p.coeffs().begin(), p.coeffs().end());
        for (double& x : c) x *= rng.uniform(0.5, 2.0);

        const lti::Polynomial L(c);
        const auto DL = lti::build_transform(L, spec.omegas(), 1.0);
        // 1/p: inverse responses at each frequency
        std::vector<lti::RotationBlock> inv;
        for (double w : spec.omegas()) inv.emplace_back(1.0 / p.evaluate(w));
        const lti::BlockDiagTransform Dinv(inv);

        lti::Filter fir(L, lti::Polynomial{});
        lti::Filter iir(lti::Polynomial{}, p);
        const int transient = 400, span = 2000;
        double gap_f = 0.0, ref_f = 0.0, gap_i = 0.0, ref_i = 0.0;
        Eigen::VectorXd phi(theta.size()), out(theta.size());
        for (int k = 0; k < transient + span; ++k) {
            phi_R(spec, k, {phi.data(), static_cast<std::size_t>(phi.size())});
            const double x = theta.dot(phi);
            const double yf = fir.step(x);
            const double yi = iir.step(x);
            if (k < transient) continue;
            DL.apply({phi.data(), static_cast<std::size_t>(phi.size())}, {out.data(), static_cast<std::size_t>(out.size())});
            const double mf = theta.dot(out);
            Dinv.apply({phi.data(), static_cast<std::size_t>(phi.size())}, {out.data(), static_cast<std::size_t>(out.size())});
            const double mi = theta.dot(out);
            gap_f += (yf - mf) * (yf - mf);
            ref_f += mf * mf;
            gap_i += (yi - mi) * (yi - mi);
            ref_i += mi * mi;
        }
        worst_fir = std::max(worst_fir, std::sqrt(gap_f / ref_f));
        worst_iir = std::max(worst_iir, std::sqrt(gap_i / ref_i));
    }
    return {"lemma1",
            seed,
            {bound("FIR filtering matches the block transform (relative RMS)", worst_fir, 1e-6),
             bound("IIR filtering matches the block transform after the transient (relative RMS)", worst_iir, 1e-6)}};
}

SuiteResult excitation(std::uint64_t seed) {
    Rng rng(seed);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 5);
        const double T = 1.0 / rng.uniform(1e3, 1e5);
        const auto spec = random_spec(rng, n, T);
        ExcitationSpec ex;
        ex.mode = ExcitationMode::Shaped;
        ex.alpha_u = {rng.uniform(0.01, 2.0), 0.0, 0.0};
        ex.delta_u = {rng.uniform(0.01, 0.5) * spec.omegas().front()};
        const std::int64_t k0 = static_cast<std::int64_t>(rng.uniform() * 1e9);
        for (std::int64_t k = k0; k < k0 + 10000; ++k) {
            const auto phi = phi_R(spec, k);
            worst = std::max(worst, std::abs(excitation_fast(ex, phi, k, T) - excitation_direct(ex, spec, k)));
        }
    }
    return {"excitation", seed, {bound("product form equals the sideband sum", worst, 1e-12)}};
}

SuiteResult pe(std::uint64_t seed) {
    Rng rng(seed);
    const double T = 1.0;
    const double w = rng.uniform(0.2, 0.6);
    std::vector<double> sine(4000);
    for (std::size_t k = 0; k < sine.size(); ++k) sine[k] = std::sin(w * static_cast<double>(k) + 0.3);
    const auto s2 = pe_order(sine, 2);
    const auto s3 = pe_order(sine, 3);

    const auto spec = DisturbanceSpec::frequencies_only({0.3, 0.9, 1.7}, T);
    ExcitationSpec ex;
    ex.mode = ExcitationMode::Shaped;
    ex.alpha_u = {1.0, 0.0, 0.0};
    ex.delta_u = {0.05};
    std::vector<double> u(8000);
    for (std::size_t k = 0; k < u.size(); ++k) u[k] = excitation_direct(ex, spec, static_cast<std::int64_t>(k));
    const auto u6 = pe_order(u, 6);

    std::vector<double> prbs_sig(8000);
    Prbs gen(seed, 1.0);
    for (double& x : prbs_sig) x = gen.next();
    const auto p10 = pe_order(prbs_sig, 10);

    return {"pe",
            seed,
            {{"single sinusoid is PE of order 2", s2.persistent, "min eig " + sci(s2.min_eigenvalue)},
             {"single sinusoid is not PE of order 3", !s3.persistent, "min eig " + sci(s3.min_eigenvalue)},
             {"shaped excitation with n = 3 is PE of order 6", u6.persistent, "min eig " + sci(u6.min_eigenvalue)},
             {"PRBS is PE of order 10", p10.persistent, "min eig " + sci(p10.min_eigenvalue)}}};
}

SuiteResult projections(std::uint64_t seed) {
    Rng rng(seed);
    ProjectionConfig cfg;
    cfg.b_floor = 0.05;
    const std::vector<double> omegas{0.2, 0.7, 1.3};
    bool a_ok = true, b_ok = true;
    for (int trial = 0; trial < 500; ++trial) {
        const auto na = static_cast<Eigen::Index>(1 + rng.uniform() * 8);
        Eigen::VectorXd th(na);
        for (Eigen::Index i = 0; i < na; ++i) th[i] = rng.uniform(-4.0, 4.0);
        const auto pa = project_A(th, cfg);
        EstimatorState s;
        s.theta_A = pa.value;
        a_ok = a_ok && lti::is_schur_stable(s.a_poly(), cfg.schur_margin);

        Eigen::VectorXd tb(na);
        for (Eigen::Index i = 0; i < na; ++i) tb[i] = rng.uniform(-1.0, 1.0) * std::pow(10.0, rng.uniform(-8.0, 0.0));
        if (trial % 50 == 0) tb.setZero();
        s.theta_B = project_B(tb, omegas, 1.0, cfg).value;
        for (double w : omegas) b_ok = b_ok && std::abs(s.b_poly().evaluate(w)) >= cfg.b_floor * (1.0 - 1e-12);
    }
    return {"projections",
            seed,
            {{"projected theta_A is Schur-stable", a_ok, "500 random vectors"},
             {"projected B_hat clears b_floor at every compensation frequency", b_ok, "500 random vectors"}}};
}

SuiteResult equilibrium(std::uint64_t seed) {
    auto cfg = table1_analog_config();
    cfg.plant.random->seed = seed;
    cfg.plant.tf = random_stable_plant(*cfg.plant.random, cfg.disturbance.omegas(), cfg.disturbance.sample_period);
    cfg.plant.noise_sigma = 0.0;
    const auto r = stationary_point_check(cfg, 1000);
    return {"equilibrium", seed, {bound("period-averaged update direction / |theta_R|", r.update_norm / r.theta_R_norm, 1e-6)}};
}

SuiteResult residue(std::uint64_t seed) {
    Rng rng(seed);
    const SynthesisConfig sc;
    const std::size_t n = 4;
    ControllerState ctrl = ControllerState::initial(n, sc.alpha, sc.beta);
    std::vector<lti::RotationBlock> blocks;
    for (std::size_t i = 0; i < n; ++i) blocks.push_back(lti::RotationBlock::from_polar(rng.uniform(0.1, 3.0), rng.uniform(-3.0, 3.0)));
    ctrl.DB_hat = lti::BlockDiagTransform(blocks);
    Eigen::VectorXd theta_R(static_cast<Eigen::Index>(2 * n));
    for (Eigen::Index i = 0; i < theta_R.size(); ++i) theta_R[i] = rng.uniform(-1.0, 1.0);

    // exact model: theta_M = D_B^T theta_D + theta_R
    Eigen::VectorXd theta_M = theta_R;
    for (int k = 0; k < 2000000; ++k) {
        synthesis_step(ctrl, theta_M);
        ctrl.DB_hat.apply_transposed({ctrl.theta_D.data(), 2 * n}, {theta_M.data(), 2 * n});
        theta_M += theta_R;
    }
    const double target = ResidueTarget::from_gains(sc.alpha, sc.beta).factor;
    const double ratio = theta_M.norm() / theta_R.norm();
    return {"residue",
            seed,
            {bound("|theta_M| / |theta_R| matches (1 - beta) / (1 - beta + alpha) (relative gap)",
                   std::abs(ratio - target) / target, 1e-3)}};
}

} // namespace

bool SuiteResult::passed() const {
    for (const auto& p : properties)
        if (!p.passed) return false;
    return true;
}

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"lemma1", "excitation", "pe", "projections", "equilibrium", "residue"};
    return names;
}

SuiteResult run_suite(const std::string& name, std::uint64_t seed) {
    if (name == "lemma1") return lemma1(seed);
    if (name == "excitation") return excitation(seed);
    if (name == "pe") return pe(seed);
    if (name == "projections") return projections(seed);
    if (name == "equilibrium") return equilibrium(seed);
    if (name == "residue") return residue(seed);
    throw std::invalid_argument("unknown suite '" + name + "'");
}

} // namespace dafc::verify
