#include "dafc/adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dafc/error.hpp"
#include "dafc/kernels.hpp"

namespace dafc {

namespace {

std::span<const double> view(const Eigen::VectorXd& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

bool all_finite(const EstimatorState& s) {
    return s.theta_A.allFinite() && s.theta_B.allFinite() && s.theta_M.allFinite() && s.F.allFinite() &&
           std::isfinite(s.f);
}

double min_cholesky_pivot(const Eigen::MatrixXd& F) {
    Eigen::LLT<Eigen::MatrixXd> llt(F);
    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    const Eigen::VectorXd diag = llt.matrixLLT().diagonal();
    return diag.cwiseProduct(diag).minCoeff();
}

// Lower bound on log(max root modulus) of 1 - th_1 z^-1 - ... - th_n z^-n,
// from |th_i| <= C(n, i) r^i.
double log_root_radius_lower(const Eigen::VectorXd& th) {
    const auto n = static_cast<double>(th.size());
    double best = -std::numeric_limits<double>::infinity();
    double log_binom = 0.0;
    for (Eigen::Index i = 0; i < th.size(); ++i) {
        const double order = static_cast<double>(i + 1);
        log_binom += std::log((n - order + 1.0) / order);
        if (th[i] != 0.0) best = std::max(best, (std::log(std::abs(th[i])) - log_binom) / order);
    }
    return best;
}

Eigen::VectorXd b_magnitudes(const Eigen::VectorXd& theta_B, std::span<const double> omegas, double T) {
    std::vector<double> coeffs(static_cast<std::size_t>(theta_B.size()) + 1, 0.0);
    for (Eigen::Index i = 0; i < theta_B.size(); ++i) coeffs[static_cast<std::size_t>(i) + 1] = theta_B[i];
    const lti::Polynomial b(std::move(coeffs));
    Eigen::VectorXd m(static_cast<Eigen::Index>(omegas.size()));
    for (std::size_t h = 0; h < omegas.size(); ++h) m[static_cast<Eigen::Index>(h)] = std::abs(b.evaluate(omegas[h] * T));
    return m;
}

} // namespace

double GainSchedule::operator()(std::int64_t k) const {
    const double kk = static_cast<double>(std::max<std::int64_t>(k, 1)) + offset;
    return std::max(c / std::pow(kk, p), floor);
}

void GainSchedule::validate() const {
    if (!(c > 0.0) || !std::isfinite(c)) throw SpecValidationError("gain schedule: C must be positive");
    if (!(p > 0.0) || !(p <= 1.0)) throw SpecValidationError("gain schedule: exponent must lie in (0, 1]");
    if (!(floor >= 0.0)) throw SpecValidationError("gain schedule: floor must be >= 0");
    if (!(offset >= 0.0)) throw SpecValidationError("gain schedule: offset must be >= 0");
    if (!((*this)(1) <= 1.0)) throw SpecValidationError("gain schedule: gamma(1) must not exceed 1");
}

std::optional<double> ProjectionConfig::b_ceil(std::size_t h) const {
    if (!b_ceil_ratio || h >= nominal_magnitude.size()) return std::nullopt;
    return *b_ceil_ratio * nominal_magnitude[h];
}

void ProjectionConfig::validate(std::size_t harmonics) const {
    if (!(b_floor > 0.0)) throw SpecValidationError("projection: b_floor must be positive");
    if (!(shrink_rho > 0.0 && shrink_rho < 1.0)) throw SpecValidationError("projection: shrink_rho must lie in (0, 1)");
    if (!(schur_margin >= 0.0)) throw SpecValidationError("projection: schur_margin must be >= 0");
    if (!(eta > 0.0)) throw SpecValidationError("projection: eta must be positive");
    if (b_ceil_ratio) {
        if (nominal_magnitude.size() != harmonics)
            throw SpecValidationError("projection: nominal_magnitude needs one entry per harmonic");
        for (std::size_t h = 0; h < harmonics; ++h)
            if (!(*b_ceil(h) > b_floor))
                throw SpecValidationError("projection: b_ceil must exceed b_floor at harmonic " + std::to_string(h + 1));
    }
}

EstimatorState EstimatorState::initial(std::size_t n_a, std::size_t harmonics, double f0) {
    const auto na = static_cast<Eigen::Index>(n_a);
    EstimatorState s;
    s.theta_A = Eigen::VectorXd::Zero(na);
    s.theta_B = Eigen::VectorXd::Zero(na);
    s.theta_M = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 * harmonics));
    s.raw_A = s.theta_A;
    s.raw_B = s.theta_B;
    s.F = f0 * Eigen::MatrixXd::Identity(2 * na, 2 * na);
    s.f = static_cast<double>(harmonics);
    s.k = 0;
    return s;
}

lti::Polynomial EstimatorState::a_poly() const {
    std::vector<double> c(static_cast<std::size_t>(theta_A.size()) + 1);
    c[0] = 1.0;
    for (Eigen::Index i = 0; i < theta_A.size(); ++i) c[static_cast<std::size_t>(i) + 1] = -theta_A[i];
    return lti::Polynomial(std::move(c));
}

lti::Polynomial EstimatorState::b_poly() const {
    std::vector<double> c(static_cast<std::size_t>(theta_B.size()) + 1, 0.0);
    for (Eigen::Index i = 0; i < theta_B.size(); ++i) c[static_cast<std::size_t>(i) + 1] = theta_B[i];
    return lti::Polynomial(std::move(c));
}

double predict(const EstimatorState& est, const RegressorBank& bank, const Eigen::VectorXd& phi_R) {
    const auto& a = est.recursion_A();
    const auto& b = est.recursion_B();
    if (bank.phi_e().size() != a.size() || bank.phi_u().size() != b.size())
        throw DimensionError("predict: regressor order does not match the estimator");
    if (phi_R.size() != est.theta_M.size()) throw DimensionError("predict: phi_R length does not match theta_M");
    return kernels::dot(view(a), view(bank.phi_e())) + kernels::dot(view(b), view(bank.phi_u())) +
           kernels::dot(view(est.theta_M), view(phi_R));
}

void update_gains(Eigen::MatrixXd& F, double& f, const Eigen::VectorXd& phi_e, const Eigen::VectorXd& phi_u,
                  const Eigen::VectorXd& phi_R, double gamma1, double gamma2, double regularization) {
    const Eigen::Index n = phi_e.size() + phi_u.size();
    if (F.rows() != n || F.cols() != n) throw DimensionError("update_gains: F must be (2 n_A) x (2 n_A)");
    Eigen::VectorXd psi(n);
    psi << phi_e, phi_u;
    kernels::blend_outer({F.data(), static_cast<std::size_t>(F.size())}, view(psi), gamma1);

    for (int attempt = 0; attempt < 64 && min_cholesky_pivot(F) < regularization; ++attempt)
        F.diagonal().array() += regularization * std::ldexp(1.0, attempt);

    f += gamma2 * (phi_R.squaredNorm() - f);
}

ProjectionResult project_A(const Eigen::VectorXd& theta_A, const ProjectionConfig& cfg) {
    ProjectionResult out{theta_A, false};
    auto stable = [&](const Eigen::VectorXd& th) {
        std::vector<double> c(static_cast<std::size_t>(th.size()) + 1);
        c[0] = 1.0;
        for (Eigen::Index i = 0; i < th.size(); ++i) c[static_cast<std::size_t>(i) + 1] = -th[i];
        return lti::is_schur_stable(lti::Polynomial(std::move(c)), cfg.schur_margin);
    };
    if (!theta_A.allFinite()) {
        out.value.setZero();
        out.fired = true;
        return out;
    }
    // Each pass scales every root by shrink_rho. Passes that provably leave a
    // root on or outside the unit circle are applied in one go.
    const double log_rho = std::log(cfg.shrink_rho);
    const double skip = std::floor(log_root_radius_lower(theta_A) / -log_rho);
    int iter = 0;
    if (skip >= 1.0) {
        const double passes = std::min(skip, 100000.0);
        for (Eigen::Index i = 0; i < out.value.size(); ++i) {
            const double mag = std::log(std::abs(out.value[i])) + static_cast<double>(i + 1) * passes * log_rho;
            out.value[i] = std::copysign(std::exp(mag), out.value[i]);
        }
        iter = static_cast<int>(passes);
        out.fired = true;
    }
    for (; iter < 100000 && !stable(out.value); ++iter) {
        double scale = cfg.shrink_rho;
        for (Eigen::Index i = 0; i < out.value.size(); ++i) {
            out.value[i] *= scale;
            scale *= cfg.shrink_rho;
        }
        out.fired = true;
    }
    if (!stable(out.value)) out.value.setZero();
    return out;
}

ProjectionResult project_B(const Eigen::VectorXd& theta_B, std::span<const double> omegas, double T,
                           const ProjectionConfig& cfg) {
    ProjectionResult out{theta_B, false};
    if (out.value.size() == 0 || omegas.empty()) return out;
    const double kick = cfg.b_floor * (1.0 + cfg.eta);

    if (!out.value.allFinite() || (out.value.array() == 0.0).all()) {
        out.value.setZero();
        out.value[0] = kick;
        out.fired = true;
        return out;
    }

    Eigen::VectorXd m = b_magnitudes(out.value, omegas, T);
    if (m.minCoeff() == 0.0) {
        // exact zero at a compensation frequency: nudge b_1 off it first
        out.value[0] += kick;
        out.fired = true;
        m = b_magnitudes(out.value, omegas, T);
    }

    bool ceiling_active = false;
    double down = 1.0;
    for (std::size_t h = 0; h < omegas.size(); ++h) {
        const auto ceil = cfg.b_ceil(h);
        if (ceil && m[static_cast<Eigen::Index>(h)] > *ceil) {
            down = std::min(down, *ceil / ((1.0 + cfg.eta) * m[static_cast<Eigen::Index>(h)]));
            ceiling_active = true;
        }
    }
    if (ceiling_active) {
        out.value *= down;
        m *= down;
        out.fired = true;
    }

    const double lowest = m.minCoeff();
    if (lowest < cfg.b_floor) {
        out.value *= kick / lowest;
        out.fired = true;
    }
    return out;
}

std::vector<bool> check_assumption_H(const Eigen::VectorXd& theta_B_hat, const lti::Polynomial& true_B,
                                     std::span<const double> omegas, double T) {
    std::vector<double> c(static_cast<std::size_t>(theta_B_hat.size()) + 1, 0.0);
    for (Eigen::Index i = 0; i < theta_B_hat.size(); ++i) c[static_cast<std::size_t>(i) + 1] = theta_B_hat[i];
    const lti::Polynomial b_hat(std::move(c));
    std::vector<bool> out;
    out.reserve(omegas.size());
    for (double w : omegas) {
        const std::complex<double> est = b_hat.evaluate(w * T);
        if (std::abs(est) == 0.0) {
            out.push_back(false);
            continue;
        }
        out.push_back((true_B.evaluate(w * T) / est).real() > 0.0);
    }
    return out;
}

PaaResult paa_step(EstimatorState& est, const RegressorBank& bank, const Eigen::VectorXd& phi_R, double e,
                   double gamma1, double gamma2, const EstimatorConfig& cfg, std::span<const double> omegas, double T) {
    if (!std::isfinite(e)) throw NumericFault("paa_step: measured error is not finite", est.k);
    const EstimatorState backup = est;
    PaaResult result;
    try {
        result.epsilon0 = e - predict(est, bank, phi_R);

        const Eigen::Index na = est.theta_A.size();
        Eigen::VectorXd psi(2 * na);
        psi << bank.phi_e(), bank.phi_u();

        Eigen::VectorXd step_ab;
        double f_used = est.f;
        if (cfg.timing == GainTiming::Updated) {
            update_gains(est.F, est.f, bank.phi_e(), bank.phi_u(), phi_R, gamma1, gamma2, cfg.regularization);
            step_ab = est.F.llt().solve(psi);
            f_used = est.f;
        } else {
            step_ab = est.F.llt().solve(psi);
            update_gains(est.F, est.f, bank.phi_e(), bank.phi_u(), phi_R, gamma1, gamma2, cfg.regularization);
        }
        step_ab *= gamma1 * result.epsilon0;
        Eigen::VectorXd raw_A = est.recursion_A() + step_ab.head(na);
        Eigen::VectorXd raw_B = est.recursion_B() + step_ab.tail(na);
        est.theta_M += (gamma2 / f_used * result.epsilon0) * phi_R;

        if (!raw_A.allFinite() || !raw_B.allFinite() || !all_finite(est))
            throw NumericFault("paa_step: update produced a non-finite value", backup.k);

        auto pa = project_A(raw_A, cfg.projection);
        est.theta_A = std::move(pa.value);
        result.projected_A = pa.fired;
        auto pb = project_B(raw_B, omegas, T, cfg.projection);
        est.theta_B = std::move(pb.value);
        result.projected_B = pb.fired;
        if (cfg.project_recursion) {
            est.raw_A = est.theta_A;
            est.raw_B = est.theta_B;
        } else {
            est.raw_A = std::move(raw_A);
            est.raw_B = std::move(raw_B);
        }
        ++est.k;
    } catch (...) {
        est = backup;
        throw;
    }
    return result;
}

ParameterAdapter::ParameterAdapter(EstimatorConfig cfg, std::vector<double> omegas, double T)
    : cfg_(std::move(cfg)), omegas_(std::move(omegas)), T_(T),
      state_(EstimatorState::initial(cfg_.n_a, omegas_.size(), cfg_.f0)) {
    if (cfg_.n_a == 0) throw SpecValidationError("estimator order n_A must be >= 1");
    cfg_.gamma1.validate();
    cfg_.gamma2.validate();
    cfg_.projection.validate(omegas_.size());
    state_.theta_B = project_B(state_.theta_B, omegas_, T_, cfg_.projection).value;
}

PaaResult ParameterAdapter::step(const RegressorBank& bank, const Eigen::VectorXd& phi_R, double e) {
    const std::int64_t next = state_.k + 1;
    return paa_step(state_, bank, phi_R, e, cfg_.gamma1(next), cfg_.gamma2(next), cfg_, omegas_, T_);
}

} // namespace dafc
