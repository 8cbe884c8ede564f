#include "dafc/regressor.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "dafc/error.hpp"
#include "dafc/phase.hpp"

namespace dafc {

namespace {

// Smallest denominator q <= max_den with |x - p/q| <= tol / q, from the
// continued-fraction convergents of x.
std::optional<std::int64_t> rational_denominator(double x, std::int64_t max_den, double tol) {
    x = x - std::floor(x);
    std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double r = x;
    for (int iter = 0; iter < 64; ++iter) {
        const double a_real = std::floor(r);
        if (a_real > 1e15) break;
        const auto a = static_cast<std::int64_t>(a_real);
        const std::int64_t p2 = a * p1 + p0;
        const std::int64_t q2 = a * q1 + q0;
        if (q2 > max_den) break;
        if (std::abs(x * static_cast<double>(q2) - static_cast<double>(p2)) <= tol) return q2;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        const double frac = r - a_real;
        if (frac <= 0.0) break;
        r = 1.0 / frac;
    }
    return std::nullopt;
}

} // namespace

std::optional<std::int64_t> common_period(std::span<const double> cycles, std::int64_t max_period, double tol) {
    std::int64_t n = 1;
    for (double c : cycles) {
        const auto q = rational_denominator(c, max_period, tol);
        if (!q) return std::nullopt;
        n = std::lcm(n, *q);
        if (n > max_period) return std::nullopt;
    }
    for (double c : cycles) {
        const double x = c * static_cast<double>(n);
        if (std::abs(x - std::round(x)) > tol * static_cast<double>(n)) return std::nullopt;
    }
    return n;
}

DisturbanceSpec::DisturbanceSpec(std::vector<double> omegas, std::vector<double> amps, std::vector<double> phases,
                                 double T)
    : omegas_(std::move(omegas)), amps_(std::move(amps)), phases_(std::move(phases)), T_(T) {
    if (!(T_ > 0.0) || !std::isfinite(T_)) throw SpecValidationError("sample period must be positive");
    if (omegas_.empty()) throw SpecValidationError("at least one compensation frequency is required");
    if (amps_.size() != omegas_.size() || phases_.size() != omegas_.size())
        throw SpecValidationError("frequency, amplitude and phase lists differ in length");
    for (std::size_t i = 0; i < omegas_.size(); ++i) {
        const double wT = omegas_[i] * T_;
        if (!(wT > 0.0) || !(wT < std::numbers::pi))
            throw SpecValidationError("frequency " + std::to_string(i + 1) + " outside (0, pi/T)");
        if (i > 0 && !(omegas_[i] > omegas_[i - 1]))
            throw SpecValidationError("frequencies must be strictly increasing");
        if (!(amps_[i] >= 0.0) || !std::isfinite(amps_[i]))
            throw SpecValidationError("amplitude " + std::to_string(i + 1) + " must be finite and >= 0");
        if (!std::isfinite(phases_[i])) throw SpecValidationError("phase " + std::to_string(i + 1) + " is not finite");
        cycles_.push_back(wT / kTwoPi);
    }
    period_ = common_period(cycles_);
}

DisturbanceSpec DisturbanceSpec::frequencies_only(std::vector<double> omegas, double T) {
    const std::size_t n = omegas.size();
    return DisturbanceSpec(std::move(omegas), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), T);
}

Eigen::VectorXd DisturbanceSpec::theta() const {
    Eigen::VectorXd th(2 * size());
    for (std::size_t i = 0; i < size(); ++i) {
        th[2 * i] = amps_[i] * std::cos(phases_[i]);
        th[2 * i + 1] = amps_[i] * std::sin(phases_[i]);
    }
    return th;
}

void phi_R(const DisturbanceSpec& spec, std::int64_t k, std::span<double> out) {
    if (out.size() != 2 * spec.size()) throw DimensionError("phi_R output must have length 2n");
    constexpr std::int64_t kReduceAbove = std::int64_t{1} << 52;
    if (k >= kReduceAbove && spec.period()) k %= *spec.period();
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const double angle = phase_radians(spec.cycles(i), k);
        out[2 * i] = std::sin(angle);
        out[2 * i + 1] = std::cos(angle);
    }
}

Eigen::VectorXd phi_R(const DisturbanceSpec& spec, std::int64_t k) {
    Eigen::VectorXd out(2 * spec.size());
    phi_R(spec, k, std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
    return out;
}

double disturbance_value(const Eigen::VectorXd& theta, const DisturbanceSpec& spec, std::int64_t k) {
    if (static_cast<std::size_t>(theta.size()) != 2 * spec.size())
        throw DimensionError("theta length " + std::to_string(theta.size()) + " != 2n = " +
                             std::to_string(2 * spec.size()));
    return theta.dot(phi_R(spec, k));
}

RegressorBank::RegressorBank(std::size_t n_a)
    : phi_e_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_a))),
      phi_u_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_a))),
      phi_ua_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_a))) {}

void RegressorBank::push(double e, double u, double u_a) {
    if (!std::isfinite(e) || !std::isfinite(u) || !std::isfinite(u_a))
        throw NumericFault("regressor push received a non-finite sample", k_);
    const Eigen::Index n = phi_e_.size();
    if (n > 0) {
        for (Eigen::Index j = n - 1; j > 0; --j) {
            phi_e_[j] = phi_e_[j - 1];
            phi_u_[j] = phi_u_[j - 1];
            phi_ua_[j] = phi_ua_[j - 1];
        }
        phi_e_[0] = e;
        phi_u_[0] = u;
        phi_ua_[0] = u_a;
    }
    ++k_;
}

} // namespace dafc
