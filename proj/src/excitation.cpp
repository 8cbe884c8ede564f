#include "dafc/excitation.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "dafc/error.hpp"
#include "dafc/kernels.hpp"
#include "dafc/phase.hpp"

namespace dafc {

namespace {

constexpr std::uint32_t kDegree = 31;
constexpr std::uint64_t kPoly = (std::uint64_t{1} << 31) | (std::uint64_t{1} << 3) | 1u;  // x^31 + x^3 + 1
constexpr std::uint32_t kMask = (std::uint32_t{1} << kDegree) - 1;
constexpr std::uint32_t kTopBit = std::uint32_t{1} << (kDegree - 1);

std::uint32_t mulmod(std::uint32_t a, std::uint32_t b) {
    // carry-less product, then reduce modulo the characteristic polynomial
    std::uint64_t prod = 0;
    for (std::uint32_t i = 0; i < kDegree; ++i)
        if ((b >> i) & 1u) prod ^= std::uint64_t{a} << i;
    for (int bit = 2 * kDegree - 2; bit >= static_cast<int>(kDegree); --bit)
        if ((prod >> bit) & 1u) prod ^= kPoly << (bit - kDegree);
    return static_cast<std::uint32_t>(prod);
}

std::uint32_t shift_once(std::uint32_t s) {
    std::uint64_t t = std::uint64_t{s} << 1;
    if (t & (std::uint64_t{1} << kDegree)) t ^= kPoly;
    return static_cast<std::uint32_t>(t);
}

bool near(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b)); }

} // namespace

double AmplitudeSchedule::operator()(std::int64_t k) const {
    if (decay_steps <= 0.0) return initial;
    return floor + (initial - floor) * std::exp(-static_cast<double>(k) / decay_steps);
}

std::vector<std::string> ExcitationSpec::violations(const DisturbanceSpec& dist) const {
    std::vector<std::string> out;
    if (!(alpha_u.initial >= 0.0) || !(alpha_u.floor >= 0.0))
        out.push_back("excitation.amplitude must be >= 0 (a fixed or variable positive gain)");
    if (alpha_u.decay_steps < 0.0) out.push_back("excitation.decay_steps must be >= 0");
    if (mode != ExcitationMode::Shaped) return out;

    if (delta_u.empty()) out.push_back("excitation.delta_u needs at least one frequency shift in shaped mode");
    const auto omegas = dist.omegas();
    const double nyquist = std::numbers::pi / dist.sample_period();
    for (std::size_t j = 0; j < delta_u.size(); ++j) {
        const double d = delta_u[j];
        const std::string name = "excitation.delta_u[" + std::to_string(j) + "]";
        if (!(d > 0.0) || !(d < omegas.front())) {
            out.push_back(name + " must satisfy 0 < delta_u < min omega_i (a small shift around the compensation "
                                 "frequencies)");
            continue;
        }
        for (std::size_t jj = 0; jj < j; ++jj)
            if (near(delta_u[jj], d)) out.push_back(name + " duplicates an earlier shift");
        for (std::size_t i = 0; i < omegas.size(); ++i) {
            for (double side : {omegas[i] + d, omegas[i] - d}) {
                if (!(side < nyquist))
                    out.push_back(name + ": sideband of harmonic " + std::to_string(i + 1) + " reaches Nyquist");
                for (std::size_t h = 0; h < omegas.size(); ++h)
                    if (near(side, omegas[h]))
                        out.push_back(name + ": sideband of harmonic " + std::to_string(i + 1) +
                                      " collides with compensation frequency " + std::to_string(h + 1) +
                                      " (excitation would alias into the disturbance subspace)");
            }
        }
    }
    return out;
}

std::size_t ExcitationSpec::pe_order_bound(const DisturbanceSpec& dist) const {
    switch (mode) {
    case ExcitationMode::Off: return 0;
    case ExcitationMode::Prbs: return std::numeric_limits<std::size_t>::max();
    case ExcitationMode::Shaped: return 2 * dist.size() * delta_u.size();
    }
    return 0;
}

double excitation_direct(const ExcitationSpec& spec, const DisturbanceSpec& dist, std::int64_t k) {
    const double gain = spec.alpha_u(k);
    if (gain == 0.0) return 0.0;
    const double T = dist.sample_period();
    double sum = 0.0;
    for (double d : spec.delta_u) {
        const double shift = phase_cycles(d * T / kTwoPi, k);
        for (std::size_t i = 0; i < dist.size(); ++i) {
            const double base = phase_cycles(dist.cycles(i), k);
            sum += std::sin(kTwoPi * (base + shift)) + std::sin(kTwoPi * (base - shift));
        }
    }
    return 0.5 * gain * sum;
}

double excitation_fast(const ExcitationSpec& spec, const Eigen::VectorXd& phi_R, std::int64_t k, double T) {
    const double gain = spec.alpha_u(k);
    if (gain == 0.0) return 0.0;
    double sines = 0.0;
    for (Eigen::Index i = 0; i < phi_R.size(); i += 2) sines += phi_R[i];
    double carrier = 0.0;
    for (double d : spec.delta_u) carrier += std::cos(phase_radians(d * T / kTwoPi, k));
    return gain * carrier * sines;
}

std::uint32_t Prbs::seed_state(std::uint64_t seed) {
    // splitmix64 finalizer; a sparse register (small seeds) takes thousands of
    // steps to stop looking biased under a trinomial feedback
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    z ^= z >> 31;
    return static_cast<std::uint32_t>(z % kMask) + 1u;
}

Prbs::Prbs(std::uint64_t seed, double amplitude) : state_(seed_state(seed)), amplitude_(amplitude) {}

double Prbs::next() {
    const double out = (state_ & kTopBit) ? amplitude_ : -amplitude_;
    state_ = shift_once(state_);
    return out;
}

double Prbs::at(std::uint64_t seed, double amplitude, std::int64_t k) {
    if (k < 0) throw std::invalid_argument("prbs: negative index");
    std::uint64_t e = static_cast<std::uint64_t>(k) % kMask;
    std::uint32_t power = 1;   // x^0
    std::uint32_t base = 2;    // x^1
    while (e) {
        if (e & 1u) power = mulmod(power, base);
        base = mulmod(base, base);
        e >>= 1;
    }
    const std::uint32_t state = mulmod(seed_state(seed), power);
    return (state & kTopBit) ? amplitude : -amplitude;
}

double prbs(std::uint64_t seed, double amplitude, std::int64_t k) { return Prbs::at(seed, amplitude, k); }

ExcitationSource::ExcitationSource(ExcitationSpec spec, double T)
    : spec_(std::move(spec)), T_(T), prbs_(spec_.prbs_seed, 1.0) {}

double ExcitationSource::next(std::int64_t k, const Eigen::VectorXd& phi_R) {
    switch (spec_.mode) {
    case ExcitationMode::Off: return 0.0;
    case ExcitationMode::Shaped: return excitation_fast(spec_, phi_R, k, T_);
    case ExcitationMode::Prbs: return spec_.alpha_u(k) * prbs_.next();
    }
    return 0.0;
}

PeResult pe_order(std::span<const double> window, std::size_t m, double tol) {
    if (m == 0) throw std::invalid_argument("pe_order: order must be >= 1");
    if (window.size() < 10 * m)
        throw InsufficientDataError("pe_order: window of " + std::to_string(window.size()) +
                                    " samples is shorter than 10 * order = " + std::to_string(10 * m));
    Eigen::MatrixXd gram(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    kernels::lagged_gram(window, m, {gram.data(), m * m});
    const double power = gram(0, 0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    PeResult r;
    r.min_eigenvalue = std::max(0.0, eig.eigenvalues().minCoeff());
    r.persistent = power > 0.0 && r.min_eigenvalue > tol * power;
    return r;
}

} // namespace dafc
