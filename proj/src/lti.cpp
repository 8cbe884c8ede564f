#include "dafc/lti.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "dafc/error.hpp"

namespace dafc::lti {

Polynomial::Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) throw SpecValidationError("polynomial needs at least one coefficient");
    for (double c : coeffs_)
        if (!std::isfinite(c)) throw SpecValidationError("polynomial coefficient is not finite");
}

std::complex<double> Polynomial::evaluate(double omega_T) const noexcept {
    // Horner in x = exp(-j omega_T)
    const std::complex<double> x = std::polar(1.0, -omega_T);
    std::complex<double> acc{0.0, 0.0};
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
    return acc;
}

Polynomial operator*(const Polynomial& lhs, const Polynomial& rhs) {
    std::vector<double> out(lhs.coeffs_.size() + rhs.coeffs_.size() - 1, 0.0);
    for (std::size_t i = 0; i < lhs.coeffs_.size(); ++i)
        for (std::size_t j = 0; j < rhs.coeffs_.size(); ++j) out[i + j] += lhs.coeffs_[i] * rhs.coeffs_[j];
    return Polynomial(std::move(out));
}

TransferFunction TransferFunction::make(std::vector<double> a, std::vector<double> b) {
    TransferFunction tf{Polynomial(std::move(a)), Polynomial(std::move(b))};
    if (tf.a[0] != 1.0) throw SpecValidationError("denominator A must be monic (a_0 == 1)");
    if (tf.b[0] != 0.0) throw SpecValidationError("numerator B must have a zero constant term (one-sample delay)");
    if (tf.a.degree() != tf.b.degree())
        throw SpecValidationError("deg A (" + std::to_string(tf.a.degree()) + ") must equal deg B (" +
                                  std::to_string(tf.b.degree()) + ")");
    return tf;
}

double RotationBlock::operator()(int row, int col) const {
    const double c = z_.real();
    const double s = z_.imag();
    if (row == 0) return col == 0 ? c : s;
    return col == 0 ? -s : c;
}

void BlockDiagTransform::apply(std::span<const double> x, std::span<double> out) const {
    if (x.size() != 2 * blocks_.size() || out.size() != x.size())
        throw DimensionError("block transform: vector length must be 2n");
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        const double c = blocks_[i].value().real();
        const double s = blocks_[i].value().imag();
        const double x0 = x[2 * i];
        const double x1 = x[2 * i + 1];
        out[2 * i] = c * x0 + s * x1;
        out[2 * i + 1] = -s * x0 + c * x1;
    }
}

void BlockDiagTransform::apply_transposed(std::span<const double> x, std::span<double> out) const {
    if (x.size() != 2 * blocks_.size() || out.size() != x.size())
        throw DimensionError("block transform: vector length must be 2n");
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        const double c = blocks_[i].value().real();
        const double s = blocks_[i].value().imag();
        const double x0 = x[2 * i];
        const double x1 = x[2 * i + 1];
        out[2 * i] = c * x0 - s * x1;
        out[2 * i + 1] = s * x0 + c * x1;
    }
}

BlockDiagTransform operator*(const BlockDiagTransform& lhs, const BlockDiagTransform& rhs) {
    if (lhs.size() != rhs.size()) throw DimensionError("block transform product: block counts differ");
    std::vector<RotationBlock> out;
    out.reserve(lhs.size());
    for (std::size_t i = 0; i < lhs.size(); ++i) out.push_back(lhs.blocks_[i] * rhs.blocks_[i]);
    return BlockDiagTransform(std::move(out));
}

Filter::Filter(Polynomial num, Polynomial den) : num_(std::move(num)), den_(std::move(den)) {
    if (!den_.is_monic()) throw SpecValidationError("filter denominator must be monic");
    inputs_.assign(num_.degree(), 0.0);
    outputs_.assign(den_.degree(), 0.0);
}

void Filter::reset() {
    std::fill(inputs_.begin(), inputs_.end(), 0.0);
    std::fill(outputs_.begin(), outputs_.end(), 0.0);
    in_head_ = out_head_ = 0;
}

double Filter::step(double x) {
    if (!std::isfinite(x)) throw NumericFault("filter input is not finite");
    const auto nc = num_.coeffs();
    const auto dc = den_.coeffs();

    // ring slot (head + i - 1) % size holds the sample i steps back
    double y = nc[0] * x;
    const std::size_t ni = inputs_.size();
    for (std::size_t i = 1; i <= ni; ++i) y += nc[i] * inputs_[(in_head_ + i - 1) % ni];
    const std::size_t no = outputs_.size();
    for (std::size_t i = 1; i <= no; ++i) y -= dc[i] * outputs_[(out_head_ + i - 1) % no];
    if (!std::isfinite(y)) throw NumericFault("filter state diverged to a non-finite value");

    if (ni > 0) {
        in_head_ = (in_head_ + ni - 1) % ni;
        inputs_[in_head_] = x;
    }
    if (no > 0) {
        out_head_ = (out_head_ + no - 1) % no;
        outputs_[out_head_] = y;
    }
    return y;
}

namespace {

void check_frequency(double omega, double T) {
    const double wT = omega * T;
    if (!(T > 0.0) || !(wT > 0.0) || !(wT < std::numbers::pi))
        throw FrequencyRangeError("omega*T = " + std::to_string(wT) + " outside (0, pi)");
}

FreqPoint to_point(double omega, std::complex<double> z) {
    return {omega, std::abs(z), std::arg(z)};
}

void check_frequency_set(std::span<const double> omegas, double T) {
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        const double wT = omegas[i] * T;
        if (!(T > 0.0) || !(wT > 0.0) || !(wT < std::numbers::pi))
            throw SpecValidationError("frequency " + std::to_string(i) + " outside (0, pi/T)");
        for (std::size_t j = 0; j < i; ++j)
            if (omegas[j] == omegas[i]) throw SpecValidationError("duplicate compensation frequency");
    }
}

} // namespace

FreqPoint freq_response(const Polynomial& p, double omega, double T) {
    check_frequency(omega, T);
    return to_point(omega, p.evaluate(omega * T));
}

FreqPoint freq_response(const TransferFunction& tf, double omega, double T) {
    check_frequency(omega, T);
    return to_point(omega, tf.b.evaluate(omega * T) / tf.a.evaluate(omega * T));
}

BlockDiagTransform build_transform(const Polynomial& p, std::span<const double> omegas, double T) {
    check_frequency_set(omegas, T);
    std::vector<RotationBlock> blocks;
    blocks.reserve(omegas.size());
    for (double w : omegas) blocks.emplace_back(p.evaluate(w * T));
    return BlockDiagTransform(std::move(blocks));
}

BlockDiagTransform build_transform(const TransferFunction& tf, std::span<const double> omegas, double T) {
    check_frequency_set(omegas, T);
    std::vector<RotationBlock> blocks;
    blocks.reserve(omegas.size());
    for (double w : omegas) blocks.emplace_back(tf.b.evaluate(w * T) / tf.a.evaluate(w * T));
    return BlockDiagTransform(std::move(blocks));
}

bool is_schur_stable(const Polynomial& a, double margin) {
    const auto c = a.coeffs();
    if (c[0] == 0.0) return false;
    const std::size_t n = c.size() - 1;

    // Substituting z -> z / r with r = 1/(1+margin) maps "roots inside radius r"
    // to "roots inside the unit circle"; coefficient i scales by (1+margin)^i.
    std::vector<double> k(c.begin(), c.end());
    double scale = 1.0;
    for (std::size_t i = 0; i <= n; ++i) {
        k[i] = c[i] / c[0] * scale;
        scale *= 1.0 + margin;
    }

    std::vector<double> next(n + 1);
    for (std::size_t m = n; m >= 1; --m) {
        const double refl = k[m];
        if (!std::isfinite(refl) || std::abs(refl) >= 1.0) return false;
        const double denom = 1.0 - refl * refl;
        for (std::size_t i = 1; i < m; ++i) next[i] = (k[i] - refl * k[m - i]) / denom;
        for (std::size_t i = 1; i < m; ++i) k[i] = next[i];
    }
    return true;
}

} // namespace dafc::lti
