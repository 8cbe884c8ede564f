#pragma once

// Discrete-time polynomial and transfer-function arithmetic in the backward
// shift operator q^-1. A polynomial c_0 + c_1 q^-1 + ... + c_m q^-m is stored
// as its coefficient list [c_0, ..., c_m].

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace dafc::lti {

class Polynomial {
public:
    /// The constant polynomial 1.
    Polynomial() : coeffs_{1.0} {}

    /// Throws SpecValidationError on an empty list or non-finite entries.
    explicit Polynomial(std::vector<double> coeffs);

    std::span<const double> coeffs() const noexcept { return coeffs_; }
    std::size_t degree() const noexcept { return coeffs_.size() - 1; }
    double operator[](std::size_t i) const { return coeffs_.at(i); }

    /// Value with q^-1 replaced by exp(-j omega_T).
    std::complex<double> evaluate(double omega_T) const noexcept;

    bool is_monic() const noexcept { return coeffs_.front() == 1.0; }

    friend Polynomial operator*(const Polynomial& lhs, const Polynomial& rhs);
    friend bool operator==(const Polynomial&, const Polynomial&) = default;

private:
    std::vector<double> coeffs_;
};

/// R = B / A with A monic, B strictly proper by one sample, deg A == deg B.
struct TransferFunction {
    Polynomial a;
    Polynomial b;

    /// Validates the monic / one-sample-delay / equal-degree invariants.
    static TransferFunction make(std::vector<double> a, std::vector<double> b);

    std::size_t order() const noexcept { return a.degree(); }
};

struct FreqPoint {
    double omega = 0.0;
    double magnitude = 0.0;
    double phase = 0.0;  ///< radians in (-pi, pi]

    std::complex<double> value() const { return std::polar(magnitude, phase); }
};

/// 2x2 scaled rotation [[m cos d, m sin d], [-m sin d, m cos d]].
///
/// Stored as the complex number m exp(j d); the matrix form is only a view,
/// so the equal-diagonal / antisymmetric structure holds by construction.
/// Matrix products of blocks correspond to complex products.
class RotationBlock {
public:
    RotationBlock() = default;
    explicit RotationBlock(std::complex<double> z) : z_(z) {}
    static RotationBlock from_polar(double magnitude, double phase) { return RotationBlock(std::polar(magnitude, phase)); }
    static RotationBlock identity() { return RotationBlock({1.0, 0.0}); }

    double magnitude() const { return std::abs(z_); }
    double phase() const { return std::arg(z_); }
    std::complex<double> value() const noexcept { return z_; }

    /// Matrix entry (row, col), zero-based.
    double operator()(int row, int col) const;

    RotationBlock transposed() const { return RotationBlock(std::conj(z_)); }

    friend RotationBlock operator*(RotationBlock lhs, RotationBlock rhs) { return RotationBlock(lhs.z_ * rhs.z_); }

private:
    std::complex<double> z_{1.0, 0.0};
};

/// Block-diagonal D_L built from n rotation blocks, acting on regressor-shaped
/// vectors of length 2n.
class BlockDiagTransform {
public:
    BlockDiagTransform() = default;
    explicit BlockDiagTransform(std::vector<RotationBlock> blocks) : blocks_(std::move(blocks)) {}

    std::size_t size() const noexcept { return blocks_.size(); }
    const RotationBlock& block(std::size_t i) const { return blocks_.at(i); }
    std::span<const RotationBlock> blocks() const noexcept { return blocks_; }

    /// D x
    void apply(std::span<const double> x, std::span<double> out) const;
    /// D^T x
    void apply_transposed(std::span<const double> x, std::span<double> out) const;

    friend BlockDiagTransform operator*(const BlockDiagTransform& lhs, const BlockDiagTransform& rhs);

private:
    std::vector<RotationBlock> blocks_;
};

/// Direct-form difference equation
///   den_0 y(k) = sum_i num_i x(k-i) - sum_{i>=1} den_i y(k-i)
/// with den monic. Input and output histories live in rings sized to the
/// polynomial degrees and start at zero.
class Filter {
public:
    Filter() : Filter(Polynomial{}, Polynomial{}) {}
    Filter(Polynomial num, Polynomial den);
    explicit Filter(const TransferFunction& tf) : Filter(tf.b, tf.a) {}

    /// Throws NumericFault on non-finite input or state.
    double step(double x);
    void reset();

    const Polynomial& numerator() const noexcept { return num_; }
    const Polynomial& denominator() const noexcept { return den_; }

private:
    Polynomial num_;
    Polynomial den_;
    std::vector<double> inputs_;   // x(k-1), x(k-2), ... as a ring
    std::vector<double> outputs_;  // y(k-1), y(k-2), ...
    std::size_t in_head_ = 0;
    std::size_t out_head_ = 0;
};

/// Magnitude and phase of p(exp(-j omega T)). Requires 0 < omega T < pi.
FreqPoint freq_response(const Polynomial& p, double omega, double T);
FreqPoint freq_response(const TransferFunction& tf, double omega, double T);

/// Block i built from the response at omegas[i]; frequencies must be
/// distinct and each inside (0, pi/T).
BlockDiagTransform build_transform(const Polynomial& p, std::span<const double> omegas, double T);
BlockDiagTransform build_transform(const TransferFunction& tf, std::span<const double> omegas, double T);

/// True iff every root of the reciprocal polynomial
/// z^n + a_1 z^(n-1) + ... + a_n lies inside |z| < 1/(1 + margin), i.e. every
/// root q of 1 + a_1 q + ... + a_n q^n satisfies |q| > 1 + margin.
/// Step-down (Schur-Cohn / Jury) recursion on reflection coefficients; no
/// roots are computed.
bool is_schur_stable(const Polynomial& a, double margin = 1e-9);

} // namespace dafc::lti
