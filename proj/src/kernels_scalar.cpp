#include "dafc/kernels.hpp"

#include <cmath>
#include <stdexcept>

#include "dafc/phase.hpp"

namespace dafc::kernels::scalar {

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

void blend_outer(std::span<double> F, std::span<const double> psi, double gamma) {
    const std::size_t n = psi.size();
    if (F.size() != n * n) throw std::invalid_argument("blend_outer: matrix size mismatch");
    const double keep = 1.0 - gamma;
    for (std::size_t r = 0; r < n; ++r) {
        const double gr = gamma * psi[r];
        double* row = F.data() + r * n;
        for (std::size_t c = 0; c < n; ++c) row[c] = keep * row[c] + gr * psi[c];
    }
}

std::complex<double> bin_projection(std::span<const double> x, double cycles, std::int64_t k0) {
    double re = 0.0;
    double im = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double angle = phase_radians(cycles, k0 + static_cast<std::int64_t>(i));
        re += x[i] * std::cos(angle);
        im -= x[i] * std::sin(angle);
    }
    return {re, im};
}

void lagged_gram(std::span<const double> x, std::size_t m, std::span<double> out) {
    if (m == 0 || x.size() < m) throw std::invalid_argument("lagged_gram: window shorter than order");
    if (out.size() != m * m) throw std::invalid_argument("lagged_gram: output size mismatch");
    const std::size_t count = x.size() - m + 1;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i; j < m; ++j) {
            // entry (i, j) pairs lag i with lag j over the same time indices
            double acc = 0.0;
            for (std::size_t t = m - 1; t < x.size(); ++t) acc += x[t - i] * x[t - j];
            out[i * m + j] = acc / static_cast<double>(count);
            out[j * m + i] = out[i * m + j];
        }
    }
}

} // namespace dafc::kernels::scalar
