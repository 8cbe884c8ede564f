// Compiled with -mavx2 -mfma; only reached through the runtime dispatcher
// after the CPU has been checked.

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dafc/kernels.hpp"
#include "dafc/phase.hpp"

namespace dafc::kernels::avx2 {
namespace {

double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Lane phasors are re-anchored from exact phases this often (in samples) so
// the rotation recurrence never accumulates more than a few hundred roundings.
constexpr std::size_t kAnchorSpan = 256;

} // namespace

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
    const std::size_t n = a.size();
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i + 4), _mm256_loadu_pd(b.data() + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i), acc0);
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void blend_outer(std::span<double> F, std::span<const double> psi, double gamma) {
    const std::size_t n = psi.size();
    if (F.size() != n * n) throw std::invalid_argument("blend_outer: matrix size mismatch");
    const __m256d keep = _mm256_set1_pd(1.0 - gamma);
    for (std::size_t r = 0; r < n; ++r) {
        const double gr = gamma * psi[r];
        const __m256d g = _mm256_set1_pd(gr);
        double* row = F.data() + r * n;
        std::size_t c = 0;
        for (; c + 4 <= n; c += 4) {
            const __m256d v = _mm256_mul_pd(keep, _mm256_loadu_pd(row + c));
            _mm256_storeu_pd(row + c, _mm256_fmadd_pd(g, _mm256_loadu_pd(psi.data() + c), v));
        }
        for (; c < n; ++c) row[c] = (1.0 - gamma) * row[c] + gr * psi[c];
    }
}

std::complex<double> bin_projection(std::span<const double> x, double cycles, std::int64_t k0) {
    const std::size_t n = x.size();
    const double step_angle = phase_radians(cycles, 4);
    const __m256d wr = _mm256_set1_pd(std::cos(step_angle));
    const __m256d wi = _mm256_set1_pd(-std::sin(step_angle));

    __m256d acc_re = _mm256_setzero_pd();
    __m256d acc_im = _mm256_setzero_pd();
    std::size_t i = 0;
    while (i + 4 <= n) {
        alignas(32) double cr_init[4];
        alignas(32) double ci_init[4];
        for (int l = 0; l < 4; ++l) {
            const double angle = phase_radians(cycles, k0 + static_cast<std::int64_t>(i) + l);
            cr_init[l] = std::cos(angle);
            ci_init[l] = -std::sin(angle);
        }
        __m256d cr = _mm256_load_pd(cr_init);
        __m256d ci = _mm256_load_pd(ci_init);
        const std::size_t stop = std::min(n, i + kAnchorSpan);
        for (; i + 4 <= stop; i += 4) {
            const __m256d v = _mm256_loadu_pd(x.data() + i);
            acc_re = _mm256_fmadd_pd(v, cr, acc_re);
            acc_im = _mm256_fmadd_pd(v, ci, acc_im);
            const __m256d nr = _mm256_fmsub_pd(cr, wr, _mm256_mul_pd(ci, wi));
            const __m256d ni = _mm256_fmadd_pd(cr, wi, _mm256_mul_pd(ci, wr));
            cr = nr;
            ci = ni;
        }
    }
    double re = hsum(acc_re);
    double im = hsum(acc_im);
    for (; i < n; ++i) {
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
            const double acc = dot(x.subspan(m - 1 - i, count), x.subspan(m - 1 - j, count));
            out[i * m + j] = acc / static_cast<double>(count);
            out[j * m + i] = out[i * m + j];
        }
    }
}

} // namespace dafc::kernels::avx2
