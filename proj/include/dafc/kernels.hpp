#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference in
// `kernels::scalar` and, on x86-64 builds, an AVX2/FMA variant in
// `kernels::avx2`. The unqualified entry points dispatch at runtime to the
// active backend; both variants are equivalence-tested against each other.
//
// Results of the two backends agree to rounding, not bit-for-bit: traces are
// reproducible for a fixed backend only.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace dafc::kernels {

enum class Backend { Scalar, Avx2 };

bool avx2_available() noexcept;

/// Backend chosen at first use: AVX2 when the CPU supports AVX2+FMA, unless
/// the environment variable DAFC_KERNELS=scalar forces the reference path.
Backend active_backend() noexcept;

/// Throws std::invalid_argument when the requested backend is not usable here.
void set_backend(Backend backend);

std::string_view backend_name(Backend backend) noexcept;

double dot(std::span<const double> a, std::span<const double> b);

/// F <- F + gamma * (psi psi^T - F), F an n x n matrix in contiguous storage.
/// Layout-agnostic because psi psi^T is symmetric.
void blend_outer(std::span<double> F, std::span<const double> psi, double gamma);

/// sum_i x[i] * exp(-j 2 pi cycles (k0 + i)).
std::complex<double> bin_projection(std::span<const double> x, double cycles, std::int64_t k0);

/// Time-averaged Gram matrix of m-length delay vectors [x(t), x(t-1), ...,
/// x(t-m+1)] over every t with a full history. `out` is m x m, symmetric.
void lagged_gram(std::span<const double> x, std::size_t m, std::span<double> out);

namespace scalar {
double dot(std::span<const double> a, std::span<const double> b);
void blend_outer(std::span<double> F, std::span<const double> psi, double gamma);
std::complex<double> bin_projection(std::span<const double> x, double cycles, std::int64_t k0);
void lagged_gram(std::span<const double> x, std::size_t m, std::span<double> out);
} // namespace scalar

namespace avx2 {
double dot(std::span<const double> a, std::span<const double> b);
void blend_outer(std::span<double> F, std::span<const double> psi, double gamma);
std::complex<double> bin_projection(std::span<const double> x, double cycles, std::int64_t k0);
void lagged_gram(std::span<const double> x, std::size_t m, std::span<double> out);
} // namespace avx2

} // namespace dafc::kernels
