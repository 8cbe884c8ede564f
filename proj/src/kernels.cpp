#include "dafc/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace dafc::kernels {

#if !defined(DAFC_WITH_AVX2)
// Non-x86 builds: the avx2 symbols exist so callers link, but are never
// selected because avx2_available() is false.
namespace avx2 {
double dot(std::span<const double> a, std::span<const double> b) { return scalar::dot(a, b); }
void blend_outer(std::span<double> F, std::span<const double> psi, double gamma) {
    scalar::blend_outer(F, psi, gamma);
}
std::complex<double> bin_projection(std::span<const double> x, double cycles, std::int64_t k0) {
    return scalar::bin_projection(x, cycles, k0);
}
void lagged_gram(std::span<const double> x, std::size_t m, std::span<double> out) {
    scalar::lagged_gram(x, m, out);
}
} // namespace avx2
#endif

namespace {

Backend detect() noexcept {
    if (const char* env = std::getenv("DAFC_KERNELS"); env && std::string(env) == "scalar") return Backend::Scalar;
    return avx2_available() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& current() {
    static std::atomic<Backend> backend{detect()};
    return backend;
}

} // namespace

bool avx2_available() noexcept {
#if defined(DAFC_WITH_AVX2)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend active_backend() noexcept { return current().load(std::memory_order_relaxed); }

void set_backend(Backend backend) {
    if (backend == Backend::Avx2 && !avx2_available())
        throw std::invalid_argument("AVX2 kernels are not available on this machine or build");
    current().store(backend, std::memory_order_relaxed);
}

std::string_view backend_name(Backend backend) noexcept {
    return backend == Backend::Avx2 ? "avx2" : "scalar";
}

double dot(std::span<const double> a, std::span<const double> b) {
    return active_backend() == Backend::Avx2 ? avx2::dot(a, b) : scalar::dot(a, b);
}

void blend_outer(std::span<double> F, std::span<const double> psi, double gamma) {
    if (active_backend() == Backend::Avx2)
        avx2::blend_outer(F, psi, gamma);
    else
        scalar::blend_outer(F, psi, gamma);
}

std::complex<double> bin_projection(std::span<const double> x, double cycles, std::int64_t k0) {
    return active_backend() == Backend::Avx2 ? avx2::bin_projection(x, cycles, k0)
                                             : scalar::bin_projection(x, cycles, k0);
}

void lagged_gram(std::span<const double> x, std::size_t m, std::span<double> out) {
    if (active_backend() == Backend::Avx2)
        avx2::lagged_gram(x, m, out);
    else
        scalar::lagged_gram(x, m, out);
}

} // namespace dafc::kernels
