#pragma once

#include <cstddef>
#include <string_view>

namespace tnid::kernels {

// Dense double-precision primitives behind the contraction engine and the
// optimizer. Two implementations ship: a scalar reference and an AVX2+FMA
// variant compiled only for x86-64; the active one is chosen at runtime
// from cpuid (TNID_KERNELS=scalar|avx2 overrides). Per output element both
// variants accumulate in the same k-ascending order; the AVX2 path fuses
// multiply-add, so cross-backend results agree to rounding, not bit-exactly.
struct Backend {
    const char* name;
    // c (m x n) = a (m x k) * b (k x n), row-major; adds into c when accumulate.
    void (*matmul)(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n, bool accumulate);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // x *= alpha
    void (*scale)(double alpha, double* x, std::size_t n);
    double (*dot)(const double* x, const double* y, std::size_t n);
};

const Backend& scalar_backend();

// True when the AVX2 variant is compiled in and the CPU supports AVX2+FMA.
bool avx2_available();
const Backend& avx2_backend();

const Backend& active();
// "scalar", "avx2" or "auto". Throws tnid::ConfigError for unknown or
// unavailable backends. Not intended for use while worker threads run.
void set_active(std::string_view name);

inline void matmul(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    active().matmul(a, b, c, m, k, n, accumulate);
}

inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
    active().axpy(alpha, x, y, n);
}

inline void scale(double alpha, double* x, std::size_t n) { active().scale(alpha, x, n); }

inline double dot(const double* x, const double* y, std::size_t n) {
    return active().dot(x, y, n);
}

} // namespace tnid::kernels
