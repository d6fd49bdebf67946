// AVX2+FMA kernel variants. This translation unit is the only one built
// with -mavx2 -mfma; TNID_COMPILE_AVX2 is set by the build system on
// x86-64 targets. Whether these functions are ever called is decided at
// runtime from cpuid (see kernels.cpp).

#include "tnid/kernels.hpp"

#include "tnid/error.hpp"

#ifdef TNID_COMPILE_AVX2

#include <immintrin.h>

#include <cmath>

namespace tnid::kernels {

namespace {

void matmul_avx2(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        const double* arow = a + i * k;
        std::size_t j = 0;
        // 16-column tiles: accumulators live in registers across the k loop.
        for (; j + 16 <= n; j += 16) {
            __m256d acc0 = accumulate ? _mm256_loadu_pd(crow + j) : _mm256_setzero_pd();
            __m256d acc1 = accumulate ? _mm256_loadu_pd(crow + j + 4) : _mm256_setzero_pd();
            __m256d acc2 = accumulate ? _mm256_loadu_pd(crow + j + 8) : _mm256_setzero_pd();
            __m256d acc3 = accumulate ? _mm256_loadu_pd(crow + j + 12) : _mm256_setzero_pd();
            for (std::size_t p = 0; p < k; ++p) {
                const __m256d va = _mm256_set1_pd(arow[p]);
                const double* brow = b + p * n + j;
                acc0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(brow), acc0);
                acc1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + 4), acc1);
                acc2 = _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + 8), acc2);
                acc3 = _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + 12), acc3);
            }
            _mm256_storeu_pd(crow + j, acc0);
            _mm256_storeu_pd(crow + j + 4, acc1);
            _mm256_storeu_pd(crow + j + 8, acc2);
            _mm256_storeu_pd(crow + j + 12, acc3);
        }
        for (; j + 4 <= n; j += 4) {
            __m256d acc = accumulate ? _mm256_loadu_pd(crow + j) : _mm256_setzero_pd();
            for (std::size_t p = 0; p < k; ++p) {
                acc = _mm256_fmadd_pd(_mm256_set1_pd(arow[p]),
                                      _mm256_loadu_pd(b + p * n + j), acc);
            }
            _mm256_storeu_pd(crow + j, acc);
        }
        for (; j < n; ++j) {
            double s = accumulate ? crow[j] : 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                s = std::fma(arow[p], b[p * n + j], s);
            }
            crow[j] = s;
        }
    }
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i,
                         _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) {
        y[i] = std::fma(alpha, x[i], y[i]);
    }
}

void scale_avx2(double alpha, double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) {
        x[i] *= alpha;
    }
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
    }
    double lanes[4];
    _mm256_storeu_pd(lanes, acc);
    double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (; i < n; ++i) {
        s = std::fma(x[i], y[i], s);
    }
    return s;
}

} // namespace

bool avx2_available() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

const Backend& avx2_backend() {
    static const Backend backend{"avx2", matmul_avx2, axpy_avx2, scale_avx2, dot_avx2};
    return backend;
}

} // namespace tnid::kernels

#else // !TNID_COMPILE_AVX2

namespace tnid::kernels {

bool avx2_available() { return false; }

const Backend& avx2_backend() {
    throw ConfigError("avx2 kernels were not compiled for this target");
}

} // namespace tnid::kernels

#endif
