#include "tnid/kernels.hpp"

#include "tnid/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace tnid;

namespace {

std::vector<double> random_buffer(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) {
        x = 2.0 * rng.uniform() - 1.0;
    }
    return v;
}

// Accumulation-scaled bound: the backends agree up to FMA rounding.
double matmul_tolerance(std::size_t k) {
    return 16.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(k + 1);
}

} // namespace

TEST_SUITE("kernels") {

TEST_CASE("scalar matmul matches a hand-rolled reference") {
    Rng rng(11);
    const std::size_t m = 3, k = 4, n = 5;
    const auto a = random_buffer(m * k, rng);
    const auto b = random_buffer(k * n, rng);
    std::vector<double> c(m * n, 7.0);
    kernels::scalar_backend().matmul(a.data(), b.data(), c.data(), m, k, n, false);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double want = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                want += a[i * k + p] * b[p * n + j];
            }
            CHECK(c[i * n + j] == doctest::Approx(want).epsilon(1e-14));
        }
    }
}

TEST_CASE("matmul accumulate adds into the output") {
    Rng rng(12);
    const auto a = random_buffer(4, rng);
    const auto b = random_buffer(4, rng);
    std::vector<double> base(4, 0.0);
    kernels::scalar_backend().matmul(a.data(), b.data(), base.data(), 2, 2, 2, false);
    std::vector<double> acc = base;
    kernels::scalar_backend().matmul(a.data(), b.data(), acc.data(), 2, 2, 2, true);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(acc[i] == doctest::Approx(2.0 * base[i]));
    }
}

TEST_CASE("avx2 backend matches scalar across shapes") {
    if (!kernels::avx2_available()) {
        MESSAGE("avx2 unavailable; equivalence covered on scalar only");
        return;
    }
    Rng rng(13);
    const std::size_t shapes[][3] = {{1, 1, 1},  {1, 7, 3},  {5, 1, 17}, {4, 9, 16},
                                     {3, 20, 20}, {2, 33, 5}, {6, 4, 37}, {20, 20, 20}};
    for (const auto& s : shapes) {
        const std::size_t m = s[0], k = s[1], n = s[2];
        const auto a = random_buffer(m * k, rng);
        const auto b = random_buffer(k * n, rng);
        for (const bool accumulate : {false, true}) {
            auto c_scalar = random_buffer(m * n, rng);
            auto c_avx = c_scalar;
            kernels::scalar_backend().matmul(a.data(), b.data(), c_scalar.data(), m, k, n,
                                             accumulate);
            kernels::avx2_backend().matmul(a.data(), b.data(), c_avx.data(), m, k, n,
                                           accumulate);
            for (std::size_t i = 0; i < m * n; ++i) {
                CHECK(std::abs(c_scalar[i] - c_avx[i]) <=
                      matmul_tolerance(k) * (std::abs(c_scalar[i]) + 1.0));
            }
        }
    }
}

TEST_CASE("avx2 axpy/scale/dot match scalar") {
    if (!kernels::avx2_available()) {
        return;
    }
    Rng rng(14);
    for (const std::size_t n : {1u, 3u, 4u, 5u, 16u, 31u, 64u, 1000u}) {
        const auto x = random_buffer(n, rng);
        auto y1 = random_buffer(n, rng);
        auto y2 = y1;
        kernels::scalar_backend().axpy(0.37, x.data(), y1.data(), n);
        kernels::avx2_backend().axpy(0.37, x.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(std::abs(y1[i] - y2[i]) <= 4e-16 * (std::abs(y1[i]) + 1.0));
        }
        auto s1 = y1;
        auto s2 = y1;
        kernels::scalar_backend().scale(-1.25, s1.data(), n);
        kernels::avx2_backend().scale(-1.25, s2.data(), n);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(s1[i] == s2[i]); // scale is a single multiply per element
        }
        const double d1 = kernels::scalar_backend().dot(x.data(), y1.data(), n);
        const double d2 = kernels::avx2_backend().dot(x.data(), y1.data(), n);
        CHECK(std::abs(d1 - d2) <= matmul_tolerance(n) * (std::abs(d1) + 1.0));
    }
}

TEST_CASE("backend selection can be forced") {
    const std::string original = kernels::active().name;
    kernels::set_active("scalar");
    CHECK(std::string(kernels::active().name) == "scalar");
    kernels::set_active("auto");
    if (kernels::avx2_available()) {
        CHECK(std::string(kernels::active().name) == "avx2");
    } else {
        CHECK(std::string(kernels::active().name) == "scalar");
    }
    CHECK_THROWS(kernels::set_active("neon"));
    kernels::set_active(original);
}

} // TEST_SUITE
