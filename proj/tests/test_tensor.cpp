#include "tnid/tensor.hpp"

#include "oracles.hpp"
#include "tnid/error.hpp"
#include "tnid/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace tnid;

namespace {

bool bit_identical(const DenseTensor& a, const DenseTensor& b) {
    if (!a.same_shape(b)) {
        return false;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) {
            return false;
        }
    }
    return true;
}

struct BudgetGuard {
    std::size_t saved = element_budget();
    ~BudgetGuard() { set_element_budget(saved); }
};

} // namespace

TEST_SUITE("tensor") {

TEST_CASE("shape invariants") {
    CHECK(DenseTensor{}.order() == 0);
    CHECK(DenseTensor{}.size() == 1);
    CHECK(DenseTensor::scalar(3.5)[0] == 3.5);
    CHECK_THROWS_AS(DenseTensor({2, 0, 3}), ShapeError);
    CHECK_THROWS_AS(DenseTensor({2, 2}, {1.0, 2.0, 3.0}), ShapeError);
    const DenseTensor t({2, 3, 4});
    CHECK(t.strides() == std::vector<std::size_t>{12, 4, 1});
    CHECK(t.all_finite());
}

TEST_CASE("tensor product: scalar identity") {
    Rng rng(1);
    const DenseTensor t = oracle::random_tensor({2, 3}, rng);
    const DenseTensor got = tensor_product(DenseTensor::scalar(1.0), t);
    CHECK(got.shape() == std::vector<std::size_t>{2, 3});
    CHECK(bit_identical(got, t));
}

TEST_CASE("tensor product: [1,2] x [1,3]") {
    const DenseTensor a({2}, {1.0, 2.0});
    const DenseTensor b({2}, {1.0, 3.0});
    const DenseTensor c = tensor_product(a, b);
    CHECK(c.shape() == std::vector<std::size_t>{2, 2});
    CHECK(c[0] == 1.0);
    CHECK(c[1] == 3.0);
    CHECK(c[2] == 2.0);
    CHECK(c[3] == 6.0);
}

TEST_CASE("tensor product: random vs triple-loop oracle") {
    Rng rng(2);
    const DenseTensor a = oracle::random_tensor({2, 3}, rng);
    const DenseTensor b = oracle::random_tensor({4}, rng);
    const DenseTensor got = tensor_product(a, b);
    const DenseTensor want = oracle::tensor_product(a, b);
    CHECK(got.shape() == std::vector<std::size_t>{2, 3, 4});
    CHECK(bit_identical(got, want));
}

TEST_CASE("tensor product: element budget guard") {
    BudgetGuard guard;
    set_element_budget(16);
    Rng rng(3);
    const DenseTensor a = oracle::random_tensor({4}, rng);
    const DenseTensor b = oracle::random_tensor({5}, rng);
    CHECK_THROWS_AS(tensor_product(a, b), CapacityError);
    CHECK_NOTHROW(tensor_product(a, oracle::random_tensor({4}, rng)));
}

TEST_CASE("contract: identity matrix passes a vector through") {
    DenseTensor eye({3, 3});
    for (std::size_t i = 0; i < 3; ++i) {
        eye[i * 3 + i] = 1.0;
    }
    const DenseTensor v({3}, {0.5, -1.0, 2.0});
    const DenseTensor got = contract(eye, v, {{1, 0}});
    CHECK(bit_identical(got, v));
}

TEST_CASE("contract: explicit six-index sum over the shared axis") {
    Rng rng(4);
    const std::size_t t = 2;
    const DenseTensor a = oracle::random_tensor({t, t, t, t}, rng);
    const DenseTensor b = oracle::random_tensor({t, t, t, t}, rng);
    const DenseTensor got = contract(a, b, {{3, 3}});
    CHECK(got.shape() == std::vector<std::size_t>{t, t, t, t, t, t});
    // C_{ijklmn} = sum_r A_{ijkr} B_{lmnr}
    for (std::size_t i = 0; i < t; ++i) {
        for (std::size_t j = 0; j < t; ++j) {
            for (std::size_t k = 0; k < t; ++k) {
                for (std::size_t l = 0; l < t; ++l) {
                    for (std::size_t mm = 0; mm < t; ++mm) {
                        for (std::size_t nn = 0; nn < t; ++nn) {
                            double want = 0.0;
                            for (std::size_t r = 0; r < t; ++r) {
                                want += a[((i * t + j) * t + k) * t + r] *
                                        b[((l * t + mm) * t + nn) * t + r];
                            }
                            const double got_v =
                                got[((((i * t + j) * t + k) * t + l) * t + mm) * t + nn];
                            CHECK(got_v == doctest::Approx(want).epsilon(1e-13));
                        }
                    }
                }
            }
        }
    }
}

TEST_CASE("contract: full contraction against a copy recovers the squared norm") {
    Rng rng(5);
    const DenseTensor a = oracle::random_tensor({3}, rng);
    const DenseTensor b = oracle::random_tensor({2, 4}, rng);
    const DenseTensor prod = tensor_product(a, b);
    // Contract both of b's axes in the product against b itself.
    const DenseTensor got = contract(prod, b, {{1, 0}, {2, 1}});
    double norm_sq = 0.0;
    for (const double v : b.elements()) {
        norm_sq += v * v;
    }
    REQUIRE(got.shape() == std::vector<std::size_t>{3});
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(got[i] == doctest::Approx(a[i] * norm_sq).epsilon(1e-13));
    }
}

TEST_CASE("contract: error reporting") {
    Rng rng(6);
    const DenseTensor a = oracle::random_tensor({2, 3}, rng);
    const DenseTensor b = oracle::random_tensor({4, 2}, rng);
    CHECK_THROWS_WITH_AS(contract(a, b, {{1, 0}}), doctest::Contains("axis 1"), ShapeError);
    CHECK_THROWS_AS(contract(a, b, {{5, 0}}), ShapeError);
    CHECK_THROWS_AS(contract(a, b, {{0, 1}, {0, 0}}), ShapeError);
}

TEST_CASE("contract: zero pairs equals tensor_product bit-exactly") {
    Rng rng(7);
    const DenseTensor a = oracle::random_tensor({3, 2}, rng);
    const DenseTensor b = oracle::random_tensor({2, 2}, rng);
    CHECK(bit_identical(contract(a, b, {}), tensor_product(a, b)));
}

TEST_CASE("contract: linearity in the first argument") {
    Rng rng(8);
    const DenseTensor a1 = oracle::random_tensor({3, 4}, rng);
    const DenseTensor a2 = oracle::random_tensor({3, 4}, rng);
    const DenseTensor b = oracle::random_tensor({4, 2}, rng);
    const double alpha = 0.7, beta = -1.3;
    DenseTensor mix(a1);
    for (std::size_t i = 0; i < mix.size(); ++i) {
        mix[i] = alpha * a1[i] + beta * a2[i];
    }
    const DenseTensor lhs = contract(mix, b, {{1, 0}});
    const DenseTensor c1 = contract(a1, b, {{1, 0}});
    const DenseTensor c2 = contract(a2, b, {{1, 0}});
    for (std::size_t i = 0; i < lhs.size(); ++i) {
        CHECK(oracle::relative_error(lhs[i], alpha * c1[i] + beta * c2[i]) < 1e-12);
    }
}

TEST_CASE("tensor product associativity within 1e-12") {
    Rng rng(9);
    const DenseTensor a = oracle::random_tensor({2, 2}, rng);
    const DenseTensor b = oracle::random_tensor({3}, rng);
    const DenseTensor c = oracle::random_tensor({2}, rng);
    const DenseTensor left = tensor_product(tensor_product(a, b), c);
    const DenseTensor right = tensor_product(a, tensor_product(b, c));
    REQUIRE(left.shape() == right.shape());
    for (std::size_t i = 0; i < left.size(); ++i) {
        CHECK(oracle::relative_error(left[i], right[i]) < 1e-12);
    }
}

TEST_CASE("contract: brute-force equivalence on small shapes") {
    Rng rng(10);
    // All operand splits of up to 6 axes with sizes <= 3, one random pair
    // spec per split.
    const std::vector<std::vector<std::size_t>> shapes = {
        {2}, {3}, {2, 2}, {3, 2}, {2, 3, 2}, {3, 3}, {2, 2, 2}};
    for (const auto& sa : shapes) {
        for (const auto& sb : shapes) {
            if (sa.size() + sb.size() > 6) {
                continue;
            }
            const DenseTensor a = oracle::random_tensor(sa, rng);
            const DenseTensor b = oracle::random_tensor(sb, rng);
            std::vector<AxisPair> pairs;
            for (std::size_t ax_a = 0; ax_a < sa.size(); ++ax_a) {
                for (std::size_t ax_b = 0; ax_b < sb.size(); ++ax_b) {
                    if (sa[ax_a] == sb[ax_b] && pairs.size() < 2) {
                        bool clash = false;
                        for (const auto& [pa, pb] : pairs) {
                            clash = clash || pa == ax_a || pb == ax_b;
                        }
                        if (!clash && rng.uniform() < 0.6) {
                            pairs.emplace_back(ax_a, ax_b);
                        }
                    }
                }
            }
            const DenseTensor got = contract(a, b, pairs);
            const DenseTensor want = oracle::contract(a, b, pairs);
            REQUIRE(got.shape() == want.shape());
            for (std::size_t i = 0; i < got.size(); ++i) {
                CHECK(std::abs(got[i] - want[i]) <=
                      64.0 * std::numeric_limits<double>::epsilon() *
                          (std::abs(want[i]) + 1.0));
            }
        }
    }
}

TEST_CASE("permute_axes: identity is bit-identical") {
    Rng rng(20);
    const DenseTensor a = oracle::random_tensor({2, 3, 2}, rng);
    CHECK(bit_identical(permute_axes(a, {0, 1, 2}), a));
}

TEST_CASE("permute_axes: transpose twice restores the input") {
    Rng rng(21);
    const DenseTensor a = oracle::random_tensor({3, 5}, rng);
    CHECK(bit_identical(permute_axes(permute_axes(a, {1, 0}), {1, 0}), a));
}

TEST_CASE("permute_axes: positional check on an order-4 tensor") {
    Rng rng(22);
    const DenseTensor a = oracle::random_tensor({2, 3, 4, 2}, rng);
    const std::vector<std::size_t> perm{2, 0, 3, 1};
    const DenseTensor p = permute_axes(a, perm);
    REQUIRE(p.shape() == std::vector<std::size_t>{4, 2, 2, 3});
    // p[i0,i1,i2,i3] = a[i1, i3, i0, i2]
    const std::vector<std::size_t> out_idx{1, 0, 1, 2};
    // inverse gather: a index d comes from out position where perm == d
    const std::vector<std::size_t> a_idx{out_idx[1], out_idx[3], out_idx[0], out_idx[2]};
    CHECK(p.at(out_idx) == a.at(a_idx));
}

TEST_CASE("permute_axes: involution property on random permutations") {
    Rng rng(23);
    const DenseTensor a = oracle::random_tensor({2, 3, 2, 4}, rng);
    std::vector<std::size_t> perm{0, 1, 2, 3};
    for (int trial = 0; trial < 10; ++trial) {
        rng.shuffle(perm);
        std::vector<std::size_t> inverse(perm.size());
        for (std::size_t d = 0; d < perm.size(); ++d) {
            inverse[perm[d]] = d;
        }
        CHECK(bit_identical(permute_axes(permute_axes(a, perm), inverse), a));
    }
}

TEST_CASE("permute_axes: invalid permutations") {
    Rng rng(24);
    const DenseTensor a = oracle::random_tensor({2, 2}, rng);
    CHECK_THROWS_AS(permute_axes(a, {0}), ShapeError);
    CHECK_THROWS_AS(permute_axes(a, {0, 0}), ShapeError);
    CHECK_THROWS_AS(permute_axes(a, {0, 5}), ShapeError);
}

} // TEST_SUITE
