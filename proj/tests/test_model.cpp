#include "tnid/model.hpp"

#include "oracles.hpp"
#include "tnid/checkpoint.hpp"
#include "tnid/degree.hpp"
#include "tnid/error.hpp"
#include "tnid/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace tnid;

namespace {

Model random_model(ModelKind kind, std::size_t m, std::size_t r, std::size_t n, Rng& rng) {
    Model model = make_model_structure(kind, m, r, n);
    for (DenseTensor* core : parameter_cores(model)) {
        for (double& v : core->elements()) {
            v = 0.8 * (2.0 * rng.uniform() - 1.0);
        }
    }
    return model;
}

std::vector<double> random_features(std::size_t m, Rng& rng) {
    std::vector<double> x(m);
    for (double& v : x) {
        v = rng.uniform() - 0.5;
    }
    return x;
}

// Forwards to an eager evaluator while recording contract result orders.
class AuditEvaluator final : public Evaluator {
public:
    explicit AuditEvaluator(std::vector<const DenseTensor*> params)
        : inner_(std::move(params)) {}

    int constant(DenseTensor value) override { return inner_.constant(std::move(value)); }
    int parameter(std::size_t slot) override { return inner_.parameter(slot); }
    int contract(int a, int b, std::vector<AxisPair> pairs) override {
        const int id = inner_.contract(a, b, std::move(pairs));
        contract_orders.push_back(inner_.value(id).order());
        return id;
    }
    int degree_contract(int a, int b, std::vector<AxisPair> pairs,
                        std::optional<std::size_t> j_max) override {
        return inner_.degree_contract(a, b, std::move(pairs), j_max);
    }
    int lift(int a) override { return inner_.lift(a); }
    const DenseTensor& value(int id) const override { return inner_.value(id); }

    std::vector<std::size_t> contract_orders;

private:
    EagerEvaluator inner_;
};

} // namespace

TEST_SUITE("model") {

TEST_CASE("parameter counts match the architecture formulas") {
    const std::size_t cases[][2] = {{8, 3}, {16, 5}, {64, 20}};
    for (const auto& c : cases) {
        const std::size_t m = c[0];
        const std::size_t r = c[1];
        const TensorRingModel tr = init_tr(m, r, 10, 1);
        CHECK(tr.feature_parameter_count() == 2 * m * r * r);
        CHECK(tr.parameter_count() == 2 * m * r * r + 10 * r * r);
        // The TTN count formula assumes the output axis matches the bond.
        const TreeTensorNetworkModel ttn = init_ttn(m, r, r, 1);
        CHECK(ttn.parameter_count() == 2 * m * r + (m / 2 - 1) * r * r * r);
    }
}

TEST_CASE("tr_forward: pass-through cores give a constant output") {
    const std::size_t m = 5, r = 3, n = 4;
    TensorRingModel model = make_tr_structure(m, r, n);
    for (DenseTensor& core : model.feature_cores) {
        for (std::size_t l = 0; l < r; ++l) {
            core[(l * 2 + 0) * r + l] = 1.0 / static_cast<double>(r);
        }
    }
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t l = 0; l < r; ++l) {
            model.output_core[(l * n + k) * r + l] = 1.0;
        }
    }
    Rng rng(31);
    const std::vector<double> x1 = random_features(m, rng);
    const std::vector<double> x2 = random_features(m, rng);
    const std::vector<double> f1 = tr_forward(model, x1);
    const std::vector<double> f2 = tr_forward(model, x2);
    const double expected = std::pow(1.0 / static_cast<double>(r), m) * static_cast<double>(r);
    for (std::size_t k = 0; k < n; ++k) {
        CHECK(f1[k] == doctest::Approx(expected).epsilon(1e-12));
        CHECK(f1[k] == doctest::Approx(f2[k]).epsilon(1e-12));
    }
}

TEST_CASE("tr_forward matches the full-weight oracle at m=4") {
    Rng rng(32);
    const Model model = random_model(ModelKind::tensor_ring, 4, 2, 3, rng);
    const auto weight = oracle::full_weight(model);
    for (int trial = 0; trial < 5; ++trial) {
        const std::vector<double> x = random_features(4, rng);
        const std::vector<double> got = forward(model, x);
        const std::vector<double> want = oracle::forward_from_weight(weight, 3, x);
        CHECK(oracle::max_relative_error(got, want) < 1e-12);
    }
}

TEST_CASE("tr_forward is affine in each single feature") {
    Rng rng(33);
    const Model model = random_model(ModelKind::tensor_ring, 4, 2, 2, rng);
    std::vector<double> x = random_features(4, rng);
    const double delta = 0.25;
    for (std::size_t i = 0; i < 4; ++i) {
        std::vector<double> up = x, down = x;
        up[i] += delta;
        down[i] -= delta;
        const auto f_up = forward(model, up);
        const auto f_mid = forward(model, x);
        const auto f_down = forward(model, down);
        for (std::size_t k = 0; k < 2; ++k) {
            CHECK(std::abs(f_up[k] - 2.0 * f_mid[k] + f_down[k]) < 1e-8);
        }
    }
}

TEST_CASE("ttn_forward matches the full-weight oracle, m in {2,4,8}") {
    Rng rng(34);
    for (const std::size_t m : {2u, 4u, 8u}) {
        const Model model = random_model(ModelKind::tree_tensor_network, m, 2, 3, rng);
        const auto weight = oracle::full_weight(model);
        const std::vector<double> x = random_features(m, rng);
        const std::vector<double> got = forward(model, x);
        const std::vector<double> want = oracle::forward_from_weight(weight, 3, x);
        CHECK(oracle::max_relative_error(got, want) < 1e-12);
    }
}

TEST_CASE("ttn_forward at x = 0 is the pure bias, equal to decomposition row 0") {
    Rng rng(35);
    const Model model = random_model(ModelKind::tree_tensor_network, 8, 2, 3, rng);
    const std::vector<double> zero(8, 0.0);
    const std::vector<double> f = forward(model, zero);
    const DenseTensor rows = interaction_decompose(model, zero, 8);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(oracle::relative_error(f[k], rows[k]) < 1e-12);
    }
}

TEST_CASE("ttn pass keeps per-node intermediates first-order") {
    Rng rng(36);
    Model model = random_model(ModelKind::tree_tensor_network, 8, 3, 2, rng);
    AuditEvaluator audit(parameter_cores(std::as_const(model)));
    const int out = ttn_forward_plan(audit, std::get<TreeTensorNetworkModel>(model),
                                     random_features(8, rng));
    CHECK(audit.value(out).order() == 1);
    // Each tree node contracts twice; the second contraction emits the
    // node's output, which must be first-order all the way up.
    REQUIRE(audit.contract_orders.size() % 2 == 0);
    for (std::size_t i = 1; i < audit.contract_orders.size(); i += 2) {
        CHECK(audit.contract_orders[i] == 1);
    }
}

TEST_CASE("interaction_decompose rows sum to the standard forward") {
    Rng rng(37);
    for (const ModelKind kind : {ModelKind::tensor_ring, ModelKind::tree_tensor_network}) {
        const Model model = random_model(kind, 8, 3, 3, rng);
        const std::vector<double> x = random_features(8, rng);
        const std::vector<double> f = forward(model, x);
        const DenseTensor rows = interaction_decompose(model, x, 8);
        REQUIRE(rows.shape() == std::vector<std::size_t>{9, 3});
        std::vector<double> sums(3, 0.0);
        for (std::size_t j = 0; j <= 8; ++j) {
            for (std::size_t k = 0; k < 3; ++k) {
                sums[k] += rows[j * 3 + k];
            }
        }
        CHECK(oracle::max_relative_error(sums, f) < 1e-10);
    }
}

TEST_CASE("interaction_decompose matches the Hamming-weight oracle at m=4") {
    Rng rng(38);
    for (const ModelKind kind : {ModelKind::tensor_ring, ModelKind::tree_tensor_network}) {
        const Model model = random_model(kind, 4, 2, 3, rng);
        const auto weight = oracle::full_weight(model);
        const std::vector<double> x = random_features(4, rng);
        const DenseTensor rows = interaction_decompose(model, x, 4);
        const auto want = oracle::decompose_from_weight(weight, 3, x);
        for (std::size_t j = 0; j <= 4; ++j) {
            for (std::size_t k = 0; k < 3; ++k) {
                CHECK(std::abs(rows[j * 3 + k] - want[j][k]) < 1e-12);
            }
        }
    }
}

TEST_CASE("interaction_decompose at x = 0: row 0 only") {
    Rng rng(39);
    const Model model = random_model(ModelKind::tensor_ring, 6, 2, 2, rng);
    const std::vector<double> zero(6, 0.0);
    const std::vector<double> f = forward(model, zero);
    const DenseTensor rows = interaction_decompose(model, zero, 6);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(oracle::relative_error(rows[k], f[k]) < 1e-12);
    }
    for (std::size_t j = 1; j <= 6; ++j) {
        for (std::size_t k = 0; k < 2; ++k) {
            CHECK(rows[j * 2 + k] == 0.0);
        }
    }
}

TEST_CASE("decomposition rows are exact under truncation (prefix property)") {
    Rng rng(40);
    const Model model = random_model(ModelKind::tree_tensor_network, 8, 2, 2, rng);
    const std::vector<double> x = random_features(8, rng);
    const DenseTensor full_rows = interaction_decompose(model, x, 8);
    const DenseTensor capped = interaction_decompose(model, x, 3);
    REQUIRE(capped.shape() == std::vector<std::size_t>{4, 2});
    for (std::size_t j = 0; j <= 3; ++j) {
        for (std::size_t k = 0; k < 2; ++k) {
            CHECK(capped[j * 2 + k] == full_rows[j * 2 + k]);
        }
    }
    CHECK_THROWS_AS(interaction_decompose(model, x, 9), ShapeError);
}

TEST_CASE("degree locality: moving one feature never changes row 0") {
    Rng rng(41);
    const Model model = random_model(ModelKind::tensor_ring, 5, 2, 2, rng);
    std::vector<double> x = random_features(5, rng);
    const DenseTensor before = interaction_decompose(model, x, 5);
    x[2] += 0.7;
    const DenseTensor after = interaction_decompose(model, x, 5);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(before[k] == after[k]);
    }
}

TEST_CASE("d_degree_forward: full set reproduces the standard forward") {
    Rng rng(42);
    const Model model = random_model(ModelKind::tensor_ring, 6, 2, 3, rng);
    const std::vector<double> x = random_features(6, rng);
    const std::vector<double> full = forward(model, x);
    const std::vector<double> via_degrees = d_degree_forward(model, x, DegreeSet::full(6));
    CHECK(oracle::max_relative_error(via_degrees, full) < 1e-10);
}

TEST_CASE("d_degree_forward: bias-only set is constant in x") {
    Rng rng(43);
    const Model model = random_model(ModelKind::tree_tensor_network, 4, 2, 2, rng);
    const DegreeSet bias = DegreeSet::custom({0});
    const std::vector<double> f1 = d_degree_forward(model, random_features(4, rng), bias);
    const std::vector<double> f2 = d_degree_forward(model, random_features(4, rng), bias);
    CHECK(oracle::max_relative_error(f1, f2) < 1e-12);
}

TEST_CASE("d_degree_forward: degree-1 slice matches the oracle") {
    Rng rng(44);
    const Model model = random_model(ModelKind::tensor_ring, 4, 2, 3, rng);
    const auto weight = oracle::full_weight(model);
    const std::vector<double> x = random_features(4, rng);
    const std::vector<double> got = d_degree_forward(model, x, DegreeSet::single(1));
    const auto rows = oracle::decompose_from_weight(weight, 3, x);
    CHECK(oracle::max_relative_error(got, rows[1]) < 1e-12);
}

TEST_CASE("init_model is deterministic in the seed") {
    const TensorRingModel a = init_tr(8, 4, 10, 77);
    const TensorRingModel b = init_tr(8, 4, 10, 77);
    const TensorRingModel c = init_tr(8, 4, 10, 78);
    bool identical = true;
    bool differs = false;
    for (std::size_t i = 0; i < a.feature_cores.size(); ++i) {
        for (std::size_t e = 0; e < a.feature_cores[i].size(); ++e) {
            identical = identical && a.feature_cores[i][e] == b.feature_cores[i][e];
            differs = differs || a.feature_cores[i][e] != c.feature_cores[i][e];
        }
    }
    CHECK(identical);
    CHECK(differs);
}

TEST_CASE("init with zero noise: output is the pure bias, independent of x") {
    InitScheme silent;
    silent.noise_std = 0.0;
    Rng rng(45);
    for (const ModelKind kind : {ModelKind::tensor_ring, ModelKind::tree_tensor_network}) {
        const Model model = init_model(kind, 8, 3, 4, 9, silent);
        const std::vector<double> x = random_features(8, rng);
        const std::vector<double> f = forward(model, x);
        const DenseTensor rows = interaction_decompose(model, x, 8);
        // Pass-through cores with the 1/n output normalization: every class
        // starts at the one-hot target mean.
        for (std::size_t k = 0; k < 4; ++k) {
            CHECK(f[k] == doctest::Approx(0.25).epsilon(1e-12));
            CHECK(rows[k] == doctest::Approx(0.25).epsilon(1e-12));
        }
        for (std::size_t j = 1; j <= 8; ++j) {
            for (std::size_t k = 0; k < 4; ++k) {
                CHECK(std::abs(rows[j * 4 + k]) < 1e-12);
            }
        }
    }
}

TEST_CASE("default init keeps outputs bounded at benchmark scale") {
    Rng rng(46);
    for (const ModelKind kind : {ModelKind::tensor_ring, ModelKind::tree_tensor_network}) {
        const Model model = init_model(kind, 64, 20, 10, 3);
        for (int trial = 0; trial < 25; ++trial) {
            const std::vector<double> x = random_features(64, rng);
            for (const double v : forward(model, x)) {
                CHECK(std::abs(v) <= 1e2);
            }
        }
        const std::vector<double> corner(64, -0.5);
        for (const double v : forward(model, corner)) {
            CHECK(std::abs(v) <= 1e2);
        }
    }
}

TEST_CASE("feature vector length is validated") {
    Rng rng(47);
    const Model model = random_model(ModelKind::tensor_ring, 4, 2, 2, rng);
    const std::vector<double> x(3, 0.1);
    CHECK_THROWS_AS(forward(model, x), ShapeError);
    CHECK_THROWS_AS(init_ttn(6, 2, 2, 1), ShapeError);
}

TEST_CASE("degree set parsing and tags") {
    const DegreeSet full = DegreeSet::parse("full", 8);
    CHECK(full.kind == DegreeSet::Kind::full);
    CHECK(full.degrees.size() == 9);
    CHECK(full.tag() == "full");

    const DegreeSet cum = DegreeSet::parse("cum:3", 8);
    CHECK(cum.kind == DegreeSet::Kind::cumulative);
    CHECK(cum.degrees == std::vector<std::size_t>{0, 1, 2, 3});
    CHECK(cum.tag() == "cum3");

    const DegreeSet single = DegreeSet::parse("deg:2", 8);
    CHECK(single.degrees == std::vector<std::size_t>{2});
    CHECK(single.tag() == "deg2");

    const DegreeSet custom = DegreeSet::parse("0,5,2", 8);
    CHECK(custom.degrees == std::vector<std::size_t>{0, 2, 5});
    CHECK(custom.tag() == "set0-2-5");
    CHECK(custom.contains(2));
    CHECK(!custom.contains(3));

    CHECK_THROWS_AS(DegreeSet::parse("cum:9", 8), ConfigError);
    CHECK_THROWS_AS(DegreeSet::parse("", 8), ConfigError);
}

} // TEST_SUITE
