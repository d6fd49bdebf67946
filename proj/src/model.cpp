#include "tnid/model.hpp"

#include "tnid/degree.hpp"
#include "tnid/error.hpp"
#include "tnid/kernels.hpp"
#include "tnid/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace tnid {

namespace {

void check_feature_vector(std::span<const double> x, std::size_t m) {
    if (x.size() != m) {
        std::ostringstream msg;
        msg << "feature vector has length " << x.size() << ", model expects " << m;
        throw ShapeError(msg.str());
    }
}

std::size_t log2_exact(std::size_t m) {
    std::size_t l = 0;
    std::size_t v = 1;
    while (v < m) {
        v <<= 1;
        ++l;
    }
    if (v != m) {
        throw ShapeError("tree models require a power-of-two feature count");
    }
    return l;
}

std::vector<double> to_vector(const DenseTensor& t) {
    return {t.elements().begin(), t.elements().end()};
}

} // namespace

std::size_t TensorRingModel::feature_parameter_count() const {
    std::size_t count = 0;
    for (const auto& core : feature_cores) {
        count += core.size();
    }
    return count;
}

std::size_t TensorRingModel::parameter_count() const {
    return feature_parameter_count() + output_core.size();
}

std::size_t TreeTensorNetworkModel::parameter_count() const {
    std::size_t count = top_core.size();
    for (const auto& core : leaf_cores) {
        count += core.size();
    }
    for (const auto& layer : internal_cores) {
        for (const auto& core : layer) {
            count += core.size();
        }
    }
    return count;
}

ModelKind kind_of(const Model& model) {
    return std::holds_alternative<TensorRingModel>(model) ? ModelKind::tensor_ring
                                                          : ModelKind::tree_tensor_network;
}

ModelDims dims_of(const Model& model) {
    return std::visit([](const auto& m) { return ModelDims{m.m, m.r, m.n}; }, model);
}

std::vector<DenseTensor*> parameter_cores(TensorRingModel& model) {
    std::vector<DenseTensor*> cores;
    cores.reserve(model.feature_cores.size() + 1);
    for (auto& core : model.feature_cores) {
        cores.push_back(&core);
    }
    cores.push_back(&model.output_core);
    return cores;
}

std::vector<DenseTensor*> parameter_cores(TreeTensorNetworkModel& model) {
    std::vector<DenseTensor*> cores;
    for (auto& core : model.leaf_cores) {
        cores.push_back(&core);
    }
    for (auto& layer : model.internal_cores) {
        for (auto& core : layer) {
            cores.push_back(&core);
        }
    }
    cores.push_back(&model.top_core);
    return cores;
}

std::vector<DenseTensor*> parameter_cores(Model& model) {
    return std::visit([](auto& m) { return parameter_cores(m); }, model);
}

namespace {

std::vector<const DenseTensor*> const_cores(const TensorRingModel& model) {
    std::vector<const DenseTensor*> cores;
    cores.reserve(model.feature_cores.size() + 1);
    for (const auto& core : model.feature_cores) {
        cores.push_back(&core);
    }
    cores.push_back(&model.output_core);
    return cores;
}

std::vector<const DenseTensor*> const_cores(const TreeTensorNetworkModel& model) {
    std::vector<const DenseTensor*> cores;
    for (const auto& core : model.leaf_cores) {
        cores.push_back(&core);
    }
    for (const auto& layer : model.internal_cores) {
        for (const auto& core : layer) {
            cores.push_back(&core);
        }
    }
    cores.push_back(&model.top_core);
    return cores;
}

} // namespace

std::vector<const DenseTensor*> parameter_cores(const Model& model) {
    return std::visit([](const auto& m) { return const_cores(m); }, model);
}

DegreeSet DegreeSet::full(std::size_t m) {
    DegreeSet d;
    d.kind = Kind::full;
    d.degrees.resize(m + 1);
    for (std::size_t j = 0; j <= m; ++j) {
        d.degrees[j] = j;
    }
    return d;
}

DegreeSet DegreeSet::cumulative(std::size_t j) {
    DegreeSet d;
    d.kind = Kind::cumulative;
    d.degrees.resize(j + 1);
    for (std::size_t v = 0; v <= j; ++v) {
        d.degrees[v] = v;
    }
    return d;
}

DegreeSet DegreeSet::single(std::size_t j) {
    DegreeSet d;
    d.kind = Kind::single;
    d.degrees = {j};
    return d;
}

DegreeSet DegreeSet::custom(std::vector<std::size_t> degrees) {
    if (degrees.empty()) {
        throw ConfigError("a degree set cannot be empty");
    }
    std::sort(degrees.begin(), degrees.end());
    degrees.erase(std::unique(degrees.begin(), degrees.end()), degrees.end());
    DegreeSet d;
    d.kind = Kind::custom;
    d.degrees = std::move(degrees);
    return d;
}

namespace {

std::size_t parse_number(std::string_view text, std::string_view what) {
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ConfigError("cannot parse " + std::string(what) + " from '" +
                          std::string(text) + "'");
    }
    return value;
}

} // namespace

DegreeSet DegreeSet::parse(std::string_view text, std::size_t m) {
    DegreeSet result;
    if (text == "full") {
        result = full(m);
    } else if (text.starts_with("cum:")) {
        result = cumulative(parse_number(text.substr(4), "cumulative degree"));
    } else if (text.starts_with("deg:")) {
        result = single(parse_number(text.substr(4), "degree"));
    } else {
        std::vector<std::size_t> degrees;
        std::size_t start = 0;
        while (start <= text.size()) {
            const std::size_t comma = std::min(text.find(',', start), text.size());
            degrees.push_back(parse_number(text.substr(start, comma - start), "degree"));
            start = comma + 1;
        }
        result = custom(std::move(degrees));
    }
    if (result.max_degree() > m) {
        std::ostringstream msg;
        msg << "degree set '" << text << "' exceeds the feature count " << m;
        throw ConfigError(msg.str());
    }
    return result;
}

std::size_t DegreeSet::max_degree() const {
    if (degrees.empty()) {
        throw ConfigError("a degree set cannot be empty");
    }
    return degrees.back();
}

bool DegreeSet::contains(std::size_t j) const {
    return std::binary_search(degrees.begin(), degrees.end(), j);
}

std::string DegreeSet::tag() const {
    switch (kind) {
    case Kind::full:
        return "full";
    case Kind::cumulative:
        return "cum" + std::to_string(max_degree());
    case Kind::single:
        return "deg" + std::to_string(max_degree());
    case Kind::custom:
        break;
    }
    std::string t = "set";
    for (std::size_t i = 0; i < degrees.size(); ++i) {
        t += (i ? "-" : "") + std::to_string(degrees[i]);
    }
    return t;
}

int tr_forward_plan(Evaluator& ev, const TensorRingModel& model, std::span<const double> x) {
    check_feature_vector(x, model.m);
    // Stage 1: each feature vector absorbs its core's physical index,
    // leaving an r x r matrix.
    std::vector<int> mats(model.m);
    for (std::size_t i = 0; i < model.m; ++i) {
        const int h = ev.constant(h_feature(x[i]));
        mats[i] = ev.contract(h, ev.parameter(i), {{0, 1}});
    }
    // Stage 2: multiply around the ring starting after the output core,
    // then close the loop through it.
    int chain = mats[0];
    for (std::size_t i = 1; i < model.m; ++i) {
        chain = ev.contract(chain, mats[i], {{1, 0}});
    }
    const int output_core = ev.parameter(model.m);
    return ev.contract(chain, output_core, {{1, 0}, {0, 2}});
}

int ttn_forward_plan(Evaluator& ev, const TreeTensorNetworkModel& model,
                     std::span<const double> x) {
    check_feature_vector(x, model.m);
    if (model.layers == 1) {
        const int h0 = ev.constant(h_feature(x[0]));
        const int h1 = ev.constant(h_feature(x[1]));
        const int partial = ev.contract(h0, ev.parameter(0), {{0, 0}});
        return ev.contract(h1, partial, {{0, 0}});
    }
    std::vector<int> level(model.m / 2);
    for (std::size_t i = 0; i < model.m / 2; ++i) {
        const int h0 = ev.constant(h_feature(x[2 * i]));
        const int h1 = ev.constant(h_feature(x[2 * i + 1]));
        const int partial = ev.contract(h0, ev.parameter(i), {{0, 0}});
        level[i] = ev.contract(h1, partial, {{0, 0}});
    }
    std::size_t slot = model.m / 2;
    while (level.size() > 2) {
        std::vector<int> next(level.size() / 2);
        for (std::size_t i = 0; i < next.size(); ++i) {
            const int partial = ev.contract(level[2 * i], ev.parameter(slot++), {{0, 0}});
            next[i] = ev.contract(level[2 * i + 1], partial, {{0, 0}});
        }
        level = std::move(next);
    }
    const int partial = ev.contract(level[0], ev.parameter(slot), {{0, 0}});
    return ev.contract(level[1], partial, {{0, 0}});
}

namespace {

void check_degree_cap(std::size_t j_max, std::size_t m) {
    if (j_max > m) {
        std::ostringstream msg;
        msg << "degree cap " << j_max << " exceeds the feature count " << m;
        throw ShapeError(msg.str());
    }
}

} // namespace

int tr_decompose_plan(Evaluator& ev, const TensorRingModel& model, std::span<const double> x,
                      std::size_t j_max) {
    check_feature_vector(x, model.m);
    check_degree_cap(j_max, model.m);
    // Same schedule as tr_forward_plan with every core lifted and the
    // [1, x] vectors replaced by their degree-indexed 2x2 embeddings.
    std::vector<int> mats(model.m);
    for (std::size_t i = 0; i < model.m; ++i) {
        const int h = ev.constant(std::move(h_feature_matrix(x[i]).inner()));
        const int core = ev.lift(ev.parameter(i));
        mats[i] = ev.degree_contract(h, core, {{1, 2}}, j_max);
    }
    int chain = mats[0];
    for (std::size_t i = 1; i < model.m; ++i) {
        chain = ev.degree_contract(chain, mats[i], {{2, 1}}, j_max);
    }
    const int output_core = ev.lift(ev.parameter(model.m));
    return ev.degree_contract(chain, output_core, {{2, 1}, {1, 3}}, j_max);
}

int ttn_decompose_plan(Evaluator& ev, const TreeTensorNetworkModel& model,
                       std::span<const double> x, std::size_t j_max) {
    check_feature_vector(x, model.m);
    check_degree_cap(j_max, model.m);
    if (model.layers == 1) {
        const int h0 = ev.constant(std::move(h_feature_matrix(x[0]).inner()));
        const int h1 = ev.constant(std::move(h_feature_matrix(x[1]).inner()));
        const int partial = ev.degree_contract(h0, ev.lift(ev.parameter(0)), {{1, 1}}, j_max);
        return ev.degree_contract(h1, partial, {{1, 1}}, j_max);
    }
    std::vector<int> level(model.m / 2);
    for (std::size_t i = 0; i < model.m / 2; ++i) {
        const int h0 = ev.constant(std::move(h_feature_matrix(x[2 * i]).inner()));
        const int h1 = ev.constant(std::move(h_feature_matrix(x[2 * i + 1]).inner()));
        const int partial = ev.degree_contract(h0, ev.lift(ev.parameter(i)), {{1, 1}}, j_max);
        level[i] = ev.degree_contract(h1, partial, {{1, 1}}, j_max);
    }
    std::size_t slot = model.m / 2;
    while (level.size() > 2) {
        std::vector<int> next(level.size() / 2);
        for (std::size_t i = 0; i < next.size(); ++i) {
            const int partial =
                ev.degree_contract(level[2 * i], ev.lift(ev.parameter(slot++)), {{1, 1}}, j_max);
            next[i] = ev.degree_contract(level[2 * i + 1], partial, {{1, 1}}, j_max);
        }
        level = std::move(next);
    }
    const int partial = ev.degree_contract(level[0], ev.lift(ev.parameter(slot)), {{1, 1}}, j_max);
    return ev.degree_contract(level[1], partial, {{1, 1}}, j_max);
}

int forward_plan(Evaluator& ev, const Model& model, std::span<const double> x) {
    return std::visit(
        [&](const auto& m) {
            if constexpr (std::is_same_v<std::decay_t<decltype(m)>, TensorRingModel>) {
                return tr_forward_plan(ev, m, x);
            } else {
                return ttn_forward_plan(ev, m, x);
            }
        },
        model);
}

int decompose_plan(Evaluator& ev, const Model& model, std::span<const double> x,
                   std::size_t j_max) {
    return std::visit(
        [&](const auto& m) {
            if constexpr (std::is_same_v<std::decay_t<decltype(m)>, TensorRingModel>) {
                return tr_decompose_plan(ev, m, x, j_max);
            } else {
                return ttn_decompose_plan(ev, m, x, j_max);
            }
        },
        model);
}

int d_degree_plan(Evaluator& ev, const Model& model, std::span<const double> x,
                  const DegreeSet& dset) {
    const std::size_t cap = dset.max_degree();
    const int rows = decompose_plan(ev, model, x, cap);
    DenseTensor indicator({cap + 1});
    for (const std::size_t j : dset.degrees) {
        indicator[j] = 1.0;
    }
    const int selector = ev.constant(std::move(indicator));
    return ev.contract(selector, rows, {{0, 0}});
}

std::vector<double> tr_forward(const TensorRingModel& model, std::span<const double> x) {
    EagerEvaluator ev(const_cores(model));
    return to_vector(ev.value(tr_forward_plan(ev, model, x)));
}

std::vector<double> ttn_forward(const TreeTensorNetworkModel& model, std::span<const double> x) {
    EagerEvaluator ev(const_cores(model));
    return to_vector(ev.value(ttn_forward_plan(ev, model, x)));
}

std::vector<double> forward(const Model& model, std::span<const double> x) {
    EagerEvaluator ev(parameter_cores(model));
    return to_vector(ev.value(forward_plan(ev, model, x)));
}

DenseTensor interaction_decompose(const Model& model, std::span<const double> x,
                                  std::size_t j_max) {
    EagerEvaluator ev(parameter_cores(model));
    return ev.value(decompose_plan(ev, model, x, j_max));
}

std::vector<double> d_degree_forward(const Model& model, std::span<const double> x,
                                     const DegreeSet& dset) {
    const ModelDims dims = dims_of(model);
    if (dset.max_degree() > dims.m) {
        throw ShapeError("degree set exceeds the model's feature count");
    }
    EagerEvaluator ev(parameter_cores(model));
    return to_vector(ev.value(d_degree_plan(ev, model, x, dset)));
}

namespace {

void fill_noise(DenseTensor& t, Rng& rng, double stddev) {
    for (double& v : t.elements()) {
        v = stddev * rng.normal();
    }
}

// Random orthogonal r x r matrix that maps the all-ones vector to itself:
// Gram-Schmidt over two random bases sharing 1/sqrt(r) as their first
// vector, composed as sum_i w_i u_i^T.
std::vector<double> rotation_fixing_ones(std::size_t r, Rng& rng) {
    const auto orthonormal_basis = [&](std::size_t count) {
        std::vector<std::vector<double>> basis;
        basis.emplace_back(count, 1.0 / std::sqrt(static_cast<double>(count)));
        while (basis.size() < count) {
            std::vector<double> candidate(count);
            for (double& v : candidate) {
                v = rng.normal();
            }
            for (const auto& prev : basis) {
                double overlap = 0.0;
                for (std::size_t i = 0; i < count; ++i) {
                    overlap += candidate[i] * prev[i];
                }
                for (std::size_t i = 0; i < count; ++i) {
                    candidate[i] -= overlap * prev[i];
                }
            }
            double norm_sq = 0.0;
            for (const double v : candidate) {
                norm_sq += v * v;
            }
            if (norm_sq < 1e-12) {
                continue; // rare degenerate draw
            }
            const double inv_norm = 1.0 / std::sqrt(norm_sq);
            for (double& v : candidate) {
                v *= inv_norm;
            }
            basis.push_back(std::move(candidate));
        }
        return basis;
    };
    const auto u = orthonormal_basis(r);
    const auto w = orthonormal_basis(r);
    std::vector<double> q(r * r, 0.0);
    for (std::size_t b = 0; b < r; ++b) {
        for (std::size_t row = 0; row < r; ++row) {
            for (std::size_t col = 0; col < r; ++col) {
                q[row * r + col] += w[b][row] * u[b][col];
            }
        }
    }
    return q;
}

} // namespace

TensorRingModel init_tr(std::size_t m, std::size_t r, std::size_t n, std::uint64_t seed,
                        const InitScheme& scheme) {
    if (m < 2 || r < 1 || n < 1) {
        throw ConfigError("tensor ring needs m >= 2, r >= 1, n >= 1");
    }
    Rng rng(Rng::derive(seed, 0x7452)); // "tr"
    TensorRingModel model;
    model.m = m;
    model.r = r;
    model.n = n;
    model.output_position = m;
    model.feature_cores.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        DenseTensor core({r, 2, r});
        fill_noise(core, rng, scheme.noise_std);
        for (std::size_t l = 0; l < r; ++l) {
            // Constant channel (physical index 0) passes the virtual index
            // through; the x channel starts louder (see InitScheme).
            for (std::size_t rr = 0; rr < r; ++rr) {
                core[(l * 2 + 1) * r + rr] *= scheme.feature_gain;
            }
            core[(l * 2 + 0) * r + l] += 1.0;
        }
        model.feature_cores.push_back(std::move(core));
    }
    DenseTensor out({r, n, r});
    fill_noise(out, rng, scheme.noise_std);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t l = 0; l < r; ++l) {
            out[(l * n + k) * r + l] += 1.0;
        }
    }
    // 1/r closes the trace at unit scale; 1/n starts the output at the
    // one-hot target mean, so training has no global rescaling to do.
    kernels::scale(1.0 / static_cast<double>(r * n), out.data(), out.size());
    model.output_core = std::move(out);
    return model;
}

TreeTensorNetworkModel init_ttn(std::size_t m, std::size_t r, std::size_t n,
                                std::uint64_t seed, const InitScheme& scheme) {
    if (m < 2 || r < 1 || n < 1) {
        throw ConfigError("tree tensor network needs m >= 2, r >= 1, n >= 1");
    }
    const std::size_t layers = log2_exact(m);
    Rng rng(Rng::derive(seed, 0x77E4)); // "ttn"
    TreeTensorNetworkModel model;
    model.m = m;
    model.r = r;
    model.n = n;
    model.layers = layers;

    const double virtual_noise = 1.0 / static_cast<double>(r); // EXPERIMENT B

    if (layers == 1) {
        DenseTensor top({2, 2, n});
        fill_noise(top, rng, scheme.noise_std);
        for (std::size_t c = n; c < 4 * n; ++c) {
            top[c] *= scheme.feature_gain;
        }
        for (std::size_t k = 0; k < n; ++k) {
            top[k] += 1.0; // constant-constant channel
        }
        kernels::scale(1.0 / static_cast<double>(n), top.data(), top.size());
        model.top_core = std::move(top);
        return model;
    }

    model.leaf_cores.reserve(m / 2);
    for (std::size_t i = 0; i < m / 2; ++i) {
        DenseTensor leaf({2, 2, r});
        fill_noise(leaf, rng, 0.92); // EXPERIMENT B
        model.leaf_cores.push_back(std::move(leaf));
    }
    // Internal pass-through: out[k] = (Q_l v_l)[k] * (Q_r v_r)[k] with
    // random rotations fixing the all-ones vector. First-order
    // perturbations pass through undamped but mixed across components, so
    // no per-component product chain can run away the way a diagonal cube's
    // does; the ones vector itself is an exact fixed point.
    for (std::size_t layer = 2; layer < layers; ++layer) {
        const std::size_t count = m >> layer;
        std::vector<DenseTensor> cores;
        cores.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            DenseTensor core({r, r, r});
            fill_noise(core, rng, virtual_noise);
            cores.push_back(std::move(core)); // EXPERIMENT B: no pass-through
        }
        model.internal_cores.push_back(std::move(cores));
    }
    DenseTensor top({r, r, n});
    fill_noise(top, rng, 0.3 / static_cast<double>(r)); // EXPERIMENT B
    model.top_core = std::move(top);
    return model;
}

Model init_model(ModelKind kind, std::size_t m, std::size_t r, std::size_t n,
                 std::uint64_t seed, const InitScheme& scheme) {
    if (kind == ModelKind::tensor_ring) {
        return init_tr(m, r, n, seed, scheme);
    }
    return init_ttn(m, r, n, seed, scheme);
}

} // namespace tnid
