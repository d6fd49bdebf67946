#include "tnid/degree.hpp"

#include "tnid/error.hpp"
#include "tnid/kernels.hpp"

#include <atomic>
#include <cmath>
#include <sstream>

namespace tnid {

namespace {

std::atomic<std::uint64_t> g_slice_ops{0};

void bump_slice_ops() { g_slice_ops.fetch_add(1, std::memory_order_relaxed); }

std::size_t capped_extent(std::size_t ea, std::size_t eb,
                          std::optional<std::size_t> j_max) {
    std::size_t extent = ea + eb - 1;
    if (j_max && *j_max + 1 < extent) {
        extent = *j_max + 1;
    }
    return extent;
}

void check_budget(std::span<const std::size_t> shape, const char* what) {
    std::size_t count = 1;
    for (const std::size_t dim : shape) {
        if (dim == 0 || count > element_budget() / dim) {
            std::ostringstream msg;
            msg << what << " result exceeds the element budget of " << element_budget();
            throw CapacityError(msg.str());
        }
        count *= dim;
    }
}

} // namespace

DegreeTensor::DegreeTensor(DenseTensor inner) : inner_(std::move(inner)) {
    if (inner_.order() < 1) {
        throw ShapeError("a degree tensor needs at least the degree axis");
    }
}

std::vector<std::size_t> DegreeTensor::slice_shape() const {
    return {inner_.shape().begin() + 1, inner_.shape().end()};
}

std::span<const double> DegreeTensor::slice(std::size_t j) const {
    return inner_.elements().subspan(j * slice_size(), slice_size());
}

std::span<double> DegreeTensor::slice(std::size_t j) {
    return inner_.elements().subspan(j * slice_size(), slice_size());
}

DenseTensor DegreeTensor::slice_tensor(std::size_t j) const {
    const auto view = slice(j);
    return DenseTensor(slice_shape(), std::vector<double>(view.begin(), view.end()));
}

DegreeTensor lift(const DenseTensor& a) { return lift(DenseTensor(a)); }

DegreeTensor lift(DenseTensor&& a) {
    std::vector<std::size_t> shape;
    shape.reserve(a.order() + 1);
    shape.push_back(1);
    shape.insert(shape.end(), a.shape().begin(), a.shape().end());
    return DegreeTensor(std::move(a).reshaped(std::move(shape)));
}

DenseTensor h_feature(double x) {
    if (!std::isfinite(x)) {
        throw ValueError("feature value must be finite");
    }
    return DenseTensor({2}, {1.0, x});
}

DegreeTensor h_feature_matrix(double x) {
    if (!std::isfinite(x)) {
        throw ValueError("feature value must be finite");
    }
    return DegreeTensor(DenseTensor({2, 2}, {1.0, 0.0, 0.0, x}));
}

DegreeTensor degree_product(const DegreeTensor& a, const DegreeTensor& b,
                            std::optional<std::size_t> j_max) {
    const std::size_t extent = capped_extent(a.degree_extent(), b.degree_extent(), j_max);

    std::vector<std::size_t> shape;
    shape.push_back(extent);
    const auto a_rest = a.slice_shape();
    const auto b_rest = b.slice_shape();
    shape.insert(shape.end(), a_rest.begin(), a_rest.end());
    shape.insert(shape.end(), b_rest.begin(), b_rest.end());

    check_budget(shape, "degree product");
    DenseTensor out_inner{shape};

    const std::size_t sa = a.slice_size();
    const std::size_t sb = b.slice_size();
    const std::size_t so = sa * sb;
    for (std::size_t j = 0; j < extent; ++j) {
        double* dst = out_inner.data() + j * so;
        const std::size_t ja_lo = (j + 1 > b.degree_extent()) ? j + 1 - b.degree_extent() : 0;
        const std::size_t ja_hi = std::min(j, a.degree_extent() - 1);
        for (std::size_t ja = ja_lo; ja <= ja_hi; ++ja) {
            const std::size_t jb = j - ja;
            kernels::matmul(a.slice(ja).data(), b.slice(jb).data(), dst, sa, 1, sb, true);
            bump_slice_ops();
        }
    }
    return DegreeTensor(std::move(out_inner));
}

DegreeTensor degree_contract(const DegreeTensor& a, const DegreeTensor& b,
                             std::span<const AxisPair> pairs,
                             std::optional<std::size_t> j_max) {
    for (const auto& [ax_a, ax_b] : pairs) {
        if (ax_a == 0 || ax_b == 0) {
            throw ShapeError("cannot contract a degree axis");
        }
    }

    const std::size_t ea = a.degree_extent();
    const std::size_t eb = b.degree_extent();
    const std::size_t extent = capped_extent(ea, eb, j_max);

    // Pairs mapped down to slice axes (degree axis stripped).
    std::vector<AxisPair> slice_pairs;
    slice_pairs.reserve(pairs.size());
    for (const auto& [ax_a, ax_b] : pairs) {
        slice_pairs.emplace_back(ax_a - 1, ax_b - 1);
    }

    // Validate + plan against slice shapes: permute each operand once so
    // every slice pair reduces to one matrix multiply.
    const auto a_slice_shape = a.slice_shape();
    const auto b_slice_shape = b.slice_shape();
    std::vector<bool> used_a(a_slice_shape.size(), false);
    std::vector<bool> used_b(b_slice_shape.size(), false);
    for (const auto& [ax_a, ax_b] : slice_pairs) {
        if (ax_a >= a_slice_shape.size() || ax_b >= b_slice_shape.size()) {
            throw ShapeError("degree contraction axis out of range");
        }
        if (used_a[ax_a] || used_b[ax_b]) {
            throw ShapeError("contraction axes must be distinct within each operand");
        }
        used_a[ax_a] = true;
        used_b[ax_b] = true;
        if (a_slice_shape[ax_a] != b_slice_shape[ax_b]) {
            std::ostringstream msg;
            msg << "contracted axis sizes differ: axis " << ax_a + 1 << " of a has size "
                << a_slice_shape[ax_a] << ", axis " << ax_b + 1 << " of b has size "
                << b_slice_shape[ax_b];
            throw ShapeError(msg.str());
        }
    }

    // a -> [degree, free..., contracted...]; b -> [degree, contracted..., free...]
    std::vector<std::size_t> perm_a{0};
    std::vector<std::size_t> perm_b{0};
    std::vector<std::size_t> out_shape{extent};
    std::size_t rows = 1;
    std::size_t inner = 1;
    std::size_t cols = 1;
    for (std::size_t d = 0; d < a_slice_shape.size(); ++d) {
        if (!used_a[d]) {
            perm_a.push_back(d + 1);
            rows *= a_slice_shape[d];
            out_shape.push_back(a_slice_shape[d]);
        }
    }
    for (const auto& [ax_a, ax_b] : slice_pairs) {
        perm_a.push_back(ax_a + 1);
        perm_b.push_back(ax_b + 1);
        inner *= a_slice_shape[ax_a];
    }
    for (std::size_t d = 0; d < b_slice_shape.size(); ++d) {
        if (!used_b[d]) {
            perm_b.push_back(d + 1);
            cols *= b_slice_shape[d];
            out_shape.push_back(b_slice_shape[d]);
        }
    }

    check_budget(out_shape, "degree contraction");
    const DenseTensor a_perm = permute_axes(a.inner(), perm_a);
    const DenseTensor b_perm = permute_axes(b.inner(), perm_b);

    DenseTensor out_inner{out_shape};

    const std::size_t sa = rows * inner;
    const std::size_t sb = inner * cols;
    const std::size_t so = rows * cols;
    for (std::size_t j = 0; j < extent; ++j) {
        double* dst = out_inner.data() + j * so;
        const std::size_t ja_lo = (j + 1 > eb) ? j + 1 - eb : 0;
        const std::size_t ja_hi = std::min(j, ea - 1);
        for (std::size_t ja = ja_lo; ja <= ja_hi; ++ja) {
            const std::size_t jb = j - ja;
            kernels::matmul(a_perm.data() + ja * sa, b_perm.data() + jb * sb, dst,
                            rows, inner, cols, true);
            bump_slice_ops();
        }
    }
    return DegreeTensor(std::move(out_inner));
}

DegreeTensor degree_contract(const DegreeTensor& a, const DegreeTensor& b,
                             std::initializer_list<AxisPair> pairs,
                             std::optional<std::size_t> j_max) {
    return degree_contract(a, b, std::span<const AxisPair>(pairs.begin(), pairs.size()),
                           j_max);
}

std::size_t term_count(std::size_t j_bar_a, std::size_t j_bar_b) {
    return (j_bar_a + 1) * (j_bar_b + 1);
}

DenseTensor collapse(const DegreeTensor& a) {
    DenseTensor out(a.slice_shape());
    for (std::size_t j = 0; j < a.degree_extent(); ++j) {
        kernels::axpy(1.0, a.slice(j).data(), out.data(), out.size());
    }
    return out;
}

std::uint64_t slice_op_count() noexcept {
    return g_slice_ops.load(std::memory_order_relaxed);
}

void reset_slice_op_count() noexcept { g_slice_ops.store(0, std::memory_order_relaxed); }

} // namespace tnid
