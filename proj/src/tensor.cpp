#include "tnid/tensor.hpp"

#include "tnid/error.hpp"
#include "tnid/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <sstream>

namespace tnid {

namespace {

std::atomic<std::size_t> g_element_budget{std::size_t{1} << 26};

std::size_t checked_element_count(std::span<const std::size_t> shape) {
    std::size_t count = 1;
    for (const std::size_t dim : shape) {
        if (dim == 0) {
            throw ShapeError("tensor dimensions must be positive");
        }
        if (count > element_budget() / dim) {
            std::ostringstream msg;
            msg << "tensor of shape (";
            for (std::size_t i = 0; i < shape.size(); ++i) {
                msg << (i ? "," : "") << shape[i];
            }
            msg << ") exceeds the element budget of " << element_budget();
            throw CapacityError(msg.str());
        }
        count *= dim;
    }
    return count;
}

std::size_t plain_element_count(std::span<const std::size_t> shape) {
    std::size_t count = 1;
    for (const std::size_t dim : shape) {
        if (dim == 0) {
            throw ShapeError("tensor dimensions must be positive");
        }
        if (count > SIZE_MAX / dim) {
            throw CapacityError("tensor shape overflows the addressable size");
        }
        count *= dim;
    }
    return count;
}

} // namespace

DenseTensor DenseTensor::scalar(double value) {
    DenseTensor t;
    t.elements_[0] = value;
    return t;
}

DenseTensor::DenseTensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), elements_(plain_element_count(shape_), 0.0) {}

DenseTensor::DenseTensor(std::vector<std::size_t> shape, std::vector<double> elements)
    : shape_(std::move(shape)), elements_(std::move(elements)) {
    if (plain_element_count(shape_) != elements_.size()) {
        throw ShapeError("element count does not match shape");
    }
}

std::vector<std::size_t> DenseTensor::strides() const {
    std::vector<std::size_t> s(shape_.size(), 1);
    for (std::size_t d = shape_.size(); d-- > 1;) {
        s[d - 1] = s[d] * shape_[d];
    }
    return s;
}

std::size_t DenseTensor::flat_index(std::span<const std::size_t> index) const {
    if (index.size() != shape_.size()) {
        throw ShapeError("index order does not match tensor order");
    }
    std::size_t flat = 0;
    for (std::size_t d = 0; d < shape_.size(); ++d) {
        if (index[d] >= shape_[d]) {
            throw ShapeError("index out of range");
        }
        flat = flat * shape_[d] + index[d];
    }
    return flat;
}

bool DenseTensor::all_finite() const noexcept {
    for (const double v : elements_) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

DenseTensor DenseTensor::reshaped(std::vector<std::size_t> shape) const& {
    return DenseTensor(std::move(shape), elements_);
}

DenseTensor DenseTensor::reshaped(std::vector<std::size_t> shape) && {
    return DenseTensor(std::move(shape), std::move(elements_));
}

std::size_t element_budget() noexcept {
    return g_element_budget.load(std::memory_order_relaxed);
}

void set_element_budget(std::size_t budget) noexcept {
    g_element_budget.store(budget == 0 ? 1 : budget, std::memory_order_relaxed);
}

DenseTensor tensor_product(const DenseTensor& a, const DenseTensor& b) {
    std::vector<std::size_t> shape;
    shape.reserve(a.order() + b.order());
    shape.insert(shape.end(), a.shape().begin(), a.shape().end());
    shape.insert(shape.end(), b.shape().begin(), b.shape().end());
    checked_element_count(shape);
    DenseTensor out(std::move(shape));
    kernels::matmul(a.data(), b.data(), out.data(), a.size(), 1, b.size(), false);
    return out;
}

namespace {

struct ContractPlan {
    std::vector<std::size_t> a_free;
    std::vector<std::size_t> b_free;
    std::vector<std::size_t> perm_a; // a -> [a_free..., contracted (pair order)...]
    std::vector<std::size_t> perm_b; // b -> [contracted (pair order)..., b_free...]
    std::vector<std::size_t> out_shape;
    std::size_t rows = 1;
    std::size_t inner = 1;
    std::size_t cols = 1;
};

bool is_identity(std::span<const std::size_t> perm) {
    for (std::size_t i = 0; i < perm.size(); ++i) {
        if (perm[i] != i) {
            return false;
        }
    }
    return true;
}

ContractPlan make_plan(std::span<const std::size_t> shape_a,
                       std::span<const std::size_t> shape_b,
                       std::span<const AxisPair> pairs) {
    std::vector<bool> used_a(shape_a.size(), false);
    std::vector<bool> used_b(shape_b.size(), false);
    for (const auto& [ax_a, ax_b] : pairs) {
        if (ax_a >= shape_a.size() || ax_b >= shape_b.size()) {
            std::ostringstream msg;
            msg << "contraction axis out of range: (" << ax_a << "," << ax_b
                << ") for orders (" << shape_a.size() << "," << shape_b.size() << ")";
            throw ShapeError(msg.str());
        }
        if (used_a[ax_a] || used_b[ax_b]) {
            throw ShapeError("contraction axes must be distinct within each operand");
        }
        used_a[ax_a] = true;
        used_b[ax_b] = true;
        if (shape_a[ax_a] != shape_b[ax_b]) {
            std::ostringstream msg;
            msg << "contracted axis sizes differ: axis " << ax_a << " of a has size "
                << shape_a[ax_a] << ", axis " << ax_b << " of b has size " << shape_b[ax_b];
            throw ShapeError(msg.str());
        }
    }

    ContractPlan plan;
    for (std::size_t d = 0; d < shape_a.size(); ++d) {
        if (!used_a[d]) {
            plan.a_free.push_back(d);
            plan.rows *= shape_a[d];
            plan.out_shape.push_back(shape_a[d]);
        }
    }
    for (std::size_t d = 0; d < shape_b.size(); ++d) {
        if (!used_b[d]) {
            plan.b_free.push_back(d);
            plan.cols *= shape_b[d];
        }
    }
    for (const std::size_t d : plan.b_free) {
        plan.out_shape.push_back(shape_b[d]);
    }
    plan.perm_a = plan.a_free;
    for (const auto& [ax_a, ax_b] : pairs) {
        plan.perm_a.push_back(ax_a);
        plan.inner *= shape_a[ax_a];
        plan.perm_b.push_back(ax_b);
    }
    plan.perm_b.insert(plan.perm_b.end(), plan.b_free.begin(), plan.b_free.end());
    return plan;
}

} // namespace

DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     std::span<const AxisPair> pairs) {
    const ContractPlan plan = make_plan(a.shape(), b.shape(), pairs);
    checked_element_count(plan.out_shape);

    // permute -> reshape to matrices -> multiply -> reshape back.
    const DenseTensor* lhs = &a;
    DenseTensor lhs_storage;
    if (!is_identity(plan.perm_a)) {
        lhs_storage = permute_axes(a, plan.perm_a);
        lhs = &lhs_storage;
    }
    const DenseTensor* rhs = &b;
    DenseTensor rhs_storage;
    if (!is_identity(plan.perm_b)) {
        rhs_storage = permute_axes(b, plan.perm_b);
        rhs = &rhs_storage;
    }

    DenseTensor out(plan.out_shape);
    kernels::matmul(lhs->data(), rhs->data(), out.data(), plan.rows, plan.inner,
                    plan.cols, false);
    return out;
}

DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     std::initializer_list<AxisPair> pairs) {
    return contract(a, b, std::span<const AxisPair>(pairs.begin(), pairs.size()));
}

DenseTensor permute_axes(const DenseTensor& a, std::span<const std::size_t> perm) {
    const std::size_t ord = a.order();
    if (perm.size() != ord) {
        throw ShapeError("permutation length does not match tensor order");
    }
    std::vector<bool> seen(ord, false);
    for (const std::size_t p : perm) {
        if (p >= ord || seen[p]) {
            throw ShapeError("invalid axis permutation");
        }
        seen[p] = true;
    }
    if (is_identity(perm)) {
        return a;
    }

    std::vector<std::size_t> out_shape(ord);
    const std::vector<std::size_t> in_strides = a.strides();
    std::vector<std::size_t> gather_stride(ord); // stride in a for each output axis
    for (std::size_t d = 0; d < ord; ++d) {
        out_shape[d] = a.shape()[perm[d]];
        gather_stride[d] = in_strides[perm[d]];
    }

    DenseTensor out(out_shape);
    // Odometer over the output index; src tracks the matching input offset.
    std::vector<std::size_t> idx(ord, 0);
    std::size_t src = 0;
    double* dst = out.data();
    const double* in = a.data();
    const std::size_t total = out.size();
    for (std::size_t flat = 0; flat < total; ++flat) {
        dst[flat] = in[src];
        for (std::size_t d = ord; d-- > 0;) {
            if (++idx[d] < out_shape[d]) {
                src += gather_stride[d];
                break;
            }
            src -= gather_stride[d] * (out_shape[d] - 1);
            idx[d] = 0;
        }
    }
    return out;
}

DenseTensor permute_axes(const DenseTensor& a, std::initializer_list<std::size_t> perm) {
    return permute_axes(a, std::span<const std::size_t>(perm.begin(), perm.size()));
}

void add_scaled(DenseTensor& y, double alpha, const DenseTensor& x) {
    if (!y.same_shape(x)) {
        throw ShapeError("add_scaled requires identical shapes");
    }
    kernels::axpy(alpha, x.data(), y.data(), y.size());
}

} // namespace tnid
