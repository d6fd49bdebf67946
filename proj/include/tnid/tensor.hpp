#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace tnid {

// Dense multidimensional array of doubles, row-major, immutable by
// convention once built (operations return new values). Order 0 is a
// scalar holding one element.
class DenseTensor {
public:
    // Order-0 scalar, value 0.
    DenseTensor() : elements_(1, 0.0) {}

    static DenseTensor scalar(double value);

    // Zero-filled tensor of the given shape. Every dimension must be >= 1.
    explicit DenseTensor(std::vector<std::size_t> shape);

    DenseTensor(std::vector<std::size_t> shape, std::vector<double> elements);

    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t order() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return elements_.size(); }

    double* data() noexcept { return elements_.data(); }
    const double* data() const noexcept { return elements_.data(); }
    std::span<double> elements() noexcept { return elements_; }
    std::span<const double> elements() const noexcept { return elements_; }

    double& operator[](std::size_t flat) { return elements_[flat]; }
    double operator[](std::size_t flat) const { return elements_[flat]; }

    // Row-major strides, computed on demand.
    std::vector<std::size_t> strides() const;
    std::size_t flat_index(std::span<const std::size_t> index) const;
    double at(std::span<const std::size_t> index) const { return elements_[flat_index(index)]; }

    bool all_finite() const noexcept;
    bool same_shape(const DenseTensor& other) const noexcept { return shape_ == other.shape_; }

    // Reinterprets the flat elements under a new shape of equal size.
    DenseTensor reshaped(std::vector<std::size_t> shape) const&;
    DenseTensor reshaped(std::vector<std::size_t> shape) &&;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> elements_;
};

// Cap on the element count any single operation result may have; guards the
// 2^m blow-up of brute-force paths. Default 2^26.
std::size_t element_budget() noexcept;
void set_element_budget(std::size_t budget) noexcept;

// (axis of a, axis of b)
using AxisPair = std::pair<std::size_t, std::size_t>;

// Outer product: result shape is concat(a.shape, b.shape).
DenseTensor tensor_product(const DenseTensor& a, const DenseTensor& b);

// Sums a x b over the paired axes. Result axes: uncontracted axes of a in
// order, then of b. Zero pairs reproduces tensor_product bit-exactly.
DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     std::span<const AxisPair> pairs);
DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     std::initializer_list<AxisPair> pairs);

// numpy-style transpose: result axis k is a's axis perm[k]. Applying the
// inverse permutation restores the input bit-exactly.
DenseTensor permute_axes(const DenseTensor& a, std::span<const std::size_t> perm);
DenseTensor permute_axes(const DenseTensor& a, std::initializer_list<std::size_t> perm);

// Elementwise y += alpha * x (shape-checked); used by adjoint accumulation
// and the optimizer.
void add_scaled(DenseTensor& y, double alpha, const DenseTensor& x);

} // namespace tnid
