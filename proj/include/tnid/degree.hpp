#pragma once

#include "tnid/tensor.hpp"

#include <cstdint>
#include <optional>

namespace tnid {

// Tensor whose leading axis is a degree index: slice j along axis 0 carries
// the interaction-degree-j part of the value. Built by lift / h_feature_matrix
// and combined with the degree-preserving product and contraction below.
class DegreeTensor {
public:
    explicit DegreeTensor(DenseTensor inner);

    std::size_t degree_extent() const noexcept { return inner_.shape()[0]; }
    const DenseTensor& inner() const noexcept { return inner_; }
    DenseTensor& inner() noexcept { return inner_; }

    std::size_t slice_size() const noexcept { return inner_.size() / degree_extent(); }
    std::vector<std::size_t> slice_shape() const;
    std::span<const double> slice(std::size_t j) const;
    std::span<double> slice(std::size_t j);
    DenseTensor slice_tensor(std::size_t j) const;

private:
    DenseTensor inner_;
};

// Adds a size-one degree index in front; element data unchanged.
DegreeTensor lift(const DenseTensor& a);
DegreeTensor lift(DenseTensor&& a);

// The [1, x] featurization.
DenseTensor h_feature(double x);

// 2x2 degree-indexed featurization: slice 0 = [1, 0], slice 1 = [0, x], so
// the degree label of each nonzero entry equals its interaction degree.
DegreeTensor h_feature_matrix(double x);

// Degree-preserving tensor product: output slice j is the sum over
// ja + jb = j of slice_a(ja) x slice_b(jb), accumulated ja-ascending.
// j_max caps the output extent at j_max + 1 (eager truncation).
DegreeTensor degree_product(const DegreeTensor& a, const DegreeTensor& b,
                            std::optional<std::size_t> j_max = {});

// Degree-preserving contraction over non-degree axes, fused: the full
// product is never materialized. Pair axes index the whole tensors and must
// exclude the degree axis 0.
DegreeTensor degree_contract(const DegreeTensor& a, const DegreeTensor& b,
                             std::span<const AxisPair> pairs,
                             std::optional<std::size_t> j_max = {});
DegreeTensor degree_contract(const DegreeTensor& a, const DegreeTensor& b,
                             std::initializer_list<AxisPair> pairs,
                             std::optional<std::size_t> j_max = {});

// Number of slice products an uncapped degree product performs,
// s = (j_bar_a + 1)(j_bar_b + 1), where j_bar is the largest degree label.
std::size_t term_count(std::size_t j_bar_a, std::size_t j_bar_b);

// Sums over the degree axis; collapse(degree_product(a,b)) recovers
// tensor_product(collapse(a), collapse(b)).
DenseTensor collapse(const DegreeTensor& a);

// Instrumentation: slice products executed by degree_product/degree_contract
// since the last reset. Process-wide.
std::uint64_t slice_op_count() noexcept;
void reset_slice_op_count() noexcept;

} // namespace tnid
