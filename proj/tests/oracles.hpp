#pragma once

// Independent brute-force oracles backing the unit and acceptance suites.
// Everything here is nested loops and index arithmetic; none of it goes
// through the library's permute/matmul contraction path.

#include "tnid/degree.hpp"
#include "tnid/model.hpp"
#include "tnid/rng.hpp"
#include "tnid/tensor.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace oracle {

tnid::DenseTensor tensor_product(const tnid::DenseTensor& a, const tnid::DenseTensor& b);

tnid::DenseTensor contract(const tnid::DenseTensor& a, const tnid::DenseTensor& b,
                           std::span<const tnid::AxisPair> pairs);

// Full weight tensor W of a small network, flattened as W[k * 2^m + bits]
// where bit i of `bits` is the exponent of feature i.
std::vector<double> full_weight(const tnid::Model& model);

// f_k = sum_bits W[k, bits] * prod_i x_i^{bit_i}
std::vector<double> forward_from_weight(std::span<const double> weight, std::size_t n,
                                        std::span<const double> x);

// Row j: the Hamming-weight-j part of the sum above (the P^(j) projector).
std::vector<std::vector<double>> decompose_from_weight(std::span<const double> weight,
                                                       std::size_t n,
                                                       std::span<const double> x);

tnid::DegreeTensor degree_product(const tnid::DegreeTensor& a, const tnid::DegreeTensor& b,
                                  std::optional<std::size_t> j_max = {});

tnid::DegreeTensor degree_contract(const tnid::DegreeTensor& a, const tnid::DegreeTensor& b,
                                   std::span<const tnid::AxisPair> pairs,
                                   std::optional<std::size_t> j_max = {});

// Central finite differences of a scalar callable with respect to every
// element of every registered core.
std::vector<tnid::DenseTensor> finite_difference_grads(
    std::vector<tnid::DenseTensor*> cores, const std::function<double()>& loss, double step);

// Area-weighted 28x28 -> 8x8 cell value by direct quadrature.
double box_cell_oracle(std::span<const std::uint8_t> image, std::size_t cell_row,
                       std::size_t cell_col);

double relative_error(double got, double want);
double max_relative_error(std::span<const double> got, std::span<const double> want);

tnid::DenseTensor random_tensor(std::vector<std::size_t> shape, tnid::Rng& rng,
                                double scale = 1.0);

} // namespace oracle
