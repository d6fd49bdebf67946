#pragma once

#include "tnid/evaluator.hpp"
#include "tnid/tensor.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace tnid {

enum class ModelKind : std::uint8_t { tensor_ring = 0, tree_tensor_network = 1 };

// Closed ring of m feature cores plus one dedicated output core. Feature
// core i is (r, 2, r): left virtual x physical x right virtual. The output
// core (r, n, r) sits between feature cores m-1 and 0.
struct TensorRingModel {
    std::size_t m = 0;
    std::size_t r = 0;
    std::size_t n = 0;
    std::size_t output_position = 0; // ring slot of the output core (fixed at m)
    std::vector<DenseTensor> feature_cores;
    DenseTensor output_core;

    std::size_t feature_parameter_count() const; // == 2 m r^2
    std::size_t parameter_count() const;
};

// Binary tree over m = 2^layers features. Leaves are (2, 2, r) and consume
// feature pairs; internal cores are (r, r, r); the top core carries the
// output axis, (r, r, n). When layers == 1 the top core is the whole model,
// shaped (2, 2, n).
struct TreeTensorNetworkModel {
    std::size_t m = 0;
    std::size_t r = 0;
    std::size_t n = 0;
    std::size_t layers = 0;
    std::vector<DenseTensor> leaf_cores;
    std::vector<std::vector<DenseTensor>> internal_cores; // index 0 = layer 2
    DenseTensor top_core;

    std::size_t parameter_count() const;
};

using Model = std::variant<TensorRingModel, TreeTensorNetworkModel>;

struct ModelDims {
    std::size_t m = 0;
    std::size_t r = 0;
    std::size_t n = 0;
};

ModelKind kind_of(const Model& model);
ModelDims dims_of(const Model& model);

// Trainable cores in the fixed traversal order shared by the checkpoint
// format, the gradient registry and the optimizer: ring = feature cores
// 0..m-1 then the output core; tree = leaves left-to-right, internal layers
// bottom-up left-to-right, then the top core.
std::vector<DenseTensor*> parameter_cores(TensorRingModel& model);
std::vector<DenseTensor*> parameter_cores(TreeTensorNetworkModel& model);
std::vector<DenseTensor*> parameter_cores(Model& model);
std::vector<const DenseTensor*> parameter_cores(const Model& model);

// The set D of interaction degrees a model regresses on.
struct DegreeSet {
    enum class Kind { full, cumulative, single, custom };

    Kind kind = Kind::full;
    std::vector<std::size_t> degrees; // sorted ascending, nonempty

    static DegreeSet full(std::size_t m);
    static DegreeSet cumulative(std::size_t j);
    static DegreeSet single(std::size_t j);
    static DegreeSet custom(std::vector<std::size_t> degrees);
    // "full" | "cum:J" | "deg:J" | comma-separated list, e.g. "0,2,5".
    static DegreeSet parse(std::string_view text, std::size_t m);

    std::size_t max_degree() const;
    bool contains(std::size_t j) const;
    // Filename-safe tag: "full", "cum2", "deg1", "set0-2-5".
    std::string tag() const;
};

// Contraction schedules, shared between eager evaluation and the gradient
// tape. The model argument supplies structure only; core values are
// resolved through Evaluator::parameter.
int tr_forward_plan(Evaluator& ev, const TensorRingModel& model, std::span<const double> x);
int ttn_forward_plan(Evaluator& ev, const TreeTensorNetworkModel& model,
                     std::span<const double> x);
int tr_decompose_plan(Evaluator& ev, const TensorRingModel& model, std::span<const double> x,
                      std::size_t j_max);
int ttn_decompose_plan(Evaluator& ev, const TreeTensorNetworkModel& model,
                       std::span<const double> x, std::size_t j_max);
int forward_plan(Evaluator& ev, const Model& model, std::span<const double> x);
int decompose_plan(Evaluator& ev, const Model& model, std::span<const double> x,
                   std::size_t j_max);
// Sums the requested decomposition rows; cap = max of the set.
int d_degree_plan(Evaluator& ev, const Model& model, std::span<const double> x,
                  const DegreeSet& dset);

std::vector<double> tr_forward(const TensorRingModel& model, std::span<const double> x);
std::vector<double> ttn_forward(const TreeTensorNetworkModel& model, std::span<const double> x);
std::vector<double> forward(const Model& model, std::span<const double> x);

// Rows 0..j_max of the interaction decomposition, shape (j_max + 1, n).
// Row j is the degree-j contribution; rows are exact regardless of the cap.
DenseTensor interaction_decompose(const Model& model, std::span<const double> x,
                                  std::size_t j_max);

std::vector<double> d_degree_forward(const Model& model, std::span<const double> x,
                                     const DegreeSet& dset);

// "identity-plus-noise": pass-through structure plus gaussian noise of the
// given standard deviation on every element (cores whose perturbation is
// summed over r^2 virtual paths take noise_std / r). Feature channels (the
// x-multiplied slices) start feature_gain times louder than the
// pass-through perturbation. The 1/r trace normalization and a 1/n output
// scale - so untrained outputs sit at the one-hot target mean - are folded
// into the output / top core.
struct InitScheme {
    double noise_std = 0.03;
    double feature_gain = 5.0;
    std::uint8_t tag() const { return 0; }
};

TensorRingModel init_tr(std::size_t m, std::size_t r, std::size_t n, std::uint64_t seed,
                        const InitScheme& scheme = {});
TreeTensorNetworkModel init_ttn(std::size_t m, std::size_t r, std::size_t n,
                                std::uint64_t seed, const InitScheme& scheme = {});
Model init_model(ModelKind kind, std::size_t m, std::size_t r, std::size_t n,
                 std::uint64_t seed, const InitScheme& scheme = {});

} // namespace tnid
