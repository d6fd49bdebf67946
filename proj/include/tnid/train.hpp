#pragma once

#include "tnid/data.hpp"
#include "tnid/model.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace tnid {

enum class OptimizerKind : std::uint8_t { sgd = 0, adam = 1 };

struct LossConfig {
    std::size_t batch_size = 128;
    double learning_rate = 1e-3;
    OptimizerKind optimizer = OptimizerKind::adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t epochs = 30;
    std::uint64_t seed = 1;
};

// (1/n) sum_k (pred_k - target_k)^2
double mse_loss(std::span<const double> pred, std::span<const double> target);

// argmax with ties broken toward the lowest class index.
std::size_t predict_class(std::span<const double> outputs);

// Fraction of correct argmax predictions; the model's restricted forward is
// used when the degree set is not full.
double accuracy(const Model& model, const Dataset& ds, const DegreeSet& dset);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double test_accuracy = 0.0;
    double wall_time_s = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Minibatch gradient descent on one-hot MSE. Full-degree models contract
// normally; restricted models run the degree-decomposed forward capped at
// max(D). Deterministic for a fixed seed and thread count. Throws
// DivergenceError when the loss leaves (-1e9, 1e9) or turns non-finite.
std::vector<EpochRecord> train(Model& model, const Dataset& train_set,
                               const Dataset& test_set, const DegreeSet& dset,
                               const LossConfig& cfg, const EpochCallback& on_epoch = {});

} // namespace tnid
