#pragma once

#include "tnid/evaluator.hpp"
#include "tnid/tensor.hpp"

#include <optional>
#include <span>
#include <vector>

namespace tnid {

// Records the forward operation graph and replays it in reverse to produce
// adjoints for every registered parameter. One adjoint rule per primitive:
// the adjoint of a contraction operand is the contraction of the output
// adjoint with the other operand over the complementary axes; the degree
// convolution transposes to a correlation over the degree index.
class GradientTape final : public Evaluator {
public:
    explicit GradientTape(std::vector<const DenseTensor*> params);

    // Drops recorded nodes and gradients; keeps the parameter registry.
    void reset();

    int constant(DenseTensor value) override;
    int parameter(std::size_t slot) override;
    int contract(int a, int b, std::vector<AxisPair> pairs) override;
    int degree_contract(int a, int b, std::vector<AxisPair> pairs,
                        std::optional<std::size_t> j_max) override;
    int lift(int a) override;
    const DenseTensor& value(int id) const override;

    // Mean squared error against a target vector; returns a scalar node.
    int mse(int pred, std::span<const double> target);

    double scalar(int id) const;

    // Seeds the loss adjoint and back-propagates. Call once per recording.
    void backward(int loss, double seed = 1.0);

    bool has_grad(std::size_t slot) const;
    // Adjoint for the parameter in this slot; throws if the recording never
    // touched it (check has_grad first).
    const DenseTensor& grad(std::size_t slot) const;

    std::size_t parameter_count() const { return params_.size(); }

private:
    enum class Op { constant, parameter, contract, degree_contract, lift, mse };

    struct Node {
        Op op;
        int a = -1;
        int b = -1;
        std::vector<AxisPair> pairs;
        std::optional<std::size_t> j_max;
        std::size_t slot = 0;
        std::vector<double> target;
        DenseTensor value;
        const DenseTensor* borrowed = nullptr;
        DenseTensor adjoint;
        bool has_adjoint = false;
        bool needs_grad = false;
    };

    int push(Node node);
    const DenseTensor& node_value(const Node& node) const;
    void accumulate(int id, DenseTensor delta);
    void check_id(int id) const;

    std::vector<Node> nodes_;
    std::vector<const DenseTensor*> params_;
    std::vector<DenseTensor> param_grads_;
    std::vector<bool> param_grad_set_;
    bool backward_done_ = false;
};

} // namespace tnid
