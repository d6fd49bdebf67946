#pragma once

#include "tnid/tensor.hpp"

#include <optional>
#include <vector>

namespace tnid {

// The contraction schedules in model.cpp are written against this
// interface, so the eager path and the reverse-mode tape execute the
// identical sequence of operations. Degree-tensor operands are passed as
// their inner DenseTensor; axis 0 is the degree index by convention.
class Evaluator {
public:
    virtual ~Evaluator() = default;

    virtual int constant(DenseTensor value) = 0;
    // Trainable core, identified by its registry slot.
    virtual int parameter(std::size_t slot) = 0;
    virtual int contract(int a, int b, std::vector<AxisPair> pairs) = 0;
    virtual int degree_contract(int a, int b, std::vector<AxisPair> pairs,
                                std::optional<std::size_t> j_max) = 0;
    // Prepends a size-one degree axis.
    virtual int lift(int a) = 0;

    virtual const DenseTensor& value(int id) const = 0;
};

// Computes values immediately; parameters are borrowed, never copied.
class EagerEvaluator final : public Evaluator {
public:
    EagerEvaluator() = default;
    explicit EagerEvaluator(std::vector<const DenseTensor*> params)
        : params_(std::move(params)) {}

    int constant(DenseTensor value) override;
    int parameter(std::size_t slot) override;
    int contract(int a, int b, std::vector<AxisPair> pairs) override;
    int degree_contract(int a, int b, std::vector<AxisPair> pairs,
                        std::optional<std::size_t> j_max) override;
    int lift(int a) override;
    const DenseTensor& value(int id) const override;

private:
    int push(DenseTensor owned);

    struct Slot {
        DenseTensor owned;
        const DenseTensor* borrowed = nullptr;
    };
    std::vector<const DenseTensor*> params_;
    std::vector<Slot> values_;
};

} // namespace tnid
