#include "tnid/evaluator.hpp"

#include "tnid/degree.hpp"
#include "tnid/error.hpp"

namespace tnid {

int EagerEvaluator::push(DenseTensor owned) {
    values_.push_back({std::move(owned), nullptr});
    return static_cast<int>(values_.size()) - 1;
}

int EagerEvaluator::constant(DenseTensor value) { return push(std::move(value)); }

int EagerEvaluator::parameter(std::size_t slot) {
    if (slot >= params_.size()) {
        throw ShapeError("parameter slot out of range");
    }
    values_.push_back({DenseTensor{}, params_[slot]});
    return static_cast<int>(values_.size()) - 1;
}

int EagerEvaluator::contract(int a, int b, std::vector<AxisPair> pairs) {
    return push(tnid::contract(value(a), value(b), pairs));
}

int EagerEvaluator::degree_contract(int a, int b, std::vector<AxisPair> pairs,
                                    std::optional<std::size_t> j_max) {
    DegreeTensor result = tnid::degree_contract(DegreeTensor(value(a)), DegreeTensor(value(b)),
                                                pairs, j_max);
    return push(std::move(result.inner()));
}

int EagerEvaluator::lift(int a) {
    DegreeTensor lifted = tnid::lift(DenseTensor(value(a)));
    return push(std::move(lifted.inner()));
}

const DenseTensor& EagerEvaluator::value(int id) const {
    const Slot& slot = values_.at(static_cast<std::size_t>(id));
    return slot.borrowed ? *slot.borrowed : slot.owned;
}

} // namespace tnid
