#include "tnid/tape.hpp"

#include "tnid/degree.hpp"
#include "tnid/error.hpp"
#include "tnid/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace tnid {

namespace {

// Axis bookkeeping for the contraction adjoint rules. For
// C = contract(A, B, pairs) with A free axes FA and B free axes FB,
// C's axes are [FA..., FB...] and:
//   Abar = permute(contract(Cbar, B, {(|FA|+u, FB[u])}), back to A's layout)
//   Bbar = permute(contract(A, Cbar, {(FA[v], v)}), back to B's layout)
struct AdjointPlan {
    std::vector<std::size_t> free_a;
    std::vector<std::size_t> free_b;
    std::vector<AxisPair> pairs_for_a; // contract(Cbar, B, .)
    std::vector<AxisPair> pairs_for_b; // contract(A, Cbar, .)
    std::vector<std::size_t> perm_a;   // restores A's axis order
    std::vector<std::size_t> perm_b;   // restores B's axis order
};

AdjointPlan make_adjoint_plan(std::size_t order_a, std::size_t order_b,
                              std::span<const AxisPair> pairs) {
    AdjointPlan plan;
    std::vector<int> pair_of_a(order_a, -1);
    std::vector<int> pair_of_b(order_b, -1);
    for (std::size_t t = 0; t < pairs.size(); ++t) {
        pair_of_a[pairs[t].first] = static_cast<int>(t);
        pair_of_b[pairs[t].second] = static_cast<int>(t);
    }
    for (std::size_t d = 0; d < order_a; ++d) {
        if (pair_of_a[d] < 0) {
            plan.free_a.push_back(d);
        }
    }
    for (std::size_t d = 0; d < order_b; ++d) {
        if (pair_of_b[d] < 0) {
            plan.free_b.push_back(d);
        }
    }
    const std::size_t fa = plan.free_a.size();

    for (std::size_t u = 0; u < plan.free_b.size(); ++u) {
        plan.pairs_for_a.emplace_back(fa + u, plan.free_b[u]);
    }
    for (std::size_t v = 0; v < fa; ++v) {
        plan.pairs_for_b.emplace_back(plan.free_a[v], v);
    }

    // contract(Cbar, B, pairs_for_a) yields [FA..., B's contracted axes in
    // B-ascending order]; map each A axis to its source position.
    std::vector<std::size_t> contracted_b_sorted;
    for (std::size_t d = 0; d < order_b; ++d) {
        if (pair_of_b[d] >= 0) {
            contracted_b_sorted.push_back(d);
        }
    }
    plan.perm_a.resize(order_a);
    {
        std::size_t free_pos = 0;
        for (std::size_t d = 0; d < order_a; ++d) {
            if (pair_of_a[d] < 0) {
                plan.perm_a[d] = free_pos++;
            } else {
                const std::size_t partner = pairs[static_cast<std::size_t>(pair_of_a[d])].second;
                const auto it = std::find(contracted_b_sorted.begin(),
                                          contracted_b_sorted.end(), partner);
                plan.perm_a[d] =
                    fa + static_cast<std::size_t>(it - contracted_b_sorted.begin());
            }
        }
    }

    // contract(A, Cbar, pairs_for_b) yields [A's contracted axes ascending,
    // FB...].
    std::vector<std::size_t> contracted_a_sorted;
    for (std::size_t d = 0; d < order_a; ++d) {
        if (pair_of_a[d] >= 0) {
            contracted_a_sorted.push_back(d);
        }
    }
    plan.perm_b.resize(order_b);
    {
        std::size_t free_pos = 0;
        for (std::size_t d = 0; d < order_b; ++d) {
            if (pair_of_b[d] < 0) {
                plan.perm_b[d] = contracted_a_sorted.size() + free_pos++;
            } else {
                const std::size_t partner = pairs[static_cast<std::size_t>(pair_of_b[d])].first;
                const auto it = std::find(contracted_a_sorted.begin(),
                                          contracted_a_sorted.end(), partner);
                plan.perm_b[d] = static_cast<std::size_t>(it - contracted_a_sorted.begin());
            }
        }
    }
    return plan;
}

DenseTensor adjoint_for_a(const DenseTensor& cbar, const DenseTensor& b,
                          const AdjointPlan& plan) {
    return permute_axes(contract(cbar, b, plan.pairs_for_a), plan.perm_a);
}

DenseTensor adjoint_for_b(const DenseTensor& a, const DenseTensor& cbar,
                          const AdjointPlan& plan) {
    return permute_axes(contract(a, cbar, plan.pairs_for_b), plan.perm_b);
}

} // namespace

GradientTape::GradientTape(std::vector<const DenseTensor*> params)
    : params_(std::move(params)),
      param_grads_(params_.size()),
      param_grad_set_(params_.size(), false) {}

void GradientTape::reset() {
    nodes_.clear();
    std::fill(param_grad_set_.begin(), param_grad_set_.end(), false);
    backward_done_ = false;
}

int GradientTape::push(Node node) {
    nodes_.push_back(std::move(node));
    return static_cast<int>(nodes_.size()) - 1;
}

void GradientTape::check_id(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
        throw Error("tape node id out of range");
    }
}

const DenseTensor& GradientTape::node_value(const Node& node) const {
    return node.borrowed ? *node.borrowed : node.value;
}

int GradientTape::constant(DenseTensor value) {
    Node node;
    node.op = Op::constant;
    node.value = std::move(value);
    return push(std::move(node));
}

int GradientTape::parameter(std::size_t slot) {
    if (slot >= params_.size()) {
        throw Error("unregistered parameter slot");
    }
    Node node;
    node.op = Op::parameter;
    node.slot = slot;
    node.borrowed = params_[slot];
    node.needs_grad = true;
    return push(std::move(node));
}

int GradientTape::contract(int a, int b, std::vector<AxisPair> pairs) {
    check_id(a);
    check_id(b);
    Node node;
    node.op = Op::contract;
    node.a = a;
    node.b = b;
    node.value = tnid::contract(value(a), value(b), pairs);
    node.pairs = std::move(pairs);
    node.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    return push(std::move(node));
}

int GradientTape::degree_contract(int a, int b, std::vector<AxisPair> pairs,
                                  std::optional<std::size_t> j_max) {
    check_id(a);
    check_id(b);
    Node node;
    node.op = Op::degree_contract;
    node.a = a;
    node.b = b;
    {
        DegreeTensor result =
            tnid::degree_contract(DegreeTensor(value(a)), DegreeTensor(value(b)), pairs, j_max);
        node.value = std::move(result.inner());
    }
    node.pairs = std::move(pairs);
    node.j_max = j_max;
    node.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    return push(std::move(node));
}

int GradientTape::lift(int a) {
    check_id(a);
    Node node;
    node.op = Op::lift;
    node.a = a;
    {
        DegreeTensor lifted = tnid::lift(DenseTensor(value(a)));
        node.value = std::move(lifted.inner());
    }
    node.needs_grad = nodes_[a].needs_grad;
    return push(std::move(node));
}

int GradientTape::mse(int pred, std::span<const double> target) {
    check_id(pred);
    const DenseTensor& p = value(pred);
    if (p.order() != 1 || p.size() != target.size()) {
        throw ShapeError("prediction and target lengths differ");
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < target.size(); ++k) {
        const double diff = p[k] - target[k];
        sum += diff * diff;
    }
    Node node;
    node.op = Op::mse;
    node.a = pred;
    node.target.assign(target.begin(), target.end());
    node.value = DenseTensor::scalar(sum / static_cast<double>(target.size()));
    node.needs_grad = nodes_[pred].needs_grad;
    return push(std::move(node));
}

const DenseTensor& GradientTape::value(int id) const {
    check_id(id);
    return node_value(nodes_[static_cast<std::size_t>(id)]);
}

double GradientTape::scalar(int id) const {
    const DenseTensor& v = value(id);
    if (v.size() != 1) {
        throw ShapeError("node value is not a scalar");
    }
    return v[0];
}

void GradientTape::accumulate(int id, DenseTensor delta) {
    Node& node = nodes_[static_cast<std::size_t>(id)];
    if (!node.has_adjoint) {
        node.adjoint = std::move(delta);
        node.has_adjoint = true;
    } else {
        add_scaled(node.adjoint, 1.0, delta);
    }
}

void GradientTape::backward(int loss, double seed) {
    check_id(loss);
    if (backward_done_) {
        throw Error("backward already ran on this tape recording");
    }
    if (value(loss).size() != 1) {
        throw ShapeError("backward expects a scalar loss node");
    }
    if (!nodes_[static_cast<std::size_t>(loss)].needs_grad) {
        throw Error("loss does not depend on any registered parameter");
    }
    backward_done_ = true;
    accumulate(loss, DenseTensor::scalar(seed));

    for (std::size_t i = nodes_.size(); i-- > 0;) {
        Node& node = nodes_[i];
        if (!node.has_adjoint || !node.needs_grad) {
            continue;
        }
        switch (node.op) {
        case Op::constant:
            break;
        case Op::parameter: {
            if (!param_grad_set_[node.slot]) {
                param_grads_[node.slot] = node.adjoint;
                param_grad_set_[node.slot] = true;
            } else {
                add_scaled(param_grads_[node.slot], 1.0, node.adjoint);
            }
            break;
        }
        case Op::lift: {
            const DenseTensor& parent = value(node.a);
            accumulate(node.a, node.adjoint.reshaped(parent.shape()));
            break;
        }
        case Op::mse: {
            const DenseTensor& pred = value(node.a);
            const double scale = 2.0 * node.adjoint[0] / static_cast<double>(node.target.size());
            DenseTensor delta(pred.shape());
            for (std::size_t k = 0; k < node.target.size(); ++k) {
                delta[k] = scale * (pred[k] - node.target[k]);
            }
            accumulate(node.a, std::move(delta));
            break;
        }
        case Op::contract: {
            const DenseTensor& a_val = value(node.a);
            const DenseTensor& b_val = value(node.b);
            const AdjointPlan plan =
                make_adjoint_plan(a_val.order(), b_val.order(), node.pairs);
            if (nodes_[static_cast<std::size_t>(node.a)].needs_grad) {
                accumulate(node.a, adjoint_for_a(node.adjoint, b_val, plan));
            }
            if (nodes_[static_cast<std::size_t>(node.b)].needs_grad) {
                accumulate(node.b, adjoint_for_b(a_val, node.adjoint, plan));
            }
            break;
        }
        case Op::degree_contract: {
            const DegreeTensor a_val{value(node.a)};
            const DegreeTensor b_val{value(node.b)};
            const DegreeTensor c_bar{node.adjoint};
            const std::size_t out_extent = c_bar.degree_extent();

            std::vector<AxisPair> slice_pairs;
            slice_pairs.reserve(node.pairs.size());
            for (const auto& [ax_a, ax_b] : node.pairs) {
                slice_pairs.emplace_back(ax_a - 1, ax_b - 1);
            }
            const AdjointPlan plan = make_adjoint_plan(
                a_val.inner().order() - 1, b_val.inner().order() - 1, slice_pairs);

            const bool need_a = nodes_[static_cast<std::size_t>(node.a)].needs_grad;
            const bool need_b = nodes_[static_cast<std::size_t>(node.b)].needs_grad;
            DenseTensor a_bar(a_val.inner().shape());
            DenseTensor b_bar(b_val.inner().shape());

            // The degree convolution transposes to a correlation: slice ja
            // of Abar collects every output degree ja + jb that was formed.
            for (std::size_t j = 0; j < out_extent; ++j) {
                const DenseTensor c_slice = c_bar.slice_tensor(j);
                const std::size_t ja_lo =
                    (j + 1 > b_val.degree_extent()) ? j + 1 - b_val.degree_extent() : 0;
                const std::size_t ja_hi = std::min(j, a_val.degree_extent() - 1);
                for (std::size_t ja = ja_lo; ja <= ja_hi; ++ja) {
                    const std::size_t jb = j - ja;
                    if (need_a) {
                        const DenseTensor term =
                            adjoint_for_a(c_slice, b_val.slice_tensor(jb), plan);
                        kernels::axpy(1.0, term.data(),
                                      a_bar.data() + ja * a_val.slice_size(), term.size());
                    }
                    if (need_b) {
                        const DenseTensor term =
                            adjoint_for_b(a_val.slice_tensor(ja), c_slice, plan);
                        kernels::axpy(1.0, term.data(),
                                      b_bar.data() + jb * b_val.slice_size(), term.size());
                    }
                }
            }
            if (need_a) {
                accumulate(node.a, std::move(a_bar));
            }
            if (need_b) {
                accumulate(node.b, std::move(b_bar));
            }
            break;
        }
        }
        // Interior adjoints are dead once propagated; free the memory.
        if (node.op != Op::parameter) {
            node.adjoint = DenseTensor{};
            node.has_adjoint = false;
        }
    }
}

bool GradientTape::has_grad(std::size_t slot) const {
    return slot < param_grad_set_.size() && param_grad_set_[slot];
}

const DenseTensor& GradientTape::grad(std::size_t slot) const {
    if (slot >= params_.size()) {
        throw Error("unregistered parameter slot");
    }
    if (!param_grad_set_[slot]) {
        throw Error("no gradient recorded for this parameter slot");
    }
    return param_grads_[slot];
}

} // namespace tnid
