#include "tnid/train.hpp"

#include "tnid/error.hpp"
#include "tnid/kernels.hpp"
#include "tnid/parallel.hpp"
#include "tnid/rng.hpp"
#include "tnid/tape.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <sstream>

namespace tnid {

double mse_loss(std::span<const double> pred, std::span<const double> target) {
    if (pred.size() != target.size()) {
        throw ShapeError("prediction and target lengths differ");
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < pred.size(); ++k) {
        const double diff = pred[k] - target[k];
        sum += diff * diff;
    }
    return sum / static_cast<double>(pred.size());
}

std::size_t predict_class(std::span<const double> outputs) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < outputs.size(); ++k) {
        if (outputs[k] > outputs[best]) {
            best = k;
        }
    }
    return best;
}

double accuracy(const Model& model, const Dataset& ds, const DegreeSet& dset) {
    const bool full = dset.kind == DegreeSet::Kind::full;
    const std::size_t workers = std::min(thread_count(), ds.count == 0 ? 1 : ds.count);
    std::vector<std::size_t> correct(workers, 0);
    parallel_for(ds.count, [&](std::size_t begin, std::size_t end, std::size_t w) {
        std::size_t hits = 0;
        for (std::size_t i = begin; i < end; ++i) {
            const std::vector<double> out = full ? forward(model, ds.sample(i))
                                                 : d_degree_forward(model, ds.sample(i), dset);
            if (predict_class(out) == ds.labels[i]) {
                ++hits;
            }
        }
        correct[w] = hits;
    });
    std::size_t total = 0;
    for (const std::size_t c : correct) {
        total += c;
    }
    return static_cast<double>(total) / static_cast<double>(ds.count);
}

namespace {

class Optimizer {
public:
    Optimizer(const LossConfig& cfg, const std::vector<DenseTensor*>& params)
        : cfg_(cfg), params_(params) {
        if (cfg.optimizer == OptimizerKind::adam) {
            first_.reserve(params.size());
            second_.reserve(params.size());
            for (const DenseTensor* p : params) {
                first_.emplace_back(p->shape());
                second_.emplace_back(p->shape());
            }
        }
    }

    void step(const std::vector<DenseTensor>& grads) {
        ++steps_;
        if (cfg_.optimizer == OptimizerKind::sgd) {
            for (std::size_t s = 0; s < params_.size(); ++s) {
                add_scaled(*params_[s], -cfg_.learning_rate, grads[s]);
            }
            return;
        }
        const double correction1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
        const double correction2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
        for (std::size_t s = 0; s < params_.size(); ++s) {
            double* theta = params_[s]->data();
            double* m = first_[s].data();
            double* v = second_[s].data();
            const double* g = grads[s].data();
            const std::size_t n = params_[s]->size();
            for (std::size_t i = 0; i < n; ++i) {
                m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
                v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
                const double m_hat = m[i] / correction1;
                const double v_hat = v[i] / correction2;
                theta[i] -= cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
            }
        }
    }

private:
    LossConfig cfg_;
    const std::vector<DenseTensor*>& params_;
    std::vector<DenseTensor> first_;
    std::vector<DenseTensor> second_;
    std::size_t steps_ = 0;
};

std::vector<double> one_hot(std::size_t label, std::size_t n) {
    std::vector<double> target(n, 0.0);
    target[label] = 1.0;
    return target;
}

} // namespace

std::vector<EpochRecord> train(Model& model, const Dataset& train_set,
                               const Dataset& test_set, const DegreeSet& dset,
                               const LossConfig& cfg, const EpochCallback& on_epoch) {
    if (train_set.count == 0) {
        throw DataError("training dataset is empty");
    }
    const ModelDims dims = dims_of(model);
    if (train_set.m != dims.m || test_set.m != dims.m) {
        throw ShapeError("dataset feature count does not match the model");
    }
    if (train_set.n_classes != dims.n) {
        throw ShapeError("dataset class count does not match the model");
    }
    if (cfg.batch_size < 1 || cfg.learning_rate < 0.0) {
        throw ConfigError("batch_size must be >= 1 and learning_rate >= 0");
    }

    const std::vector<DenseTensor*> params = parameter_cores(model);
    const std::vector<const DenseTensor*> const_params(params.begin(), params.end());
    const std::size_t slots = params.size();
    const bool full = dset.kind == DegreeSet::Kind::full;

    Optimizer optimizer(cfg, params);
    Rng shuffle_rng(Rng::derive(cfg.seed, 0x5u));

    const std::size_t max_workers = std::min(thread_count(), cfg.batch_size);
    std::vector<std::unique_ptr<GradientTape>> tapes;
    for (std::size_t w = 0; w < max_workers; ++w) {
        tapes.push_back(std::make_unique<GradientTape>(const_params));
    }
    // Per-worker gradient partials combined in worker order; with a fixed
    // thread count the reduction order is fixed.
    std::vector<std::vector<DenseTensor>> worker_grads(max_workers);
    std::vector<double> worker_loss(max_workers, 0.0);
    for (auto& grads : worker_grads) {
        grads.reserve(slots);
        for (const DenseTensor* p : params) {
            grads.emplace_back(p->shape());
        }
    }
    std::vector<DenseTensor> batch_grads;
    batch_grads.reserve(slots);
    for (const DenseTensor* p : params) {
        batch_grads.emplace_back(p->shape());
    }

    std::vector<std::size_t> order(train_set.count);
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }

    std::vector<EpochRecord> history;
    history.reserve(cfg.epochs);
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t base = 0; base < order.size(); base += cfg.batch_size) {
            const std::size_t batch = std::min(cfg.batch_size, order.size() - base);
            const double inv_batch = 1.0 / static_cast<double>(batch);

            // Stale partials from short trailing batches must not leak in.
            for (std::size_t w = 0; w < max_workers; ++w) {
                worker_loss[w] = 0.0;
                for (DenseTensor& g : worker_grads[w]) {
                    std::fill(g.elements().begin(), g.elements().end(), 0.0);
                }
            }

            parallel_for(batch, [&](std::size_t begin, std::size_t end, std::size_t w) {
                GradientTape& tape = *tapes[w];
                double local_loss = 0.0;
                for (std::size_t i = begin; i < end; ++i) {
                    const std::size_t sample = order[base + i];
                    tape.reset();
                    const int out = full
                                        ? forward_plan(tape, model, train_set.sample(sample))
                                        : d_degree_plan(tape, model, train_set.sample(sample),
                                                        dset);
                    const int loss =
                        tape.mse(out, one_hot(train_set.labels[sample], dims.n));
                    local_loss += tape.scalar(loss);
                    tape.backward(loss, inv_batch);
                    for (std::size_t s = 0; s < slots; ++s) {
                        if (tape.has_grad(s)) {
                            add_scaled(worker_grads[w][s], 1.0, tape.grad(s));
                        }
                    }
                }
                worker_loss[w] = local_loss;
            });

            const std::size_t used_workers = std::min(max_workers, batch);
            double batch_loss = 0.0;
            for (std::size_t s = 0; s < slots; ++s) {
                std::fill(batch_grads[s].elements().begin(), batch_grads[s].elements().end(),
                          0.0);
            }
            for (std::size_t w = 0; w < used_workers; ++w) {
                batch_loss += worker_loss[w];
                for (std::size_t s = 0; s < slots; ++s) {
                    add_scaled(batch_grads[s], 1.0, worker_grads[w][s]);
                }
            }
            batch_loss *= inv_batch;
            if (!std::isfinite(batch_loss) || std::abs(batch_loss) > 1e9) {
                std::ostringstream msg;
                msg << "training diverged at epoch " << epoch << ", batch " << base / cfg.batch_size
                    << ": loss = " << batch_loss;
                throw DivergenceError(msg.str());
            }
            optimizer.step(batch_grads);
            loss_sum += batch_loss * static_cast<double>(batch);
        }

        EpochRecord record;
        record.epoch = epoch;
        record.train_loss = loss_sum / static_cast<double>(train_set.count);
        record.test_accuracy = test_set.count > 0 ? accuracy(model, test_set, dset) : 0.0;
        record.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        history.push_back(record);
        if (on_epoch) {
            on_epoch(record);
        }
    }
    return history;
}

} // namespace tnid
