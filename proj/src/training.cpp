#include "deepen/training.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "deepen/rng.hpp"

namespace deepen {

void TrainConfig::validate() const {
    spec.validate();
    if (learning_rate <= 0.0) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (post_insertion_learning_rate && *post_insertion_learning_rate <= 0.0) {
        throw std::invalid_argument("TrainConfig: post_insertion_learning_rate must be > 0");
    }
    if (total_iterations < 0) throw std::invalid_argument("TrainConfig: negative iteration count");
    if (insertion) {
        if (insertion->iteration < 0 || insertion->iteration >= total_iterations) {
            throw std::invalid_argument(
                "TrainConfig: insertion_iteration must lie in [0, total_iterations)");
        }
    }
    if (optimizer.kind == OptimizerConfig::Kind::MiniBatchSgd && optimizer.batch_size < 1) {
        throw std::invalid_argument("TrainConfig: mini-batch optimizer needs batch_size >= 1");
    }
    if (initial_params && !(initial_params->spec == spec)) {
        throw std::invalid_argument("TrainConfig: initial_params do not match spec");
    }
}

ParamSet gd_step(const ParamSet& params, const GradientSet& grads, double lr) {
    if (lr < 0.0) throw std::invalid_argument("gd_step: learning rate must be >= 0");
    if (!(grads.spec == params.spec)) {
        throw std::invalid_argument("gd_step: gradient shapes do not match parameters");
    }
    ParamSet out = params;
    if (lr == 0.0) return out;  // bit-identical by contract
    std::vector<double*> theta = out.scalar_view();
    std::vector<const double*> g = grads.scalar_view();
    if (theta.size() != g.size()) {
        throw std::invalid_argument("gd_step: scalar counts differ");
    }
    for (std::size_t j = 0; j < theta.size(); ++j) *theta[j] -= lr * *g[j];
    return out;
}

namespace {

Dataset gather(const Dataset& data, const std::vector<std::size_t>& order, std::size_t begin,
               std::size_t end) {
    Dataset out;
    out.features = Matrix(end - begin, data.features.cols);
    out.labels = Matrix(end - begin, data.labels.cols);
    for (std::size_t r = begin; r < end; ++r) {
        const std::size_t i = order[r];
        for (std::size_t j = 0; j < data.features.cols; ++j) {
            out.features(r - begin, j) = data.features(i, j);
        }
        for (std::size_t j = 0; j < data.labels.cols; ++j) {
            out.labels(r - begin, j) = data.labels(i, j);
        }
    }
    return out;
}

}  // namespace

TrainingHistory train(const TrainConfig& config, const Dataset& train_data,
                      const Dataset& test_data) {
    config.validate();
    if (train_data.size() == 0) throw std::invalid_argument("train: empty training set");

    TrainingHistory history;
    ParamSet params = config.initial_params ? *config.initial_params
                                            : init_params(config.spec, config.seed);
    double lr = config.learning_rate;
    history.events.push_back({0, "init", -1, {}, params.scalar_count(), lr});

    const bool minibatch = config.optimizer.kind == OptimizerConfig::Kind::MiniBatchSgd;
    const std::size_t n = train_data.size();
    const std::size_t batch_size =
        minibatch ? std::min<std::size_t>(static_cast<std::size_t>(config.optimizer.batch_size), n)
                  : n;
    RandomStream shuffle_stream(config.seed, "batch-shuffle");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::size_t cursor = 0;

    for (int t = 0;; ++t) {
        // Row t describes the network after t updates; at the insertion
        // iteration this is still the pre-insertion network, so baseline and
        // insertion runs share a bit-identical prefix.
        BackpropResult step;
        double loss;
        if (minibatch) {
            loss = objective(params, train_data);
        } else {
            step = backprop(params, train_data);  // loss record and update gradient in one pass
            loss = step.loss;
        }
        if (!std::isfinite(loss) || !params.all_finite()) {
            history.diverged = true;
            history.diverged_at = t;
            break;
        }
        history.records.push_back({t, loss, test_error(params, test_data)});
        if (t == config.total_iterations) break;

        if (config.insertion && t == config.insertion->iteration) {
            const InsertionConfig& ins = *config.insertion;
            const ExtendedNetwork ext = build_fully_extended(params, ins.resnet_inner_scale);
            const MeritReport report =
                minibatch ? compute_merits_minibatch(ext, train_data,
                                                     static_cast<int>(batch_size), ins.strategy)
                          : compute_merits(ext, train_data, ins.strategy);
            params = select_and_insert(params, report, ins.resnet_inner_scale);

            TrainingEvent event{t, "insertion", report.chosen.index, {}, params.scalar_count(), lr};
            for (const auto& c : report.candidates) event.merits.push_back(c.merit);
            history.events.push_back(std::move(event));

            const double post_lr = config.post_insertion_learning_rate.value_or(lr);
            if (post_lr != lr) {
                lr = post_lr;
                history.events.push_back({t, "lr_change", -1, {}, params.scalar_count(), lr});
            }
            if (!minibatch) step = backprop(params, train_data);  // grads for the grown net
        }

        if (minibatch) {
            if (cursor == 0) shuffle_stream.shuffle(order);
            const std::size_t stop = std::min(n, cursor + batch_size);
            step = backprop(params, gather(train_data, order, cursor, stop));
            cursor = stop == n ? 0 : stop;
        }
        params = gd_step(params, step.grads, lr);
    }

    history.final_params = std::move(params);
    return history;
}

}  // namespace deepen
