#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "deepen/autograd.hpp"
#include "deepen/dataset.hpp"
#include "deepen/insertion.hpp"
#include "deepen/network.hpp"

namespace deepen {

struct OptimizerConfig {
    enum class Kind { FullBatchGd, MiniBatchSgd };
    Kind kind = Kind::FullBatchGd;
    int batch_size = 0;  // MiniBatchSgd only
};

struct InsertionConfig {
    int iteration = 0;  // insert after this many parameter updates
    InsertionStrategy strategy;
    double resnet_inner_scale = 0.8;  // w1 scale of a fresh residual block
};

struct TrainConfig {
    NetworkSpec spec;
    double learning_rate = 0.1;
    std::optional<double> post_insertion_learning_rate;  // defaults to learning_rate
    int total_iterations = 0;
    std::optional<InsertionConfig> insertion;
    std::uint64_t seed = 0;
    OptimizerConfig optimizer;
    std::optional<ParamSet> initial_params;  // resume from a checkpoint instead of seeded init

    void validate() const;
};

struct TrainingRecord {
    int iteration = 0;
    double train_loss = 0.0;
    double test_error = 0.0;
};

struct TrainingEvent {
    int iteration = 0;
    std::string kind;             // "init", "insertion", "lr_change"
    int position = -1;            // insertion only
    std::vector<double> merits;   // insertion only, in candidate order
    long param_count = 0;         // trainable scalars after the event
    double learning_rate = 0.0;   // rate in effect after the event
};

/// Complete record of one training run. records[t] holds the state after t
/// parameter updates (records[0] is the freshly initialized network), so the
/// row at the insertion iteration still describes the pre-insertion network
/// and runs that only differ in insertion settings share a bit-identical
/// prefix. diverged is set when a non-finite loss aborts the run; records
/// up to the failure are kept.
struct TrainingHistory {
    std::vector<TrainingRecord> records;
    std::vector<TrainingEvent> events;
    ParamSet final_params;
    bool diverged = false;
    int diverged_at = -1;
};

/// theta <- theta - lr * grad. lr == 0 returns a bit-identical copy.
ParamSet gd_step(const ParamSet& params, const GradientSet& grads, double lr);

/// Full training loop: seeded init (or config.initial_params), one gradient
/// step per iteration, optional single layer insertion between the updates
/// of the configured iteration, loss and test error recorded every
/// iteration. Deterministic given (config, data).
TrainingHistory train(const TrainConfig& config, const Dataset& train_data,
                      const Dataset& test_data);

}  // namespace deepen
